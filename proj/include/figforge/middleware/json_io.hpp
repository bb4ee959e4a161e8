#pragma once

#include <json.hpp>

#include "figforge/middleware/middleware.hpp"

namespace figforge::middleware {

nlohmann::json value_to_json(const Value& value);
/// Throws kValidation for JSON types with no Value counterpart.
Value value_from_json(const nlohmann::json& json);

nlohmann::json to_json(const ParamSpec& spec);
nlohmann::json to_json(const Instruction& ins);
/// Full record including usage statistics and provenance.
nlohmann::json to_json(const Middleware& mw);

/// Parsers throw kValidation naming the offending member.
ParamSpec param_from_json(const nlohmann::json& json);
Instruction instruction_from_json(const nlohmann::json& json);
Middleware middleware_from_json(const nlohmann::json& json);

/// The part of a middleware a constructor proposes:
/// {name, description, params, body}. Identity, placement and statistics
/// are assigned by the caller.
nlohmann::json proposal_json(const Middleware& mw);
Middleware middleware_from_proposal(const nlohmann::json& json);

Bindings bindings_from_json(const nlohmann::json& json);
nlohmann::json to_json(const Bindings& bindings);

}  // namespace figforge::middleware
