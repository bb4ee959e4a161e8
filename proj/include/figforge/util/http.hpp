#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace figforge::util {

/// POSTs `body` as JSON to `base_url` + `path` with a bearer token and
/// returns the parsed response. `base_url` is scheme://host[:port][/prefix].
/// Throws kBackendFailure on transport errors, non-2xx status or a body that
/// is not JSON.
nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const std::string& api_key, const nlohmann::json& body,
                         std::chrono::seconds timeout);

}  // namespace figforge::util
