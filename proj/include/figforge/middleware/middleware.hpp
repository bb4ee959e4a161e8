#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "figforge/middleware/expression.hpp"
#include "figforge/scene/canvas.hpp"

namespace figforge::middleware {

/// Upper bound on the iterations of one repeated instruction.
inline constexpr int kMaxRepeat = 256;

enum class ParamKind { kNumber, kInteger, kStringEnum, kBoolean };
std::string_view to_string(ParamKind kind);
std::optional<ParamKind> parse_param_kind(std::string_view text);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kNumber;
  Value default_value = 0.0;
  std::optional<double> min;          // number / integer
  std::optional<double> max;          // number / integer
  std::vector<std::string> allowed;   // string_enum

  bool operator==(const ParamSpec&) const = default;
};

/// Throws kConstraintViolation when `value` does not fit `spec`.
void check_value(const ParamSpec& spec, const Value& value);

/// A numeric attribute is a literal number or an expression; a text attribute
/// is a template string (see Instruction for which fields are which).
using Field = std::variant<double, std::string>;

enum class EmitKind { kElement, kConnector };

struct Repeat {
  std::string var;
  Field count;
  bool operator==(const Repeat&) const = default;
};

/// One template instruction emitting an element or a connector per
/// iteration.
///
/// Element fields: kind, x, y, width, height, z, label, parent, plus style
/// fields. Connector fields: source, target (local names) or source.x,
/// source.y, target.x, target.y (free points), arrow_head, label, plus style
/// fields. Style fields: fill_color, stroke_color, stroke_width,
/// dash_pattern, font_size, font_family, opacity, rounding_radius.
///
/// Numeric fields accept a number or an expression string. kind,
/// arrow_head, colours, font_family and dash_pattern are literal strings, or
/// an expression when prefixed with '='. name, label, parent, source and
/// target are text templates with {expr} interpolation.
struct Instruction {
  EmitKind emit = EmitKind::kElement;
  std::string name;
  std::optional<Repeat> repeat;
  std::string when;
  std::map<std::string, Field> fields;
  std::vector<std::pair<Field, Field>> waypoints;

  bool operator==(const Instruction&) const = default;
};

enum class ProvenanceKind { kExtracted, kMutated, kCrossover };
std::string_view to_string(ProvenanceKind kind);

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::kExtracted;
  std::string source_paper;          // extracted
  std::vector<std::string> parents;  // mutated (one) / crossover (two or more)

  bool operator==(const Provenance&) const = default;
};

struct Middleware {
  std::string id;
  std::string name;
  std::string description;
  std::string theme;
  std::string concept_id;
  std::vector<ParamSpec> params;
  std::vector<Instruction> body;
  double usage_s = 0.0;
  long usage_n = 0;
  Provenance provenance;

  /// S/N, or nullopt for a middleware that was never used.
  std::optional<double> mes() const;
  const ParamSpec* find_param(std::string_view param) const;

  bool operator==(const Middleware&) const = default;
};

/// Static checks: parameter specs, expression syntax, references to
/// undeclared parameters, field names and literal values, and finite
/// repetition bounds. Returns one message per problem; empty means valid.
std::vector<std::string> validation_problems(const Middleware& mw);
/// Throws kValidation joining validation_problems().
void validate(const Middleware& mw);

struct Fragment {
  std::vector<scene::SceneElement> elements;
  std::vector<scene::Connector> connectors;
};

using Bindings = std::map<std::string, Value, std::less<>>;

/// Evaluates the body with `bindings` over the parameter defaults. Element
/// and connector ids are `id_prefix` + local name (or "e<n>" / "c<n>" for
/// unnamed instructions). Throws kUnknownParameter, kConstraintViolation or
/// kEvaluation.
Fragment instantiate(const Middleware& mw, const Bindings& bindings,
                     const std::string& id_prefix);

}  // namespace figforge::middleware
