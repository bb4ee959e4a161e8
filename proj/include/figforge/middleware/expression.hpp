#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace figforge::middleware {

/// Runtime value of template expressions and parameters. Integers are
/// doubles with an integral value.
using Value = std::variant<double, std::string, bool>;

std::string describe(const Value& value);

using Env = std::map<std::string, Value, std::less<>>;

/// Closed numeric range; infinite ends mean unbounded.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Names absent from the map are treated as non-numeric.
using IntervalEnv = std::map<std::string, Interval, std::less<>>;

/// Expression over template parameters:
///   || && == != < <= > >= + - * / % unary - !, literals (numbers, 'text',
///   "text", true, false), identifiers, and the functions min, max, floor,
///   ceil, abs, sqrt, if(c, a, b) and pick(key, k1, v1, k2, v2, ..., [default]).
class Expression {
 public:
  Expression() = default;

  /// Throws kValidation describing the first syntax problem.
  static Expression parse(std::string_view text);

  /// Throws kEvaluation on type errors, unknown identifiers, division by
  /// zero and square roots of negative numbers.
  Value evaluate(const Env& env) const;
  double evaluate_number(const Env& env) const;

  /// Range of the numeric result over all environments consistent with
  /// `env`, or nullopt when the expression is not provably numeric.
  std::optional<Interval> bound(const IntervalEnv& env) const;

  void collect_identifiers(std::set<std::string>& out) const;
  const std::string& text() const { return text_; }
  bool empty() const { return root_ == nullptr; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

/// Text with embedded "{expr}" segments; "{{" and "}}" are literal braces.
class TextTemplate {
 public:
  TextTemplate() = default;
  static TextTemplate parse(std::string_view text);

  std::string render(const Env& env) const;
  void collect_identifiers(std::set<std::string>& out) const;
  bool has_expressions() const;

 private:
  std::vector<std::variant<std::string, Expression>> parts_;
};

}  // namespace figforge::middleware
