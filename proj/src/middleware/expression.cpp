#include "figforge/middleware/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "figforge/error.hpp"
#include "figforge/util/text.hpp"

namespace figforge::middleware {

std::string describe(const Value& value) {
  if (const auto* d = std::get_if<double>(&value)) return util::format_number(*d);
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  return "'" + std::get<std::string>(value) + "'";
}

struct Expression::Node {
  enum class Kind { kNumber, kString, kBool, kIdent, kUnary, kBinary, kCall };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  std::string text;  // string literal, identifier, operator or function name
  bool boolean = false;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct FunctionArity {
  std::string_view name;
  std::size_t min_args;
  std::size_t max_args;
};

constexpr FunctionArity kFunctions[] = {
    {"min", 1, 64}, {"max", 1, 64}, {"floor", 1, 1}, {"ceil", 1, 1},
    {"abs", 1, 1},  {"sqrt", 1, 1}, {"if", 3, 3},    {"pick", 3, 129},
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    NodePtr n = parse_or();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kValidation, "expression \"" + std::string(text_) + "\": " + what +
                                            " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view op) {
    skip_space();
    if (text_.substr(pos_, op.size()) != op) return false;
    // Do not split two-character operators.
    if (op.size() == 1 && pos_ + 1 < text_.size()) {
      char next = text_[pos_ + 1];
      if ((op == "<" || op == ">" || op == "!" || op == "=") && next == '=') return false;
      if ((op == "&" && next == '&') || (op == "|" && next == '|')) return false;
    }
    pos_ += op.size();
    return true;
  }

  static NodePtr binary(std::string op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kBinary;
    n->text = std::move(op);
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  template <typename Next>
  NodePtr left_assoc(std::initializer_list<std::string_view> ops, Next next) {
    NodePtr lhs = (this->*next)();
    for (;;) {
      bool matched = false;
      for (std::string_view op : ops) {
        if (accept(op)) {
          lhs = binary(std::string(op), lhs, (this->*next)());
          matched = true;
          break;
        }
      }
      if (!matched) return lhs;
    }
  }

  NodePtr parse_or() { return left_assoc({"||"}, &Parser::parse_and); }
  NodePtr parse_and() { return left_assoc({"&&"}, &Parser::parse_eq); }
  NodePtr parse_eq() { return left_assoc({"==", "!="}, &Parser::parse_rel); }
  NodePtr parse_rel() { return left_assoc({"<=", ">=", "<", ">"}, &Parser::parse_add); }
  NodePtr parse_add() { return left_assoc({"+", "-"}, &Parser::parse_mul); }
  NodePtr parse_mul() { return left_assoc({"*", "/", "%"}, &Parser::parse_unary); }

  NodePtr parse_unary() {
    for (std::string_view op : {"-", "!"}) {
      if (accept(op)) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::kUnary;
        n->text = std::string(op);
        n->args = {parse_unary()};
        return n;
      }
    }
    return parse_primary();
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end");
    char c = text_[pos_];
    auto n = std::make_shared<Node>();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_or();
      if (!accept(")")) fail("expected ')'");
      return inner;
    }
    if (c == '\'' || c == '"') {
      std::size_t end = text_.find(c, pos_ + 1);
      if (end == std::string_view::npos) fail("unterminated string");
      n->kind = Node::Kind::kString;
      n->text = std::string(text_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        ++pos_;
      }
      auto v = util::parse_number(text_.substr(start, pos_ - start));
      if (!v) fail("bad number");
      n->kind = Node::Kind::kNumber;
      n->number = *v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                     text_[pos_] == '_')) {
        ++pos_;
      }
      std::string name(text_.substr(start, pos_ - start));
      if (name == "true" || name == "false") {
        n->kind = Node::Kind::kBool;
        n->boolean = name == "true";
        return n;
      }
      if (accept("(")) {
        n->kind = Node::Kind::kCall;
        n->text = name;
        if (!accept(")")) {
          do {
            n->args.push_back(parse_or());
          } while (accept(","));
          if (!accept(")")) fail("expected ')' after arguments of " + name);
        }
        auto fn = std::find_if(std::begin(kFunctions), std::end(kFunctions),
                               [&](const FunctionArity& f) { return f.name == name; });
        if (fn == std::end(kFunctions)) fail("unknown function '" + name + "'");
        if (n->args.size() < fn->min_args || n->args.size() > fn->max_args) {
          fail("wrong number of arguments to " + name);
        }
        return n;
      }
      n->kind = Node::Kind::kIdent;
      n->text = name;
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

[[noreturn]] void eval_fail(const std::string& what) { throw Error(ErrorKind::kEvaluation, what); }

double as_number(const Value& v, std::string_view context) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  eval_fail(std::string(context) + " expects a number, got " + describe(v));
}

bool as_bool(const Value& v, std::string_view context) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  eval_fail(std::string(context) + " expects a boolean, got " + describe(v));
}

Value eval(const Node& n, const Env& env) {
  switch (n.kind) {
    case Node::Kind::kNumber: return n.number;
    case Node::Kind::kString: return n.text;
    case Node::Kind::kBool: return n.boolean;
    case Node::Kind::kIdent: {
      auto it = env.find(n.text);
      if (it == env.end()) eval_fail("unknown identifier '" + n.text + "'");
      return it->second;
    }
    case Node::Kind::kUnary: {
      Value v = eval(*n.args[0], env);
      if (n.text == "-") return -as_number(v, "unary -");
      return !as_bool(v, "!");
    }
    case Node::Kind::kBinary: {
      const std::string& op = n.text;
      if (op == "&&" || op == "||") {
        bool lhs = as_bool(eval(*n.args[0], env), op);
        if (op == "&&" && !lhs) return false;
        if (op == "||" && lhs) return true;
        return as_bool(eval(*n.args[1], env), op);
      }
      Value a = eval(*n.args[0], env);
      Value b = eval(*n.args[1], env);
      if (op == "==" || op == "!=") {
        if (a.index() != b.index()) {
          eval_fail("cannot compare " + describe(a) + " with " + describe(b));
        }
        return (a == b) == (op == "==");
      }
      double x = as_number(a, op);
      double y = as_number(b, op);
      if (op == "<") return x < y;
      if (op == "<=") return x <= y;
      if (op == ">") return x > y;
      if (op == ">=") return x >= y;
      if (op == "+") return x + y;
      if (op == "-") return x - y;
      if (op == "*") return x * y;
      if (y == 0.0) eval_fail("division by zero in '" + op + "'");
      if (op == "/") return x / y;
      return std::fmod(x, y);
    }
    case Node::Kind::kCall: {
      const std::string& f = n.text;
      if (f == "if") {
        return as_bool(eval(*n.args[0], env), "if") ? eval(*n.args[1], env)
                                                     : eval(*n.args[2], env);
      }
      if (f == "pick") {
        Value key = eval(*n.args[0], env);
        std::size_t i = 1;
        for (; i + 1 < n.args.size(); i += 2) {
          if (eval(*n.args[i], env) == key) return eval(*n.args[i + 1], env);
        }
        if (i < n.args.size()) return eval(*n.args[i], env);
        eval_fail("pick has no case for " + describe(key));
      }
      std::vector<double> xs;
      for (const auto& a : n.args) xs.push_back(as_number(eval(*a, env), f));
      if (f == "min") return *std::min_element(xs.begin(), xs.end());
      if (f == "max") return *std::max_element(xs.begin(), xs.end());
      if (f == "floor") return std::floor(xs[0]);
      if (f == "ceil") return std::ceil(xs[0]);
      if (f == "abs") return std::abs(xs[0]);
      if (xs[0] < 0) eval_fail("sqrt of negative number");
      return std::sqrt(xs[0]);
    }
  }
  eval_fail("corrupt expression");
}

double mul_bound(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;  // avoids inf * 0
  return a * b;
}

Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

std::optional<Interval> bound_of(const Node& n, const IntervalEnv& env) {
  switch (n.kind) {
    case Node::Kind::kNumber: return Interval{n.number, n.number};
    case Node::Kind::kString:
    case Node::Kind::kBool: return std::nullopt;
    case Node::Kind::kIdent: {
      auto it = env.find(n.text);
      if (it == env.end()) return std::nullopt;
      return it->second;
    }
    case Node::Kind::kUnary: {
      if (n.text != "-") return std::nullopt;
      auto a = bound_of(*n.args[0], env);
      if (!a) return std::nullopt;
      return Interval{-a->hi, -a->lo};
    }
    case Node::Kind::kBinary: {
      const std::string& op = n.text;
      if (op != "+" && op != "-" && op != "*" && op != "/" && op != "%") return std::nullopt;
      auto a = bound_of(*n.args[0], env);
      auto b = bound_of(*n.args[1], env);
      if (!a || !b) return std::nullopt;
      if (op == "+") return Interval{a->lo + b->lo, a->hi + b->hi};
      if (op == "-") return Interval{a->lo - b->hi, a->hi - b->lo};
      if (op == "*") {
        double c[] = {mul_bound(a->lo, b->lo), mul_bound(a->lo, b->hi), mul_bound(a->hi, b->lo),
                      mul_bound(a->hi, b->hi)};
        return Interval{*std::min_element(std::begin(c), std::end(c)),
                        *std::max_element(std::begin(c), std::end(c))};
      }
      if (op == "/") {
        if (b->lo <= 0.0 && b->hi >= 0.0) return Interval{-kInf, kInf};
        double c[] = {a->lo / b->lo, a->lo / b->hi, a->hi / b->lo, a->hi / b->hi};
        for (double& v : c) {
          if (std::isnan(v)) v = 0.0;
        }
        return Interval{*std::min_element(std::begin(c), std::end(c)),
                        *std::max_element(std::begin(c), std::end(c))};
      }
      double m = std::max(std::abs(b->lo), std::abs(b->hi));
      double lo = a->lo >= 0.0 ? 0.0 : std::max(-m, a->lo);
      double hi = a->hi <= 0.0 ? 0.0 : std::min(m, a->hi);
      return Interval{lo, hi};
    }
    case Node::Kind::kCall: {
      const std::string& f = n.text;
      if (f == "if") {
        auto a = bound_of(*n.args[1], env);
        auto b = bound_of(*n.args[2], env);
        if (!a || !b) return std::nullopt;
        return hull(*a, *b);
      }
      if (f == "pick") {
        std::optional<Interval> out;
        std::size_t i = 1;
        for (; i + 1 < n.args.size(); i += 2) {
          auto v = bound_of(*n.args[i + 1], env);
          if (!v) return std::nullopt;
          out = out ? hull(*out, *v) : *v;
        }
        if (i < n.args.size()) {
          auto v = bound_of(*n.args[i], env);
          if (!v) return std::nullopt;
          out = out ? hull(*out, *v) : *v;
        }
        return out;
      }
      std::vector<Interval> xs;
      for (const auto& a : n.args) {
        auto v = bound_of(*a, env);
        if (!v) return std::nullopt;
        xs.push_back(*v);
      }
      if (f == "min" || f == "max") {
        Interval out = xs[0];
        for (const auto& x : xs) {
          if (f == "min") {
            out = {std::min(out.lo, x.lo), std::min(out.hi, x.hi)};
          } else {
            out = {std::max(out.lo, x.lo), std::max(out.hi, x.hi)};
          }
        }
        return out;
      }
      const Interval& x = xs[0];
      if (f == "floor") return Interval{std::floor(x.lo), std::floor(x.hi)};
      if (f == "ceil") return Interval{std::ceil(x.lo), std::ceil(x.hi)};
      if (f == "abs") {
        if (x.lo >= 0) return x;
        if (x.hi <= 0) return Interval{-x.hi, -x.lo};
        return Interval{0.0, std::max(-x.lo, x.hi)};
      }
      return Interval{std::sqrt(std::max(0.0, x.lo)), std::sqrt(std::max(0.0, x.hi))};
    }
  }
  return std::nullopt;
}

void identifiers_of(const Node& n, std::set<std::string>& out) {
  if (n.kind == Node::Kind::kIdent) out.insert(n.text);
  for (const auto& a : n.args) identifiers_of(*a, out);
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  e.root_ = Parser(text).parse_all();
  return e;
}

Value Expression::evaluate(const Env& env) const {
  if (!root_) throw Error(ErrorKind::kEvaluation, "empty expression");
  return eval(*root_, env);
}

double Expression::evaluate_number(const Env& env) const {
  return as_number(evaluate(env), "'" + text_ + "'");
}

std::optional<Interval> Expression::bound(const IntervalEnv& env) const {
  if (!root_) return std::nullopt;
  return bound_of(*root_, env);
}

void Expression::collect_identifiers(std::set<std::string>& out) const {
  if (root_) identifiers_of(*root_, out);
}

TextTemplate TextTemplate::parse(std::string_view text) {
  TextTemplate t;
  std::string literal;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      literal.push_back(c);
      ++i;
      continue;
    }
    if (c == '}') {
      throw Error(ErrorKind::kValidation, "template \"" + std::string(text) + "\": stray '}'");
    }
    if (c == '{') {
      std::size_t end = text.find('}', i + 1);
      if (end == std::string_view::npos) {
        throw Error(ErrorKind::kValidation,
                    "template \"" + std::string(text) + "\": unterminated '{'");
      }
      if (!literal.empty()) t.parts_.emplace_back(std::move(literal));
      literal.clear();
      t.parts_.emplace_back(Expression::parse(text.substr(i + 1, end - i - 1)));
      i = end;
      continue;
    }
    literal.push_back(c);
  }
  if (!literal.empty()) t.parts_.emplace_back(std::move(literal));
  return t;
}

std::string TextTemplate::render(const Env& env) const {
  std::string out;
  for (const auto& part : parts_) {
    if (const auto* s = std::get_if<std::string>(&part)) {
      out += *s;
      continue;
    }
    Value v = std::get<Expression>(part).evaluate(env);
    if (const auto* d = std::get_if<double>(&v)) {
      if (!std::isfinite(*d)) throw Error(ErrorKind::kEvaluation, "non-finite value in text");
      out += util::format_number(*d);
    } else if (const auto* b = std::get_if<bool>(&v)) {
      out += *b ? "true" : "false";
    } else {
      out += std::get<std::string>(v);
    }
  }
  return out;
}

void TextTemplate::collect_identifiers(std::set<std::string>& out) const {
  for (const auto& part : parts_) {
    if (const auto* e = std::get_if<Expression>(&part)) e->collect_identifiers(out);
  }
}

bool TextTemplate::has_expressions() const {
  return std::any_of(parts_.begin(), parts_.end(),
                     [](const auto& p) { return std::holds_alternative<Expression>(p); });
}

}  // namespace figforge::middleware
