#include "figforge/middleware/middleware.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "figforge/error.hpp"
#include "figforge/util/text.hpp"

namespace figforge::middleware {

namespace {

enum class FieldType { kNumber, kLiteral, kTemplate };

struct FieldInfo {
  std::string_view name;
  FieldType type;
  bool element;
  bool connector;
};

constexpr FieldInfo kFields[] = {
    {"kind", FieldType::kLiteral, true, false},
    {"x", FieldType::kNumber, true, false},
    {"y", FieldType::kNumber, true, false},
    {"width", FieldType::kNumber, true, false},
    {"height", FieldType::kNumber, true, false},
    {"z", FieldType::kNumber, true, false},
    {"label", FieldType::kTemplate, true, true},
    {"parent", FieldType::kTemplate, true, false},
    {"source", FieldType::kTemplate, false, true},
    {"target", FieldType::kTemplate, false, true},
    {"source.x", FieldType::kNumber, false, true},
    {"source.y", FieldType::kNumber, false, true},
    {"target.x", FieldType::kNumber, false, true},
    {"target.y", FieldType::kNumber, false, true},
    {"arrow_head", FieldType::kLiteral, false, true},
    {"fill_color", FieldType::kLiteral, true, true},
    {"stroke_color", FieldType::kLiteral, true, true},
    {"stroke_width", FieldType::kNumber, true, true},
    {"dash_pattern", FieldType::kLiteral, true, true},
    {"font_size", FieldType::kNumber, true, true},
    {"font_family", FieldType::kLiteral, true, true},
    {"opacity", FieldType::kNumber, true, true},
    {"rounding_radius", FieldType::kNumber, true, true},
};

const FieldInfo* field_info(std::string_view name) {
  for (const auto& f : kFields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::optional<std::vector<double>> parse_dash(std::string_view text) {
  std::vector<double> out;
  for (const auto& tok : util::split(text, ' ')) {
    if (tok.empty()) continue;
    auto v = util::parse_number(tok);
    if (!v || !std::isfinite(*v) || *v < 0) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

/// Checks a literal (non-expression) value of a literal-typed field.
std::optional<std::string> literal_problem(std::string_view field, const std::string& v) {
  if (field == "kind" && !scene::parse_element_kind(v)) return "unknown kind '" + v + "'";
  if (field == "arrow_head" && !scene::parse_arrow_head(v)) {
    return "unknown arrow_head '" + v + "'";
  }
  if ((field == "fill_color" || field == "stroke_color") && !scene::is_hex_color(v)) {
    return std::string(field) + " '" + v + "' is not #RRGGBB";
  }
  if (field == "dash_pattern" && !parse_dash(v)) return "bad dash_pattern '" + v + "'";
  if (field == "font_family" && (v.empty() || v.find(';') != std::string::npos)) {
    return "bad font_family '" + v + "'";
  }
  return std::nullopt;
}

bool is_expression_literal(const std::string& s) { return !s.empty() && s[0] == '='; }

std::string fmt_problem(std::size_t index, const std::string& what) {
  return "instruction " + std::to_string(index) + ": " + what;
}

}  // namespace

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::kNumber: return "number";
    case ParamKind::kInteger: return "integer";
    case ParamKind::kStringEnum: return "string_enum";
    case ParamKind::kBoolean: return "boolean";
  }
  return "number";
}

std::optional<ParamKind> parse_param_kind(std::string_view text) {
  for (ParamKind k :
       {ParamKind::kNumber, ParamKind::kInteger, ParamKind::kStringEnum, ParamKind::kBoolean}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(ProvenanceKind kind) {
  switch (kind) {
    case ProvenanceKind::kExtracted: return "extracted";
    case ProvenanceKind::kMutated: return "mutated";
    case ProvenanceKind::kCrossover: return "crossover";
  }
  return "extracted";
}

void check_value(const ParamSpec& spec, const Value& value) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::kConstraintViolation,
                "parameter '" + spec.name + "' = " + describe(value) + ": " + why);
  };
  switch (spec.kind) {
    case ParamKind::kNumber:
    case ParamKind::kInteger: {
      const auto* d = std::get_if<double>(&value);
      if (d == nullptr) fail("expected a number");
      if (!std::isfinite(*d)) fail("not finite");
      if (spec.kind == ParamKind::kInteger && std::floor(*d) != *d) fail("expected an integer");
      if (spec.min && *d < *spec.min) fail("below minimum " + util::format_number(*spec.min));
      if (spec.max && *d > *spec.max) fail("above maximum " + util::format_number(*spec.max));
      return;
    }
    case ParamKind::kStringEnum: {
      const auto* s = std::get_if<std::string>(&value);
      if (s == nullptr) fail("expected a string");
      if (std::find(spec.allowed.begin(), spec.allowed.end(), *s) == spec.allowed.end()) {
        fail("not one of the allowed values");
      }
      return;
    }
    case ParamKind::kBoolean:
      if (!std::holds_alternative<bool>(value)) fail("expected a boolean");
      return;
  }
}

std::optional<double> Middleware::mes() const {
  if (usage_n <= 0) return std::nullopt;
  return usage_s / static_cast<double>(usage_n);
}

const ParamSpec* Middleware::find_param(std::string_view param) const {
  for (const auto& p : params) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

std::vector<std::string> validation_problems(const Middleware& mw) {
  std::vector<std::string> problems;
  std::set<std::string> names;
  IntervalEnv ranges;
  for (const auto& p : mw.params) {
    if (!is_identifier(p.name)) {
      problems.push_back("parameter name '" + p.name + "' is not an identifier");
    }
    if (p.name == "true" || p.name == "false") {
      problems.push_back("parameter name '" + p.name + "' is reserved");
    }
    if (!names.insert(p.name).second) {
      problems.push_back("duplicate parameter '" + p.name + "'");
    }
    if (p.min && p.max && *p.min > *p.max) {
      problems.push_back("parameter '" + p.name + "' has min > max");
    }
    if (p.kind == ParamKind::kStringEnum) {
      std::set<std::string> uniq(p.allowed.begin(), p.allowed.end());
      if (p.allowed.empty() || uniq.size() != p.allowed.size()) {
        problems.push_back("parameter '" + p.name + "' needs distinct allowed values");
      }
    }
    try {
      check_value(p, p.default_value);
    } catch (const Error& e) {
      problems.push_back(std::string("default of ") + e.what());
    }
    if (p.kind == ParamKind::kNumber || p.kind == ParamKind::kInteger) {
      ranges[p.name] = Interval{p.min.value_or(-std::numeric_limits<double>::infinity()),
                                p.max.value_or(std::numeric_limits<double>::infinity())};
    }
  }

  std::set<std::string> local_names;
  for (std::size_t i = 0; i < mw.body.size(); ++i) {
    const Instruction& ins = mw.body[i];
    std::set<std::string> scope = names;
    IntervalEnv local_ranges = ranges;
    std::set<std::string> used;
    auto report = [&](const std::string& what) { problems.push_back(fmt_problem(i, what)); };
    auto compile = [&](const std::string& text, auto parse) {
      try {
        parse(text).collect_identifiers(used);
      } catch (const Error& e) {
        report(e.what());
      }
    };
    auto parse_expr = [](const std::string& t) { return Expression::parse(t); };
    auto parse_tmpl = [](const std::string& t) { return TextTemplate::parse(t); };

    if (ins.repeat) {
      const Repeat& r = *ins.repeat;
      if (!is_identifier(r.var) || names.count(r.var) != 0) {
        report("repeat variable '" + r.var + "' is not a fresh identifier");
      }
      std::optional<Interval> count;
      if (const auto* d = std::get_if<double>(&r.count)) {
        count = Interval{*d, *d};
      } else {
        const auto& text = std::get<std::string>(r.count);
        compile(text, parse_expr);
        try {
          count = Expression::parse(text).bound(ranges);
        } catch (const Error&) {
        }
      }
      if (!count || !std::isfinite(count->hi) || count->hi > kMaxRepeat) {
        report("repeat count is not bounded by " + std::to_string(kMaxRepeat));
      } else {
        local_ranges[r.var] = Interval{0.0, std::max(0.0, std::floor(count->hi) - 1.0)};
      }
      scope.insert(r.var);
    }
    if (!ins.when.empty()) compile(ins.when, parse_expr);
    compile(ins.name, parse_tmpl);
    if (ins.name.find('{') == std::string::npos && !ins.name.empty()) {
      if (!local_names.insert(ins.name).second) report("duplicate name '" + ins.name + "'");
      if (ins.repeat) report("repeated instruction needs a templated name");
    }
    if (ins.emit == EmitKind::kElement && !ins.waypoints.empty()) {
      report("waypoints are only valid on connectors");
    }

    for (const auto& [key, field] : ins.fields) {
      const FieldInfo* info = field_info(key);
      bool fits = info != nullptr &&
                  (ins.emit == EmitKind::kElement ? info->element : info->connector);
      if (!fits) {
        report("unknown field '" + key + "'");
        continue;
      }
      if (const auto* d = std::get_if<double>(&field)) {
        if (info->type != FieldType::kNumber) report("field '" + key + "' must be a string");
        if (!std::isfinite(*d)) report("field '" + key + "' is not finite");
        continue;
      }
      const auto& text = std::get<std::string>(field);
      switch (info->type) {
        case FieldType::kNumber: compile(text, parse_expr); break;
        case FieldType::kTemplate: compile(text, parse_tmpl); break;
        case FieldType::kLiteral:
          if (is_expression_literal(text)) {
            compile(text.substr(1), parse_expr);
          } else if (auto p = literal_problem(key, text)) {
            report(*p);
          }
          break;
      }
    }
    for (const auto& [wx, wy] : ins.waypoints) {
      for (const Field* f : {&wx, &wy}) {
        if (const auto* s = std::get_if<std::string>(f)) compile(*s, parse_expr);
      }
    }
    if (ins.emit == EmitKind::kConnector) {
      for (std::string end : {"source", "target"}) {
        bool by_name = ins.fields.count(end) != 0;
        bool by_point = ins.fields.count(end + ".x") != 0 && ins.fields.count(end + ".y") != 0;
        if (by_name == by_point) {
          report("connector needs exactly one of " + end + " or " + end + ".x/" + end + ".y");
        }
      }
    }
    for (const auto& id : used) {
      if (scope.count(id) == 0) report("undeclared parameter '" + id + "'");
    }
  }
  return problems;
}

void validate(const Middleware& mw) {
  auto problems = validation_problems(mw);
  if (problems.empty()) return;
  std::string msg = "middleware '" + mw.id + "' is invalid: ";
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (i > 0) msg += "; ";
    msg += problems[i];
  }
  throw Error(ErrorKind::kValidation, msg);
}

namespace {

class Instantiator {
 public:
  Instantiator(const Middleware& mw, const std::string& prefix) : mw_(mw), prefix_(prefix) {}

  Fragment run(Env env) {
    for (std::size_t i = 0; i < mw_.body.size(); ++i) {
      const Instruction& ins = mw_.body[i];
      index_ = i;
      long count = 1;
      if (ins.repeat) {
        double c = number(ins.repeat->count, env);
        if (std::floor(c) != c) fail("repeat count " + util::format_number(c) + " is fractional");
        if (c > kMaxRepeat) fail("repeat count exceeds " + std::to_string(kMaxRepeat));
        count = std::max(0L, static_cast<long>(c));
      }
      for (long k = 0; k < count; ++k) {
        Env local = env;
        if (ins.repeat) local[ins.repeat->var] = static_cast<double>(k);
        if (!ins.when.empty()) {
          Value w = Expression::parse(ins.when).evaluate(local);
          const auto* b = std::get_if<bool>(&w);
          if (b == nullptr) fail("'when' must be boolean");
          if (!*b) continue;
        }
        if (ins.emit == EmitKind::kElement) {
          emit_element(ins, local);
        } else {
          emit_connector(ins, local);
        }
      }
    }
    return finish();
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kEvaluation, "middleware '" + mw_.id + "' " +
                                            fmt_problem(index_, what));
  }

  double number(const Field& f, const Env& env) const {
    double v = 0.0;
    if (const auto* d = std::get_if<double>(&f)) {
      v = *d;
    } else {
      v = Expression::parse(std::get<std::string>(f)).evaluate_number(env);
    }
    if (!std::isfinite(v)) fail("non-finite value");
    return v;
  }

  std::optional<double> number_field(const Instruction& ins, const std::string& key,
                                     const Env& env) const {
    auto it = ins.fields.find(key);
    if (it == ins.fields.end()) return std::nullopt;
    return number(it->second, env);
  }

  std::optional<std::string> text_field(const Instruction& ins, const std::string& key,
                                        const Env& env) const {
    auto it = ins.fields.find(key);
    if (it == ins.fields.end()) return std::nullopt;
    const auto* s = std::get_if<std::string>(&it->second);
    if (s == nullptr) return util::format_number(std::get<double>(it->second));
    const FieldInfo* info = field_info(key);
    if (info != nullptr && info->type == FieldType::kLiteral) {
      if (!is_expression_literal(*s)) return *s;
      Value v = Expression::parse(s->substr(1)).evaluate(env);
      const auto* str = std::get_if<std::string>(&v);
      if (str == nullptr) fail("field '" + key + "' must evaluate to a string");
      if (auto p = literal_problem(key, *str)) fail(*p);
      return *str;
    }
    return TextTemplate::parse(*s).render(env);
  }

  scene::StyleSpec style(const Instruction& ins, const Env& env) const {
    scene::StyleSpec s;
    if (auto v = text_field(ins, "fill_color", env)) s.fill_color = *v;
    if (auto v = text_field(ins, "stroke_color", env)) s.stroke_color = *v;
    if (auto v = number_field(ins, "stroke_width", env)) s.stroke_width = *v;
    if (auto v = text_field(ins, "dash_pattern", env)) s.dash_pattern = *parse_dash(*v);
    if (auto v = number_field(ins, "font_size", env)) s.font_size = *v;
    if (auto v = text_field(ins, "font_family", env)) s.font_family = *v;
    if (auto v = number_field(ins, "opacity", env)) s.opacity = *v;
    if (auto v = number_field(ins, "rounding_radius", env)) s.rounding_radius = *v;
    try {
      scene::validate(s);
    } catch (const Error& e) {
      fail(e.what());
    }
    return s;
  }

  std::string local_name(const Instruction& ins, const Env& env, char unnamed) {
    std::string name = TextTemplate::parse(ins.name).render(env);
    if (name.empty()) name = std::string(1, unnamed) + std::to_string(unnamed_++);
    if (!names_.insert(name).second) fail("duplicate local name '" + name + "'");
    return name;
  }

  void emit_element(const Instruction& ins, const Env& env) {
    scene::SceneElement e;
    e.id = prefix_ + local_name(ins, env, 'e');
    if (auto k = text_field(ins, "kind", env)) e.kind = *scene::parse_element_kind(*k);
    e.x = number_field(ins, "x", env).value_or(0.0);
    e.y = number_field(ins, "y", env).value_or(0.0);
    e.width = number_field(ins, "width", env).value_or(0.0);
    e.height = number_field(ins, "height", env).value_or(0.0);
    if (e.width < 0 || e.height < 0) fail("negative size");
    if (auto z = number_field(ins, "z", env)) {
      if (std::floor(*z) != *z || std::abs(*z) > 1e6) fail("z must be a small integer");
      e.z_order = static_cast<int>(*z);
    }
    if (auto label = text_field(ins, "label", env); label && !label->empty()) e.label = *label;
    if (auto parent = text_field(ins, "parent", env); parent && !parent->empty()) {
      e.parent_group = prefix_ + *parent;
    }
    e.style = style(ins, env);
    elements_.push_back(std::move(e));
  }

  scene::Endpoint endpoint(const Instruction& ins, const std::string& end, const Env& env) {
    if (auto name = text_field(ins, end, env)) return prefix_ + *name;
    return scene::Point{*number_field(ins, end + ".x", env), *number_field(ins, end + ".y", env)};
  }

  void emit_connector(const Instruction& ins, const Env& env) {
    scene::Connector c;
    c.id = prefix_ + local_name(ins, env, 'c');
    c.source = endpoint(ins, "source", env);
    c.target = endpoint(ins, "target", env);
    for (const auto& [wx, wy] : ins.waypoints) c.waypoints.push_back({number(wx, env), number(wy, env)});
    if (auto a = text_field(ins, "arrow_head", env)) c.arrow_head = *scene::parse_arrow_head(*a);
    if (auto label = text_field(ins, "label", env); label && !label->empty()) c.label = *label;
    c.style = style(ins, env);
    connectors_.push_back(std::move(c));
  }

  Fragment finish() {
    // A scratch canvas checks the cross-references (parents, endpoints).
    scene::Canvas scratch;
    try {
      scratch.add_elements(elements_);
      for (const auto& c : connectors_) scratch.add_connector(c);
    } catch (const Error& e) {
      throw Error(ErrorKind::kEvaluation, "middleware '" + mw_.id + "': " + e.what());
    }
    return Fragment{std::move(elements_), std::move(connectors_)};
  }

  const Middleware& mw_;
  std::string prefix_;
  std::size_t index_ = 0;
  int unnamed_ = 0;
  std::set<std::string> names_;
  std::vector<scene::SceneElement> elements_;
  std::vector<scene::Connector> connectors_;
};

}  // namespace

Fragment instantiate(const Middleware& mw, const Bindings& bindings,
                     const std::string& id_prefix) {
  Env env;
  for (const auto& p : mw.params) env[p.name] = p.default_value;
  for (const auto& [name, value] : bindings) {
    const ParamSpec* spec = mw.find_param(name);
    if (spec == nullptr) {
      throw Error(ErrorKind::kUnknownParameter,
                  "middleware '" + mw.id + "' has no parameter '" + name + "'");
    }
    check_value(*spec, value);
    env[name] = value;
  }
  return Instantiator(mw, id_prefix).run(std::move(env));
}

}  // namespace figforge::middleware
