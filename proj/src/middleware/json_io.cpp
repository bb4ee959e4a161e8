#include "figforge/middleware/json_io.hpp"

#include <cmath>

#include "figforge/error.hpp"

namespace figforge::middleware {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::kValidation, what); }

const json& member(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) bad(context + ": missing '" + key + "'");
  return obj.at(key);
}

std::string string_member(const json& obj, const char* key, const std::string& context) {
  const json& v = member(obj, key, context);
  if (!v.is_string()) bad(context + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key)) return "";
  return string_member(obj, key, context);
}

json field_to_json(const Field& f) {
  if (const auto* d = std::get_if<double>(&f)) return *d;
  return std::get<std::string>(f);
}

Field field_from_json(const json& j, const std::string& context) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  bad(context + " must be a number or a string");
}

json number_json(double d) {
  if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  return d;
}

}  // namespace

json value_to_json(const Value& value) {
  if (const auto* d = std::get_if<double>(&value)) return number_json(*d);
  if (const auto* b = std::get_if<bool>(&value)) return *b;
  return std::get<std::string>(value);
}

Value value_from_json(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  bad("value " + j.dump() + " is not a number, string or boolean");
}

json to_json(const ParamSpec& spec) {
  json j = {{"name", spec.name},
            {"kind", std::string(to_string(spec.kind))},
            {"default", value_to_json(spec.default_value)}};
  if (spec.min) j["min"] = number_json(*spec.min);
  if (spec.max) j["max"] = number_json(*spec.max);
  if (spec.kind == ParamKind::kStringEnum) j["allowed"] = spec.allowed;
  return j;
}

ParamSpec param_from_json(const json& j) {
  const std::string ctx = "parameter";
  ParamSpec p;
  p.name = string_member(j, "name", ctx);
  const std::string c = "parameter '" + p.name + "'";
  auto kind = parse_param_kind(string_member(j, "kind", c));
  if (!kind) bad(c + ": unknown kind");
  p.kind = *kind;
  p.default_value = value_from_json(member(j, "default", c));
  for (const char* key : {"min", "max"}) {
    if (!j.contains(key)) continue;
    if (!j.at(key).is_number()) bad(c + ": '" + key + "' must be a number");
    (std::string(key) == "min" ? p.min : p.max) = j.at(key).get<double>();
  }
  if (j.contains("allowed")) {
    const json& a = j.at("allowed");
    if (!a.is_array()) bad(c + ": 'allowed' must be an array");
    for (const auto& s : a) {
      if (!s.is_string()) bad(c + ": allowed values must be strings");
      p.allowed.push_back(s.get<std::string>());
    }
  }
  return p;
}

json to_json(const Instruction& ins) {
  json j = json::object();
  j["emit"] = ins.emit == EmitKind::kElement ? "element" : "connector";
  if (!ins.name.empty()) j["name"] = ins.name;
  if (ins.repeat) j["repeat"] = {{"var", ins.repeat->var}, {"count", field_to_json(ins.repeat->count)}};
  if (!ins.when.empty()) j["when"] = ins.when;
  for (const auto& [key, value] : ins.fields) {
    auto dot = key.find('.');
    if (dot != std::string::npos) {
      j[key.substr(0, dot)][key.substr(dot + 1)] = field_to_json(value);
    } else {
      j[key] = field_to_json(value);
    }
  }
  if (!ins.waypoints.empty()) {
    json pts = json::array();
    for (const auto& [x, y] : ins.waypoints) {
      pts.push_back({{"x", field_to_json(x)}, {"y", field_to_json(y)}});
    }
    j["waypoints"] = pts;
  }
  return j;
}

Instruction instruction_from_json(const json& j) {
  const std::string ctx = "instruction";
  if (!j.is_object()) bad(ctx + " must be an object");
  Instruction ins;
  std::string emit = string_member(j, "emit", ctx);
  if (emit == "element") {
    ins.emit = EmitKind::kElement;
  } else if (emit == "connector") {
    ins.emit = EmitKind::kConnector;
  } else {
    bad(ctx + ": unknown emit '" + emit + "'");
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "emit") continue;
    if (key == "name") {
      if (!value.is_string()) bad(ctx + ": 'name' must be a string");
      ins.name = value.get<std::string>();
    } else if (key == "when") {
      if (!value.is_string()) bad(ctx + ": 'when' must be a string");
      ins.when = value.get<std::string>();
    } else if (key == "repeat") {
      Repeat r;
      r.var = string_member(value, "var", ctx + " repeat");
      r.count = field_from_json(member(value, "count", ctx + " repeat"), ctx + " repeat count");
      ins.repeat = r;
    } else if (key == "waypoints") {
      if (!value.is_array()) bad(ctx + ": 'waypoints' must be an array");
      for (const auto& p : value) {
        ins.waypoints.emplace_back(field_from_json(member(p, "x", ctx + " waypoint"), "x"),
                                   field_from_json(member(p, "y", ctx + " waypoint"), "y"));
      }
    } else if ((key == "source" || key == "target") && value.is_object()) {
      for (const auto& [sub, v] : value.items()) {
        if (sub != "x" && sub != "y") bad(ctx + ": unknown point member '" + sub + "'");
        ins.fields[key + "." + sub] = field_from_json(v, key + "." + sub);
      }
    } else {
      ins.fields[key] = field_from_json(value, ctx + " field '" + key + "'");
    }
  }
  return ins;
}

json proposal_json(const Middleware& mw) {
  json params = json::array();
  for (const auto& p : mw.params) params.push_back(to_json(p));
  json body = json::array();
  for (const auto& ins : mw.body) body.push_back(to_json(ins));
  return {{"name", mw.name}, {"description", mw.description}, {"params", params},
          {"body", body}};
}

Middleware middleware_from_proposal(const json& j) {
  const std::string ctx = "middleware proposal";
  if (!j.is_object()) bad(ctx + " must be an object");
  Middleware mw;
  mw.name = string_member(j, "name", ctx);
  mw.description = optional_string(j, "description", ctx);
  const json& params = member(j, "params", ctx);
  const json& body = member(j, "body", ctx);
  if (!params.is_array() || !body.is_array()) bad(ctx + ": params and body must be arrays");
  for (const auto& p : params) mw.params.push_back(param_from_json(p));
  for (const auto& ins : body) mw.body.push_back(instruction_from_json(ins));
  return mw;
}

json to_json(const Middleware& mw) {
  json j = proposal_json(mw);
  j["id"] = mw.id;
  j["theme"] = mw.theme;
  j["concept"] = mw.concept_id;
  j["usage"] = {{"S", mw.usage_s}, {"N", mw.usage_n}};
  json prov = {{"kind", std::string(to_string(mw.provenance.kind))}};
  if (mw.provenance.kind == ProvenanceKind::kExtracted) {
    prov["source_paper"] = mw.provenance.source_paper;
  } else {
    prov["parents"] = mw.provenance.parents;
  }
  j["provenance"] = prov;
  return j;
}

Middleware middleware_from_json(const json& j) {
  Middleware mw = middleware_from_proposal(j);
  const std::string ctx = "middleware '" + mw.name + "'";
  mw.id = string_member(j, "id", ctx);
  mw.theme = string_member(j, "theme", ctx);
  mw.concept_id = string_member(j, "concept", ctx);
  const json& usage = member(j, "usage", ctx);
  const json& s = member(usage, "S", ctx + " usage");
  const json& n = member(usage, "N", ctx + " usage");
  if (!s.is_number() || !n.is_number_integer()) bad(ctx + ": malformed usage");
  mw.usage_s = s.get<double>();
  mw.usage_n = n.get<long>();
  if (mw.usage_n < 0 || mw.usage_s < 0 || (mw.usage_n == 0 && mw.usage_s != 0)) {
    bad(ctx + ": inconsistent usage statistics");
  }
  const json& prov = member(j, "provenance", ctx);
  std::string kind = string_member(prov, "kind", ctx + " provenance");
  if (kind == "extracted") {
    mw.provenance.kind = ProvenanceKind::kExtracted;
    mw.provenance.source_paper = string_member(prov, "source_paper", ctx + " provenance");
  } else if (kind == "mutated" || kind == "crossover") {
    mw.provenance.kind = kind == "mutated" ? ProvenanceKind::kMutated : ProvenanceKind::kCrossover;
    const json& parents = member(prov, "parents", ctx + " provenance");
    if (!parents.is_array()) bad(ctx + ": provenance parents must be an array");
    for (const auto& p : parents) {
      if (!p.is_string()) bad(ctx + ": provenance parents must be strings");
      mw.provenance.parents.push_back(p.get<std::string>());
    }
  } else {
    bad(ctx + ": unknown provenance kind '" + kind + "'");
  }
  return mw;
}

Bindings bindings_from_json(const json& j) {
  if (!j.is_object()) bad("bindings must be an object");
  Bindings b;
  for (const auto& [k, v] : j.items()) b[k] = value_from_json(v);
  return b;
}

json to_json(const Bindings& bindings) {
  json j = json::object();
  for (const auto& [k, v] : bindings) j[k] = value_to_json(v);
  return j;
}

}  // namespace figforge::middleware
