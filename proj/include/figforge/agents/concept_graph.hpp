#pragma once

#include <string>
#include <vector>

namespace figforge::agents {

struct Concept {
  std::string id;
  std::string name;
  std::string description;
  int order_hint = 0;

  bool operator==(const Concept&) const = default;
};

struct Relation {
  std::string source;
  std::string target;
  std::string label;

  bool operator==(const Relation&) const = default;
};

struct ConceptGraph {
  std::string theme;
  std::vector<Concept> concepts;
  std::vector<Relation> edges;

  const Concept* find(const std::string& id) const {
    for (const auto& c : concepts) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }

  bool operator==(const ConceptGraph&) const = default;
};

}  // namespace figforge::agents
