#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace figforge::scene::xml {

/// Minimal element tree produced by a strict (expat) parse. Attribute order
/// is document order.
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;
  std::string text;

  const std::string* attribute(std::string_view key) const;
  const Node* child(std::string_view name) const;
};

/// Throws kMalformedXml with expat's message and line on any violation.
Node parse(std::string_view document);

bool is_well_formed(std::string_view document);

std::string escape_attribute(std::string_view text);
std::string escape_text(std::string_view text);

}  // namespace figforge::scene::xml
