#include "figforge/scene/xml.hpp"

#include <expat.h>

#include "figforge/error.hpp"

namespace figforge::scene::xml {

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Node* Node::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

Node parse(std::string_view document) {
  // Nodes are addressed by their index path from the root because child
  // vectors grow while the parse is in progress.
  struct Builder {
    Node root;
    std::vector<std::size_t> path;  // child indices from root
    bool has_root = false;
    Node* current() {
      Node* n = &root;
      for (std::size_t i : path) n = &n->children[i];
      return n;
    }
  } builder;

  XML_Parser parser = XML_ParserCreate("UTF-8");
  if (parser == nullptr) throw Error(ErrorKind::kMalformedXml, "cannot create XML parser");
  XML_SetUserData(parser, &builder);
  XML_SetElementHandler(
      parser,
      [](void* user, const XML_Char* name, const XML_Char** attrs) {
        auto* b = static_cast<Builder*>(user);
        Node* node = nullptr;
        if (!b->has_root) {
          b->has_root = true;
          node = &b->root;
          node->name = name;
        } else {
          Node* parent = b->current();
          parent->children.push_back(Node{});
          b->path.push_back(parent->children.size() - 1);
          node = &parent->children.back();
          node->name = name;
        }
        for (int i = 0; attrs[i] != nullptr; i += 2) {
          node->attributes.emplace_back(attrs[i], attrs[i + 1]);
        }
      },
      [](void* user, const XML_Char* /*name*/) {
        auto* b = static_cast<Builder*>(user);
        if (!b->path.empty()) b->path.pop_back();
      });
  XML_SetCharacterDataHandler(parser, [](void* user, const XML_Char* s, int len) {
    auto* b = static_cast<Builder*>(user);
    if (b->has_root) b->current()->text.append(s, static_cast<std::size_t>(len));
  });
  XML_Status status =
      XML_Parse(parser, document.data(), static_cast<int>(document.size()), XML_TRUE);
  if (status != XML_STATUS_OK) {
    std::string msg = std::string("malformed XML: ") +
                      XML_ErrorString(XML_GetErrorCode(parser)) + " at line " +
                      std::to_string(XML_GetCurrentLineNumber(parser));
    XML_ParserFree(parser);
    throw Error(ErrorKind::kMalformedXml, msg);
  }
  XML_ParserFree(parser);
  if (!builder.has_root) throw Error(ErrorKind::kMalformedXml, "document has no root element");
  return std::move(builder.root);
}

bool is_well_formed(std::string_view document) {
  try {
    parse(document);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string escape_attribute(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#xa;"; break;
      case '\r': out += "&#xd;"; break;
      case '\t': out += "&#x9;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '\r': out += "&#xd;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace figforge::scene::xml
