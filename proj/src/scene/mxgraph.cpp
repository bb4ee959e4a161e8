#include "figforge/scene/mxgraph.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "figforge/scene/xml.hpp"
#include "figforge/util/text.hpp"

namespace figforge::scene {

namespace {

using util::format_number;

constexpr std::string_view kHost = "figforge";

// ---------------------------------------------------------------------------
// style strings

struct StyleToken {
  std::string key;    // empty for bare tokens
  std::string value;  // bare token text when key is empty
  std::string text() const { return key.empty() ? value : key + "=" + value; }
};

std::vector<StyleToken> tokenize_style(std::string_view style) {
  std::vector<StyleToken> out;
  for (const auto& part : util::split(style, ';')) {
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos) {
      out.push_back({"", part});
    } else {
      out.push_back({part.substr(0, eq), part.substr(eq + 1)});
    }
  }
  return out;
}

std::string encode_style_value(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (c == '%' || c == ';' || c == '=' || c < 0x20) {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0F]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

std::string percent_decode(std::string_view text) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size()) {
      int hi = hex(text[i + 1]);
      int lo = hex(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(text[i]);
  }
  return out;
}

/// Accumulates "key=value;" pairs, yielding to any key the preserved raw
/// style already carries so foreign overrides survive re-serialization.
class StyleWriter {
 public:
  explicit StyleWriter(std::string_view raw) : raw_(raw) {
    for (const auto& t : tokenize_style(raw)) {
      (t.key.empty() ? raw_bare_ : raw_keys_).insert(t.key.empty() ? t.value : t.key);
    }
  }

  void put(std::string_view key, std::string_view value) {
    if (raw_keys_.count(std::string(key)) != 0) return;
    out_ += key;
    out_ += '=';
    out_ += value;
    out_ += ';';
  }

  void bare(std::string_view token) {
    if (raw_bare_.count(std::string(token)) != 0) return;
    out_ += token;
    out_ += ';';
  }

  std::string finish() {
    std::string result = out_;
    if (!raw_.empty()) {
      result += raw_;
      result += ';';
    }
    return result;
  }

 private:
  std::string raw_;
  std::set<std::string> raw_keys_;
  std::set<std::string> raw_bare_;
  std::string out_;
};

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ' ';
    out += format_number(values[i]);
  }
  return out;
}

void put_common(StyleWriter& w, const StyleSpec& s) {
  w.put("fillColor", s.fill_color);
  w.put("strokeColor", s.stroke_color);
  w.put("strokeWidth", format_number(s.stroke_width));
  if (!s.dash_pattern.empty()) {
    w.put("dashed", "1");
    w.put("dashPattern", join_numbers(s.dash_pattern));
  }
  w.put("fontSize", format_number(s.font_size));
  w.put("fontFamily", s.font_family);
  // DrawIO opacity is a percentage; the decimal shift is done on the text so
  // the value round-trips exactly.
  w.put("opacity", util::shift_decimal(format_number(s.opacity), 2));
  w.put("absoluteArcSize", "1");
  w.put("arcSize", format_number(s.rounding_radius));
}

std::string vertex_style(const SceneElement& e) {
  StyleWriter w(e.raw_style);
  switch (e.kind) {
    case ElementKind::kRect: w.put("rounded", "0"); break;
    case ElementKind::kRoundedRect: w.put("rounded", "1"); break;
    case ElementKind::kEllipse: w.bare("ellipse"); break;
    case ElementKind::kCuboid: w.put("shape", "cube"); break;
    case ElementKind::kTrapezoid: w.put("shape", "trapezoid"); break;
    case ElementKind::kText: w.bare("text"); break;
    case ElementKind::kPath: w.put("shape", "line"); break;
    case ElementKind::kGroup: w.bare("group"); break;
  }
  w.put("whiteSpace", "wrap");
  put_common(w, e.style);
  if (e.z_order != 0) w.put("zOrder", std::to_string(e.z_order));
  if (e.parent_group) w.put("parentGroup", encode_style_value(*e.parent_group));
  if (e.concept_tag) w.put("conceptTag", encode_style_value(*e.concept_tag));
  return w.finish();
}

std::pair<std::string_view, std::string_view> arrow_tokens(ArrowHead head) {
  switch (head) {
    case ArrowHead::kNone: return {"none", ""};
    case ArrowHead::kOpen: return {"open", "0"};
    case ArrowHead::kFilled: return {"classic", "1"};
    case ArrowHead::kBlock: return {"block", "1"};
  }
  return {"classic", "1"};
}

std::string edge_style(const Connector& c) {
  StyleWriter w(c.raw_style);
  auto [arrow, fill] = arrow_tokens(c.arrow_head);
  w.put("endArrow", arrow);
  if (!fill.empty()) w.put("endFill", fill);
  put_common(w, c.style);
  return w.finish();
}

// ---------------------------------------------------------------------------
// writer

void write_point(std::ostringstream& os, const Point& p, std::string_view indent,
                 std::string_view as) {
  os << indent << "<mxPoint x=\"" << format_number(p.x) << "\" y=\"" << format_number(p.y)
     << '"';
  if (!as.empty()) os << " as=\"" << as << '"';
  os << "/>\n";
}

}  // namespace

std::string to_mxgraph_xml(const Canvas& canvas) {
  using xml::escape_attribute;
  std::ostringstream os;
  os << "<mxfile host=\"" << kHost << '"';
  for (const auto& [k, v] : canvas.metadata()) {
    os << ' ' << k << "=\"" << escape_attribute(v) << '"';
  }
  os << ">\n";
  os << "  <diagram id=\"page-1\" name=\"Page-1\">\n";
  os << "    <mxGraphModel grid=\"1\" gridSize=\"" << format_number(canvas.grid())
     << "\" page=\"1\" pageWidth=\"" << format_number(canvas.page_width())
     << "\" pageHeight=\"" << format_number(canvas.page_height()) << "\">\n";
  os << "      <root>\n";
  os << "        <mxCell id=\"0\"/>\n";
  os << "        <mxCell id=\"1\" parent=\"0\"/>\n";
  for (const SceneElement* e : canvas.ordered_elements()) {
    os << "        <mxCell id=\"" << escape_attribute(e->id) << "\" value=\""
       << escape_attribute(e->label.value_or("")) << "\" style=\""
       << escape_attribute(vertex_style(*e)) << "\" vertex=\"1\" parent=\"1\">\n";
    os << "          <mxGeometry x=\"" << format_number(e->x) << "\" y=\"" << format_number(e->y)
       << "\" width=\"" << format_number(e->width) << "\" height=\""
       << format_number(e->height) << "\" as=\"geometry\"/>\n";
    os << "        </mxCell>\n";
  }
  for (const Connector& c : canvas.connectors()) {
    os << "        <mxCell id=\"" << escape_attribute(c.id) << '"';
    if (c.label) os << " value=\"" << escape_attribute(*c.label) << '"';
    os << " style=\"" << escape_attribute(edge_style(c)) << "\" edge=\"1\" parent=\"1\"";
    if (const auto* s = std::get_if<std::string>(&c.source)) {
      os << " source=\"" << escape_attribute(*s) << '"';
    }
    if (const auto* t = std::get_if<std::string>(&c.target)) {
      os << " target=\"" << escape_attribute(*t) << '"';
    }
    os << ">\n";
    const auto* sp = std::get_if<Point>(&c.source);
    const auto* tp = std::get_if<Point>(&c.target);
    if (sp == nullptr && tp == nullptr && c.waypoints.empty()) {
      os << "          <mxGeometry relative=\"1\" as=\"geometry\"/>\n";
    } else {
      os << "          <mxGeometry relative=\"1\" as=\"geometry\">\n";
      if (sp != nullptr) write_point(os, *sp, "            ", "sourcePoint");
      if (tp != nullptr) write_point(os, *tp, "            ", "targetPoint");
      if (!c.waypoints.empty()) {
        os << "            <Array as=\"points\">\n";
        for (const auto& p : c.waypoints) write_point(os, p, "              ", "");
        os << "            </Array>\n";
      }
      os << "          </mxGeometry>\n";
    }
    os << "        </mxCell>\n";
  }
  os << "      </root>\n";
  os << "    </mxGraphModel>\n";
  os << "  </diagram>\n";
  os << "</mxfile>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// reader

namespace {

std::string inflate_raw(const std::string& data) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
    throw Error(ErrorKind::kMalformedXml, "cannot initialise inflate");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  std::array<char, 16384> buf{};
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorKind::kMalformedXml, "compressed diagram payload is corrupt");
    }
    out.append(buf.data(), buf.size() - zs.avail_out);
  }
  inflateEnd(&zs);
  return out;
}

double number_attr(const xml::Node& node, std::string_view key, Warnings& warnings,
                   std::string_view cell_id) {
  const std::string* raw = node.attribute(key);
  if (raw == nullptr) return 0.0;
  if (auto v = util::parse_number(*raw)) return *v;
  warnings.push_back("cell '" + std::string(cell_id) + "': non-numeric " + std::string(key) +
                     " '" + *raw + "' read as 0");
  return 0.0;
}

std::optional<std::vector<double>> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) {
    auto v = util::parse_number(tok);
    if (!v || *v < 0) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

/// Consumes the style keys shared by vertices and edges; anything it cannot
/// interpret is appended to `raw`.
class StyleReader {
 public:
  explicit StyleReader(std::string_view style) : tokens_(tokenize_style(style)) {
    for (const auto& t : tokens_) {
      if (!t.key.empty()) index_.emplace(t.key, t.value);
    }
  }

  const std::vector<StyleToken>& tokens() const { return tokens_; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void consume(const StyleToken& t) { consumed_.insert(&t); }
  bool consumed(const StyleToken& t) const { return consumed_.count(&t) != 0; }

  void read_common(StyleSpec& s) {
    std::optional<std::string> dash_pattern;
    bool dashed = false;
    bool absolute_arc = false;
    for (const auto& t : tokens_) {
      if (t.key == "fillColor" && is_hex_color(t.value)) {
        s.fill_color = t.value;
        consume(t);
      } else if (t.key == "strokeColor" && is_hex_color(t.value)) {
        s.stroke_color = t.value;
        consume(t);
      } else if (t.key == "strokeWidth") {
        if (auto v = util::parse_number(t.value); v && *v >= 0) {
          s.stroke_width = *v;
          consume(t);
        }
      } else if (t.key == "fontSize") {
        if (auto v = util::parse_number(t.value); v && *v > 0) {
          s.font_size = *v;
          consume(t);
        }
      } else if (t.key == "fontFamily" && !t.value.empty()) {
        s.font_family = t.value;
        consume(t);
      } else if (t.key == "opacity") {
        try {
          auto v = util::parse_number(util::shift_decimal(t.value, -2));
          if (v && *v >= 0 && *v <= 1) {
            s.opacity = *v;
            consume(t);
          }
        } catch (const Error&) {
        }
      } else if (t.key == "absoluteArcSize" && t.value == "1") {
        absolute_arc = true;
        consume(t);
      } else if (t.key == "dashed") {
        if (t.value == "1") dashed = true;
        if (t.value == "0" || t.value == "1") consume(t);
      } else if (t.key == "dashPattern") {
        dash_pattern = t.value;
      }
    }
    for (const auto& t : tokens_) {
      if (t.key == "arcSize" && absolute_arc) {
        if (auto v = util::parse_number(t.value); v && *v >= 0) {
          s.rounding_radius = *v;
          consume(t);
        }
      } else if (t.key == "dashPattern" && dashed) {
        if (auto list = parse_number_list(t.value)) {
          s.dash_pattern = *list;
          consume(t);
        }
      }
    }
    if (dashed && s.dash_pattern.empty()) s.dash_pattern = {3.0, 3.0};
  }

  std::string leftover() const {
    std::string out;
    for (const auto& t : tokens_) {
      if (consumed(t)) continue;
      if (!out.empty()) out += ';';
      out += t.text();
    }
    return out;
  }

 private:
  std::vector<StyleToken> tokens_;
  std::map<std::string, std::string> index_;
  std::set<const StyleToken*> consumed_;
};

struct CellInfo {
  const xml::Node* node = nullptr;
  std::string id;
  std::string parent;
  bool vertex = false;
  bool edge = false;
};

const xml::Node* find_model(const xml::Node& root, xml::Node& storage) {
  if (root.name == "mxGraphModel") return &root;
  if (root.name != "mxfile") return nullptr;
  const xml::Node* diagram = root.child("diagram");
  if (diagram == nullptr) return nullptr;
  if (const xml::Node* model = diagram->child("mxGraphModel")) return model;
  std::string payload = util::trim(diagram->text);
  if (payload.empty()) return nullptr;
  std::string inflated;
  try {
    inflated = inflate_raw(util::base64_decode(payload));
  } catch (const Error& e) {
    throw Error(ErrorKind::kMalformedXml, std::string("compressed diagram: ") + e.what());
  }
  storage = xml::parse(percent_decode(inflated));
  return storage.name == "mxGraphModel" ? &storage : nullptr;
}

}  // namespace

MxGraphReadResult from_mxgraph_xml(std::string_view document) {
  xml::Node doc = xml::parse(document);
  Warnings warnings;
  xml::Node decompressed;
  const xml::Node* model = find_model(doc, decompressed);
  if (model == nullptr) {
    throw Error(ErrorKind::kMalformedXml, "document has no mxGraphModel");
  }

  auto model_number = [&](std::string_view key, double fallback) {
    const std::string* raw = model->attribute(key);
    if (raw == nullptr) return fallback;
    auto v = util::parse_number(*raw);
    return v && *v > 0 ? *v : fallback;
  };
  double grid = kDefaultGrid;
  if (const std::string* raw = model->attribute("gridSize")) {
    if (auto v = util::parse_number(*raw); v && *v >= 0) grid = *v;
  }
  Canvas canvas(model_number("pageWidth", kDefaultPageWidth),
                model_number("pageHeight", kDefaultPageHeight), grid);
  if (doc.name == "mxfile") {
    for (const auto& [k, v] : doc.attributes) {
      if (k == "host") continue;
      try {
        canvas.set_metadata(k, v);
      } catch (const Error&) {
        warnings.push_back("mxfile attribute '" + k + "' dropped");
      }
    }
  }

  const xml::Node* root = model->child("root");
  if (root == nullptr) return {std::move(canvas), std::move(warnings)};

  std::vector<CellInfo> cells;
  std::map<std::string, std::size_t> by_id;
  for (const auto& n : root->children) {
    if (n.name != "mxCell") {
      warnings.push_back("unsupported node <" + n.name + "> skipped");
      continue;
    }
    CellInfo info;
    info.node = &n;
    if (const auto* id = n.attribute("id")) info.id = *id;
    if (const auto* p = n.attribute("parent")) info.parent = *p;
    info.vertex = n.attribute("vertex") && *n.attribute("vertex") == "1";
    info.edge = n.attribute("edge") && *n.attribute("edge") == "1";
    if (info.id.empty()) {
      warnings.push_back("cell without id skipped");
      continue;
    }
    if (by_id.count(info.id) != 0) {
      warnings.push_back("duplicate cell id '" + info.id + "' skipped");
      continue;
    }
    by_id.emplace(info.id, cells.size());
    cells.push_back(info);
  }

  std::set<std::string> roots;
  std::set<std::string> layers;
  for (const auto& c : cells) {
    if (!c.vertex && !c.edge && c.parent.empty()) roots.insert(c.id);
  }
  for (const auto& c : cells) {
    if (!c.vertex && !c.edge && roots.count(c.parent) != 0) layers.insert(c.id);
  }
  if (layers.size() > 1) warnings.push_back("multiple layers flattened into one");

  // Absolute origin of each vertex; DrawIO children of non-layer cells are
  // positioned relative to their parent.
  std::map<std::string, Point> origin_memo;
  std::function<Point(const std::string&, int)> origin_of = [&](const std::string& id,
                                                                int depth) -> Point {
    if (layers.count(id) != 0 || roots.count(id) != 0 || depth > 64) return {};
    if (auto it = origin_memo.find(id); it != origin_memo.end()) return it->second;
    auto it = by_id.find(id);
    if (it == by_id.end()) return {};
    const CellInfo& c = cells[it->second];
    Point base = origin_of(c.parent, depth + 1);
    Point own;
    if (const xml::Node* g = c.node->child("mxGeometry")) {
      Warnings ignored;
      own.x = number_attr(*g, "x", ignored, id);
      own.y = number_attr(*g, "y", ignored, id);
    }
    Point abs{base.x + own.x, base.y + own.y};
    origin_memo[id] = abs;
    return abs;
  };

  std::vector<SceneElement> elements;
  std::set<std::string> vertex_ids;
  std::map<std::string, ElementKind> kinds;
  for (const auto& c : cells) {
    if (!c.vertex) continue;
    SceneElement e;
    e.id = c.id;
    if (const auto* v = c.node->attribute("value")) e.label = *v;
    if (const xml::Node* g = c.node->child("mxGeometry")) {
      e.x = number_attr(*g, "x", warnings, c.id);
      e.y = number_attr(*g, "y", warnings, c.id);
      e.width = number_attr(*g, "width", warnings, c.id);
      e.height = number_attr(*g, "height", warnings, c.id);
    }
    bool nested = !c.parent.empty() && layers.count(c.parent) == 0 && roots.count(c.parent) == 0;
    if (nested) {
      Point base = origin_of(c.parent, 0);
      e.x += base.x;
      e.y += base.y;
    }
    if (e.width < 0 || e.height < 0) {
      warnings.push_back("cell '" + c.id + "': negative size clamped to 0");
      e.width = std::max(0.0, e.width);
      e.height = std::max(0.0, e.height);
    }

    StyleReader reader(c.node->attribute("style") ? *c.node->attribute("style") : "");
    std::optional<ElementKind> kind;
    for (const auto& t : reader.tokens()) {
      if (kind) break;
      if (t.key.empty()) {
        if (t.value == "ellipse") kind = ElementKind::kEllipse;
        if (t.value == "text") kind = ElementKind::kText;
        if (t.value == "group") kind = ElementKind::kGroup;
        if (kind) reader.consume(t);
      } else if (t.key == "shape") {
        if (t.value == "cube") kind = ElementKind::kCuboid;
        if (t.value == "trapezoid") kind = ElementKind::kTrapezoid;
        if (t.value == "line") kind = ElementKind::kPath;
        if (t.value == "ellipse") kind = ElementKind::kEllipse;
        if (t.value == "rectangle") kind = ElementKind::kRect;
        if (kind) reader.consume(t);
      }
    }
    bool unsupported = false;
    for (const auto& t : reader.tokens()) {
      if (reader.consumed(t)) continue;
      if ((t.key.empty() && t.value != "html" && !kind) || (t.key == "shape" && !kind)) {
        unsupported = true;
        warnings.push_back("cell '" + c.id + "': unsupported shape '" + t.value +
                           "' degraded to rect");
        break;
      }
    }
    if (!kind) kind = ElementKind::kRect;
    for (const auto& t : reader.tokens()) {
      if (reader.consumed(t)) continue;
      if (t.key == "rounded" &&
          (*kind == ElementKind::kRect || *kind == ElementKind::kRoundedRect)) {
        if (t.value == "0") {
          reader.consume(t);
        } else if (t.value == "1" && !unsupported) {
          kind = ElementKind::kRoundedRect;
          reader.consume(t);
        }
      } else if (t.key == "whiteSpace" && t.value == "wrap") {
        reader.consume(t);
      } else if (t.key == "zOrder") {
        if (auto v = util::parse_number(t.value);
            v && *v == static_cast<double>(static_cast<int>(*v))) {
          e.z_order = static_cast<int>(*v);
          reader.consume(t);
        }
      } else if (t.key == "parentGroup") {
        e.parent_group = percent_decode(t.value);
        reader.consume(t);
      } else if (t.key == "conceptTag") {
        e.concept_tag = percent_decode(t.value);
        reader.consume(t);
      }
    }
    e.kind = *kind;
    reader.read_common(e.style);
    e.raw_style = reader.leftover();
    kinds[e.id] = e.kind;
    vertex_ids.insert(e.id);
    elements.push_back(std::move(e));
  }

  // Native DrawIO grouping: children of a group cell join that group.
  for (auto& e : elements) {
    if (e.parent_group) continue;
    const CellInfo& c = cells[by_id.at(e.id)];
    if (vertex_ids.count(c.parent) != 0 && kinds[c.parent] == ElementKind::kGroup) {
      e.parent_group = c.parent;
    }
  }
  for (auto& e : elements) {
    if (!e.parent_group) continue;
    auto k = kinds.find(*e.parent_group);
    if (k == kinds.end() || k->second != ElementKind::kGroup) {
      warnings.push_back("cell '" + e.id + "': parent group '" + *e.parent_group +
                         "' is not a group; dropped");
      e.parent_group.reset();
    }
  }
  try {
    canvas.add_elements(std::move(elements));
  } catch (const Error& err) {
    throw Error(ErrorKind::kMalformedXml, std::string("inconsistent vertices: ") + err.what());
  }

  for (const auto& c : cells) {
    if (!c.edge) continue;
    Connector conn;
    conn.id = c.id;
    if (const auto* v = c.node->attribute("value"); v != nullptr && !v->empty()) conn.label = *v;
    const xml::Node* geo = c.node->child("mxGeometry");
    Point offset;
    if (!c.parent.empty() && vertex_ids.count(c.parent) != 0) offset = origin_of(c.parent, 0);
    std::optional<Point> source_point;
    std::optional<Point> target_point;
    if (geo != nullptr) {
      for (const auto& child : geo->children) {
        const std::string* as = child.attribute("as");
        if (child.name == "mxPoint" && as != nullptr) {
          Point p{number_attr(child, "x", warnings, c.id) + offset.x,
                  number_attr(child, "y", warnings, c.id) + offset.y};
          if (*as == "sourcePoint") source_point = p;
          if (*as == "targetPoint") target_point = p;
        } else if (child.name == "Array" && as != nullptr && *as == "points") {
          for (const auto& pt : child.children) {
            if (pt.name != "mxPoint") continue;
            conn.waypoints.push_back({number_attr(pt, "x", warnings, c.id) + offset.x,
                                      number_attr(pt, "y", warnings, c.id) + offset.y});
          }
        }
      }
    }
    auto resolve = [&](const char* attr, const std::optional<Point>& fallback,
                       Endpoint& out) -> bool {
      const std::string* ref = c.node->attribute(attr);
      if (ref != nullptr && vertex_ids.count(*ref) != 0) {
        out = *ref;
        return true;
      }
      if (fallback) {
        out = *fallback;
        return true;
      }
      return false;
    };
    if (!resolve("source", source_point, conn.source) ||
        !resolve("target", target_point, conn.target)) {
      warnings.push_back("edge '" + c.id + "' has an unresolvable endpoint; skipped");
      continue;
    }

    StyleReader reader(c.node->attribute("style") ? *c.node->attribute("style") : "");
    conn.arrow_head = ArrowHead::kFilled;
    std::optional<std::string> expected_fill = "1";
    for (const auto& t : reader.tokens()) {
      if (t.key != "endArrow") continue;
      if (t.value == "none") {
        conn.arrow_head = ArrowHead::kNone;
        expected_fill.reset();
      } else if (t.value == "open") {
        conn.arrow_head = ArrowHead::kOpen;
        expected_fill = "0";
      } else if (t.value == "classic") {
        conn.arrow_head = ArrowHead::kFilled;
      } else if (t.value == "block") {
        conn.arrow_head = ArrowHead::kBlock;
      } else {
        break;  // unknown arrow kept verbatim
      }
      reader.consume(t);
      break;
    }
    for (const auto& t : reader.tokens()) {
      if (t.key == "endFill" && expected_fill && t.value == *expected_fill) reader.consume(t);
    }
    reader.read_common(conn.style);
    conn.raw_style = reader.leftover();
    try {
      canvas.add_connector(std::move(conn));
    } catch (const Error& err) {
      warnings.push_back("edge '" + c.id + "' rejected: " + err.what());
    }
  }

  for (const auto& c : cells) {
    if (!c.vertex && !c.edge && roots.count(c.id) == 0 && layers.count(c.id) == 0) {
      warnings.push_back("unsupported cell '" + c.id + "' skipped");
    }
  }
  return {std::move(canvas), std::move(warnings)};
}

}  // namespace figforge::scene
