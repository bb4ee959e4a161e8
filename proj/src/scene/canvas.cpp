#include "figforge/scene/canvas.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "figforge/error.hpp"

namespace figforge::scene {

namespace {

constexpr std::pair<ElementKind, std::string_view> kKindNames[] = {
    {ElementKind::kRect, "rect"},       {ElementKind::kRoundedRect, "rounded_rect"},
    {ElementKind::kEllipse, "ellipse"}, {ElementKind::kCuboid, "cuboid"},
    {ElementKind::kTrapezoid, "trapezoid"}, {ElementKind::kText, "text"},
    {ElementKind::kPath, "path"},       {ElementKind::kGroup, "group"},
};

constexpr std::pair<ArrowHead, std::string_view> kArrowNames[] = {
    {ArrowHead::kNone, "none"},
    {ArrowHead::kOpen, "open"},
    {ArrowHead::kFilled, "filled"},
    {ArrowHead::kBlock, "block"},
};

void require_finite(double v, std::string_view what, std::string_view id) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(what) + " of '" + std::string(id) + "' is not finite");
  }
}

bool is_xml_name(std::string_view key) {
  if (key.empty()) return false;
  auto head = static_cast<unsigned char>(key.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_' || u == '-' || u == '.';
  });
}

void check_label(const std::optional<std::string>& label, std::string_view id) {
  if (!label) return;
  for (unsigned char c : *label) {
    if (c < 0x20 && c != '\n' && c != '\t' && c != '\r') {
      throw Error(ErrorKind::kInvalidArgument,
                  "label of '" + std::string(id) + "' contains a control character");
    }
  }
}

void check_id(std::string_view id) {
  if (id.empty()) throw Error(ErrorKind::kInvalidArgument, "empty id");
  if (id == "0" || id == "1") {
    throw Error(ErrorKind::kInvalidArgument,
                "ids \"0\" and \"1\" are reserved for the document root cells");
  }
  for (unsigned char c : id) {
    if (c < 0x20) throw Error(ErrorKind::kInvalidArgument, "id contains a control character");
  }
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "rect";
}

std::optional<ElementKind> parse_element_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(ArrowHead head) {
  for (const auto& [k, name] : kArrowNames) {
    if (k == head) return name;
  }
  return "filled";
}

std::optional<ArrowHead> parse_arrow_head(std::string_view text) {
  for (const auto& [k, name] : kArrowNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

bool is_hex_color(std::string_view text) {
  if (text.size() != 7 || text[0] != '#') return false;
  return std::all_of(text.begin() + 1, text.end(),
                     [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
}

void validate(const StyleSpec& style) {
  if (!is_hex_color(style.fill_color)) {
    throw Error(ErrorKind::kInvalidArgument, "fill_color '" + style.fill_color + "' is not #RRGGBB");
  }
  if (!is_hex_color(style.stroke_color)) {
    throw Error(ErrorKind::kInvalidArgument,
                "stroke_color '" + style.stroke_color + "' is not #RRGGBB");
  }
  if (!std::isfinite(style.stroke_width) || style.stroke_width < 0) {
    throw Error(ErrorKind::kInvalidArgument, "stroke_width must be finite and >= 0");
  }
  if (!std::isfinite(style.opacity) || style.opacity < 0 || style.opacity > 1) {
    throw Error(ErrorKind::kInvalidArgument, "opacity must lie in [0,1]");
  }
  if (!std::isfinite(style.font_size) || style.font_size <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "font_size must be positive");
  }
  if (!std::isfinite(style.rounding_radius) || style.rounding_radius < 0) {
    throw Error(ErrorKind::kInvalidArgument, "rounding_radius must be >= 0");
  }
  for (double d : style.dash_pattern) {
    if (!std::isfinite(d) || d < 0) {
      throw Error(ErrorKind::kInvalidArgument, "dash lengths must be finite and >= 0");
    }
  }
  if (style.font_family.empty() || style.font_family.find(';') != std::string::npos) {
    throw Error(ErrorKind::kInvalidArgument, "font_family must be non-empty without ';'");
  }
}

Canvas::Canvas(double page_width, double page_height, double grid)
    : page_width_(page_width), page_height_(page_height), grid_(grid) {
  if (!std::isfinite(page_width) || !std::isfinite(page_height) || page_width <= 0 ||
      page_height <= 0 || !std::isfinite(grid) || grid < 0) {
    throw Error(ErrorKind::kInvalidArgument, "page size must be positive and finite");
  }
}

bool Canvas::contains(std::string_view id) const {
  auto same = [&](const auto& item) { return item.id == id; };
  return std::any_of(elements_.begin(), elements_.end(), same) ||
         std::any_of(connectors_.begin(), connectors_.end(), same);
}

const SceneElement* Canvas::find_element(std::string_view id) const {
  for (const auto& e : elements_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

namespace {

void normalize_and_check(SceneElement& element) {
  check_id(element.id);
  require_finite(element.x, "x", element.id);
  require_finite(element.y, "y", element.id);
  require_finite(element.width, "width", element.id);
  require_finite(element.height, "height", element.id);
  if (element.width < 0 || element.height < 0) {
    throw Error(ErrorKind::kInvalidArgument, "negative size on '" + element.id + "'");
  }
  validate(element.style);
  if (element.label && element.label->empty()) element.label.reset();
  check_label(element.label, element.id);
  if (element.concept_tag && element.concept_tag->empty()) element.concept_tag.reset();
  check_label(element.concept_tag, element.id);
  if (element.parent_group && *element.parent_group == element.id) {
    throw Error(ErrorKind::kInvalidArgument, "'" + element.id + "' is its own parent");
  }
}

}  // namespace

void Canvas::add_element(SceneElement element) {
  std::vector<SceneElement> batch;
  batch.push_back(std::move(element));
  add_elements(std::move(batch));
}

void Canvas::add_elements(std::vector<SceneElement> batch) {
  std::map<std::string, const SceneElement*> fresh;
  for (auto& element : batch) {
    normalize_and_check(element);
    if (contains(element.id) || fresh.count(element.id) != 0) {
      throw Error(ErrorKind::kDuplicateId, "duplicate id '" + element.id + "'");
    }
    fresh.emplace(element.id, &element);
  }
  auto lookup = [&](const std::string& id) -> const SceneElement* {
    if (const SceneElement* e = find_element(id)) return e;
    auto it = fresh.find(id);
    return it == fresh.end() ? nullptr : it->second;
  };
  for (const auto& element : batch) {
    if (!element.parent_group) continue;
    const SceneElement* parent = lookup(*element.parent_group);
    if (parent == nullptr) {
      throw Error(ErrorKind::kUnknownId,
                  "parent group '" + *element.parent_group + "' does not exist");
    }
    if (parent->kind != ElementKind::kGroup) {
      throw Error(ErrorKind::kInvalidArgument,
                  "parent '" + *element.parent_group + "' is not a group");
    }
    // Existing elements already form a forest, so only chains through the
    // batch can loop; a chain longer than the element count must.
    const SceneElement* cursor = parent;
    std::size_t steps = 0;
    const std::size_t limit = elements_.size() + batch.size();
    while (cursor != nullptr && cursor->parent_group) {
      if (++steps > limit || *cursor->parent_group == element.id) {
        throw Error(ErrorKind::kInvalidArgument,
                    "group nesting through '" + element.id + "' is cyclic");
      }
      cursor = lookup(*cursor->parent_group);
    }
  }
  for (auto& element : batch) elements_.push_back(std::move(element));
}

void Canvas::add_connector(Connector connector) {
  check_id(connector.id);
  if (contains(connector.id)) {
    throw Error(ErrorKind::kDuplicateId, "duplicate id '" + connector.id + "'");
  }
  auto check_endpoint = [&](const Endpoint& ep, std::string_view which) {
    if (const auto* ref = std::get_if<std::string>(&ep)) {
      if (find_element(*ref) == nullptr) {
        throw Error(ErrorKind::kUnknownId, "connector '" + connector.id + "' " +
                                               std::string(which) + " '" + *ref +
                                               "' is not an element");
      }
    } else {
      const auto& p = std::get<Point>(ep);
      require_finite(p.x, which, connector.id);
      require_finite(p.y, which, connector.id);
    }
  };
  check_endpoint(connector.source, "source");
  check_endpoint(connector.target, "target");
  for (const auto& p : connector.waypoints) {
    require_finite(p.x, "waypoint", connector.id);
    require_finite(p.y, "waypoint", connector.id);
  }
  validate(connector.style);
  if (connector.label && connector.label->empty()) connector.label.reset();
  check_label(connector.label, connector.id);
  connectors_.push_back(std::move(connector));
}

void Canvas::set_metadata(const std::string& key, const std::string& value) {
  if (!is_xml_name(key) || key == "host") {
    throw Error(ErrorKind::kInvalidArgument, "metadata key '" + key + "' is not usable");
  }
  check_label(value, key);
  metadata_[key] = value;
}

std::vector<const SceneElement*> Canvas::ordered_elements() const {
  std::vector<std::size_t> idx(elements_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return elements_[a].z_order < elements_[b].z_order;
  });
  std::vector<const SceneElement*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&elements_[i]);
  return out;
}

void Canvas::translate_concept(std::string_view concept_tag, double dx, double dy) {
  if (!std::isfinite(dx) || !std::isfinite(dy)) {
    throw Error(ErrorKind::kInvalidArgument, "translation must be finite");
  }
  for (auto& e : elements_) {
    if (e.concept_tag && *e.concept_tag == concept_tag) {
      e.x += dx;
      e.y += dy;
    }
  }
  auto tagged = [&](const Endpoint& ep) {
    const auto* ref = std::get_if<std::string>(&ep);
    if (ref == nullptr) return false;
    const SceneElement* e = find_element(*ref);
    return e != nullptr && e->concept_tag && *e->concept_tag == concept_tag;
  };
  for (auto& c : connectors_) {
    if (tagged(c.source) && tagged(c.target)) {
      for (auto& p : c.waypoints) {
        p.x += dx;
        p.y += dy;
      }
    }
  }
}

Bounds element_bounds(const std::vector<const SceneElement*>& elements) {
  if (elements.empty()) throw Error(ErrorKind::kEmptyCanvas, "no elements to bound");
  Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto* e : elements) {
    b.x_min = std::min(b.x_min, e->x);
    b.y_min = std::min(b.y_min, e->y);
    b.x_max = std::max(b.x_max, e->x + e->width);
    b.y_max = std::max(b.y_max, e->y + e->height);
  }
  return b;
}

Bounds bounds(const Canvas& canvas) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Bounds b{inf, inf, -inf, -inf};
  bool any = false;
  auto take = [&](double x0, double y0, double x1, double y1) {
    b.x_min = std::min(b.x_min, x0);
    b.y_min = std::min(b.y_min, y0);
    b.x_max = std::max(b.x_max, x1);
    b.y_max = std::max(b.y_max, y1);
    any = true;
  };
  for (const auto& e : canvas.elements()) take(e.x, e.y, e.x + e.width, e.y + e.height);
  for (const auto& c : canvas.connectors()) {
    for (const auto& p : c.waypoints) take(p.x, p.y, p.x, p.y);
    for (const Endpoint* ep : {&c.source, &c.target}) {
      if (const auto* p = std::get_if<Point>(ep)) take(p->x, p->y, p->x, p->y);
    }
  }
  if (!any) throw Error(ErrorKind::kEmptyCanvas, "canvas is empty");
  return b;
}

bool canonical_equal(const Canvas& a, const Canvas& b) {
  if (a.page_width() != b.page_width() || a.page_height() != b.page_height() ||
      a.grid() != b.grid() || a.metadata() != b.metadata() ||
      a.connectors() != b.connectors() || a.elements().size() != b.elements().size()) {
    return false;
  }
  auto ea = a.ordered_elements();
  auto eb = b.ordered_elements();
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (!(*ea[i] == *eb[i])) return false;
  }
  return true;
}

}  // namespace figforge::scene
