#include "figforge/scene/svg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "figforge/scene/xml.hpp"
#include "figforge/util/text.hpp"

namespace figforge::scene {

namespace {

using util::format_number;
using xml::escape_attribute;
using xml::escape_text;

std::string num(double v) { return format_number(v); }

std::string marker_id(ArrowHead head) { return "arrow-" + std::string(to_string(head)); }

std::string paint_attributes(const StyleSpec& s, bool filled) {
  std::ostringstream os;
  os << " fill=\"" << (filled ? s.fill_color : "none") << "\" stroke=\"" << s.stroke_color
     << "\" stroke-width=\"" << num(s.stroke_width) << '"';
  if (!s.dash_pattern.empty()) {
    os << " stroke-dasharray=\"";
    for (std::size_t i = 0; i < s.dash_pattern.size(); ++i) {
      if (i > 0) os << ' ';
      os << num(s.dash_pattern[i]);
    }
    os << '"';
  }
  if (s.opacity != 1.0) os << " opacity=\"" << num(s.opacity) << '"';
  return os.str();
}

void write_text(std::ostringstream& os, const std::string* id, const std::string& label,
                double cx, double cy, const StyleSpec& s, std::string_view indent) {
  std::vector<std::string> lines = util::split(label, '\n');
  for (auto& line : lines) {
    line.erase(std::remove(line.begin(), line.end(), '\r'), line.end());
  }
  double line_height = s.font_size * 1.2;
  double first = cy - line_height * (static_cast<double>(lines.size()) - 1.0) / 2.0;
  os << indent << "<text";
  if (id != nullptr) os << " id=\"" << escape_attribute(*id) << '"';
  os << " x=\"" << num(cx) << "\" y=\"" << num(first) << "\" font-family=\""
     << escape_attribute(s.font_family) << "\" font-size=\"" << num(s.font_size)
     << "\" text-anchor=\"middle\" dominant-baseline=\"central\" fill=\"" << s.stroke_color
     << '"';
  if (s.opacity != 1.0) os << " opacity=\"" << num(s.opacity) << '"';
  os << '>';
  if (lines.size() == 1) {
    os << escape_text(lines[0]);
  } else {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      os << "<tspan x=\"" << num(cx) << "\" y=\""
         << num(first + line_height * static_cast<double>(i)) << "\">" << escape_text(lines[i])
         << "</tspan>";
    }
  }
  os << "</text>\n";
}

/// Shape node without an id; the caller decides whether it carries one.
void write_shape(std::ostringstream& os, const SceneElement& e, const std::string& id_attr,
                 std::string_view indent) {
  const double x = e.x;
  const double y = e.y;
  const double w = e.width;
  const double h = e.height;
  const StyleSpec& s = e.style;
  switch (e.kind) {
    case ElementKind::kRect:
    case ElementKind::kRoundedRect: {
      double r = s.rounding_radius;
      if (e.kind == ElementKind::kRoundedRect && r == 0.0) r = 0.1 * std::min(w, h);
      os << indent << "<rect" << id_attr << " x=\"" << num(x) << "\" y=\"" << num(y)
         << "\" width=\"" << num(w) << "\" height=\"" << num(h) << '"';
      if (r > 0) os << " rx=\"" << num(r) << "\" ry=\"" << num(r) << '"';
      os << paint_attributes(s, true) << "/>\n";
      break;
    }
    case ElementKind::kEllipse:
      os << indent << "<ellipse" << id_attr << " cx=\"" << num(x + w / 2) << "\" cy=\""
         << num(y + h / 2) << "\" rx=\"" << num(w / 2) << "\" ry=\"" << num(h / 2) << '"'
         << paint_attributes(s, true) << "/>\n";
      break;
    case ElementKind::kCuboid: {
      double d = 0.2 * std::min(w, h);
      std::ostringstream p;
      p << "M" << num(x) << ' ' << num(y + d) << " L" << num(x + d) << ' ' << num(y) << " L"
        << num(x + w) << ' ' << num(y) << " L" << num(x + w) << ' ' << num(y + h - d) << " L"
        << num(x + w - d) << ' ' << num(y + h) << " L" << num(x) << ' ' << num(y + h) << " Z M"
        << num(x) << ' ' << num(y + d) << " L" << num(x + w - d) << ' ' << num(y + d) << " L"
        << num(x + w) << ' ' << num(y) << " M" << num(x + w - d) << ' ' << num(y + d) << " L"
        << num(x + w - d) << ' ' << num(y + h);
      os << indent << "<path" << id_attr << " d=\"" << p.str() << '"'
         << paint_attributes(s, true) << "/>\n";
      break;
    }
    case ElementKind::kTrapezoid:
      os << indent << "<polygon" << id_attr << " points=\"" << num(x + 0.2 * w) << ','
         << num(y) << ' ' << num(x + 0.8 * w) << ',' << num(y) << ' ' << num(x + w) << ','
         << num(y + h) << ' ' << num(x) << ',' << num(y + h) << '"'
         << paint_attributes(s, true) << "/>\n";
      break;
    case ElementKind::kPath:
      os << indent << "<path" << id_attr << " d=\"M" << num(x) << ' ' << num(y + h / 2) << " L"
         << num(x + w) << ' ' << num(y + h / 2) << '"' << paint_attributes(s, false) << "/>\n";
      break;
    case ElementKind::kText:
    case ElementKind::kGroup:
      break;
  }
}

class SvgWriter {
 public:
  explicit SvgWriter(const Canvas& canvas) : canvas_(canvas) {
    for (const SceneElement* e : canvas.ordered_elements()) {
      children_[e->parent_group.value_or("")].push_back(e);
    }
  }

  std::string write() {
    std::ostringstream os;
    const std::string w = num(canvas_.page_width());
    const std::string h = num(canvas_.page_height());
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << w
       << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    std::set<ArrowHead> heads;
    for (const auto& c : canvas_.connectors()) {
      if (c.arrow_head != ArrowHead::kNone) heads.insert(c.arrow_head);
    }
    if (!heads.empty()) {
      os << "  <defs>\n";
      for (ArrowHead head : heads) write_marker(os, head);
      os << "  </defs>\n";
    }
    write_children(os, "", "  ");
    for (const auto& c : canvas_.connectors()) write_connector(os, c);
    os << "</svg>\n";
    return os.str();
  }

 private:
  static void write_marker(std::ostringstream& os, ArrowHead head) {
    os << "    <marker id=\"" << marker_id(head)
       << "\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"8\" "
          "markerHeight=\"8\" orient=\"auto-start-reverse\" markerUnits=\"strokeWidth\">\n";
    switch (head) {
      case ArrowHead::kOpen:
        os << "      <path d=\"M0 0 L10 5 L0 10\" fill=\"none\" stroke=\"#000000\"/>\n";
        break;
      case ArrowHead::kFilled:
        os << "      <path d=\"M0 0 L10 5 L0 10 Z\" fill=\"#000000\"/>\n";
        break;
      case ArrowHead::kBlock:
        os << "      <path d=\"M0 0 L10 5 L0 10 L3 5 Z\" fill=\"#000000\"/>\n";
        break;
      case ArrowHead::kNone:
        break;
    }
    os << "    </marker>\n";
  }

  void write_children(std::ostringstream& os, const std::string& parent,
                      const std::string& indent) {
    auto it = children_.find(parent);
    if (it == children_.end()) return;
    for (const SceneElement* e : it->second) write_element(os, *e, indent);
  }

  void write_element(std::ostringstream& os, const SceneElement& e, const std::string& indent) {
    const std::string id_attr = " id=\"" + escape_attribute(e.id) + "\"";
    const double cx = e.x + e.width / 2;
    const double cy = e.y + e.height / 2;
    if (e.kind == ElementKind::kGroup) {
      os << indent << "<g" << id_attr << ">\n";
      if (e.label) write_text(os, nullptr, *e.label, cx, e.y, e.style, indent + "  ");
      write_children(os, e.id, indent + "  ");
      os << indent << "</g>\n";
      return;
    }
    if (e.kind == ElementKind::kText) {
      write_text(os, &e.id, e.label.value_or(""), cx, cy, e.style, indent);
      return;
    }
    if (!e.label) {
      write_shape(os, e, id_attr, indent);
      return;
    }
    os << indent << "<g" << id_attr << ">\n";
    write_shape(os, e, "", indent + "  ");
    write_text(os, nullptr, *e.label, cx, cy, e.style, indent + "  ");
    os << indent << "</g>\n";
  }

  Point anchor(const Endpoint& ep) const {
    if (const auto* p = std::get_if<Point>(&ep)) return *p;
    const SceneElement* e = canvas_.find_element(std::get<std::string>(ep));
    return {e->x + e->width / 2, e->y + e->height / 2};
  }

  /// Pulls `from` (an element centre) out to the element's box border along
  /// the segment towards `toward`.
  Point clip(const Endpoint& ep, Point from, Point toward) const {
    const auto* ref = std::get_if<std::string>(&ep);
    if (ref == nullptr) return from;
    const SceneElement* e = canvas_.find_element(*ref);
    double dx = toward.x - from.x;
    double dy = toward.y - from.y;
    double hw = e->width / 2;
    double hh = e->height / 2;
    double t = 1.0;
    if (dx != 0) t = std::min(t, hw / std::abs(dx));
    if (dy != 0) t = std::min(t, hh / std::abs(dy));
    if (dx == 0 && dy == 0) return from;
    return {from.x + dx * t, from.y + dy * t};
  }

  void write_connector(std::ostringstream& os, const Connector& c) const {
    std::vector<Point> pts;
    pts.push_back(anchor(c.source));
    for (const auto& p : c.waypoints) pts.push_back(p);
    pts.push_back(anchor(c.target));
    Point start = clip(c.source, pts.front(), pts[1]);
    Point end = clip(c.target, pts.back(), pts[pts.size() - 2]);
    pts.front() = start;
    pts.back() = end;
    std::ostringstream d;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d << (i == 0 ? "M" : " L") << num(pts[i].x) << ' ' << num(pts[i].y);
    }
    const std::string id_attr = " id=\"" + escape_attribute(c.id) + "\"";
    std::string path = "<path" + std::string(c.label ? "" : id_attr) + " d=\"" + d.str() +
                       "\"" + paint_attributes(c.style, false);
    if (c.arrow_head != ArrowHead::kNone) {
      path += " marker-end=\"url(#" + marker_id(c.arrow_head) + ")\"";
    }
    path += "/>\n";
    if (!c.label) {
      os << "  " << path;
      return;
    }
    const Point& a = pts[(pts.size() - 1) / 2];
    const Point& b = pts[(pts.size() - 1) / 2 + 1];
    os << "  <g" << id_attr << ">\n";
    os << "    " << path;
    write_text(os, nullptr, *c.label, (a.x + b.x) / 2, (a.y + b.y) / 2, c.style, "    ");
    os << "  </g>\n";
  }

  const Canvas& canvas_;
  std::map<std::string, std::vector<const SceneElement*>> children_;
};

}  // namespace

std::string to_svg(const Canvas& canvas) { return SvgWriter(canvas).write(); }

}  // namespace figforge::scene
