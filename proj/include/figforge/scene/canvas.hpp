#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace figforge::scene {

inline constexpr double kDefaultPageWidth = 1600.0;
inline constexpr double kDefaultPageHeight = 900.0;
inline constexpr double kDefaultGrid = 10.0;

enum class ElementKind { kRect, kRoundedRect, kEllipse, kCuboid, kTrapezoid, kText, kPath, kGroup };
enum class ArrowHead { kNone, kOpen, kFilled, kBlock };

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> parse_element_kind(std::string_view text);
std::string_view to_string(ArrowHead head);
std::optional<ArrowHead> parse_arrow_head(std::string_view text);

struct StyleSpec {
  std::string fill_color = "#FFFFFF";
  std::string stroke_color = "#000000";
  double stroke_width = 1.0;
  std::vector<double> dash_pattern;  // empty means solid
  double font_size = 12.0;
  std::string font_family = "Helvetica";
  double opacity = 1.0;
  double rounding_radius = 0.0;

  bool operator==(const StyleSpec&) const = default;
};

bool is_hex_color(std::string_view text);

/// Throws kInvalidArgument naming the offending field.
void validate(const StyleSpec& style);

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct SceneElement {
  std::string id;
  ElementKind kind = ElementKind::kRect;
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
  StyleSpec style;
  std::optional<std::string> label;
  int z_order = 0;
  std::optional<std::string> parent_group;
  std::optional<std::string> concept_tag;
  /// Style entries the scene model does not interpret, kept verbatim
  /// (";"-joined) so foreign documents re-serialize without loss.
  std::string raw_style;

  bool operator==(const SceneElement&) const = default;
};

/// A connector endpoint is either an element id or a free canvas point.
using Endpoint = std::variant<std::string, Point>;

struct Connector {
  std::string id;
  Endpoint source;
  Endpoint target;
  std::vector<Point> waypoints;
  ArrowHead arrow_head = ArrowHead::kFilled;
  std::optional<std::string> label;
  StyleSpec style;
  std::string raw_style;

  bool operator==(const Connector&) const = default;
};

struct Bounds {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  bool operator==(const Bounds&) const = default;
};

class Canvas {
 public:
  Canvas() = default;
  Canvas(double page_width, double page_height, double grid = kDefaultGrid);

  /// Appends after validating geometry, style, id uniqueness and the
  /// parent-group reference. Throws kDuplicateId / kUnknownId /
  /// kInvalidArgument.
  void add_element(SceneElement element);
  /// Batch form used by readers: parent groups may appear later in the batch
  /// than their children. Validates the batch as a whole (acyclic nesting).
  void add_elements(std::vector<SceneElement> batch);
  void add_connector(Connector connector);

  /// Metadata keys must be XML names; they travel as document attributes.
  void set_metadata(const std::string& key, const std::string& value);

  const std::vector<SceneElement>& elements() const { return elements_; }
  const std::vector<Connector>& connectors() const { return connectors_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }
  double page_width() const { return page_width_; }
  double page_height() const { return page_height_; }
  double grid() const { return grid_; }

  bool empty() const { return elements_.empty() && connectors_.empty(); }
  bool contains(std::string_view id) const;
  const SceneElement* find_element(std::string_view id) const;

  /// Elements in serialization order: z_order ascending, insertion order
  /// breaking ties.
  std::vector<const SceneElement*> ordered_elements() const;

  /// Moves every element carrying `concept_tag` (and waypoints of connectors
  /// attached only to them) by (dx, dy).
  void translate_concept(std::string_view concept_tag, double dx, double dy);

  bool operator==(const Canvas&) const = default;

 private:
  double page_width_ = kDefaultPageWidth;
  double page_height_ = kDefaultPageHeight;
  double grid_ = kDefaultGrid;
  std::vector<SceneElement> elements_;
  std::vector<Connector> connectors_;
  std::map<std::string, std::string> metadata_;
};

/// Tight box over element rectangles, connector waypoints and free
/// connector endpoints. Throws kEmptyCanvas when there is nothing to bound.
Bounds bounds(const Canvas& canvas);
Bounds element_bounds(const std::vector<const SceneElement*>& elements);

/// Equality modulo insertion order among elements of different z_order,
/// i.e. equality of what the serializers observe.
bool canonical_equal(const Canvas& a, const Canvas& b);

}  // namespace figforge::scene
