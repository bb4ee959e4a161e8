#include <fstream>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "figforge/error.hpp"
#include "figforge/scene/canvas.hpp"
#include "figforge/scene/mxgraph.hpp"
#include "figforge/scene/svg.hpp"
#include "figforge/scene/xml.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::scene;

namespace {

SceneElement rect(const std::string& id, double x, double y, double w, double h) {
  SceneElement e;
  e.id = id;
  e.x = x;
  e.y = y;
  e.width = w;
  e.height = h;
  return e;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no figforge::Error thrown";
  return ErrorKind::kIo;
}

int count_of(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

const xml::Node* find_cell(const xml::Node& node, const std::string& id) {
  if (node.name == "mxCell") {
    const std::string* a = node.attribute("id");
    if (a != nullptr && *a == id) return &node;
  }
  for (const auto& c : node.children) {
    if (const xml::Node* hit = find_cell(c, id)) return hit;
  }
  return nullptr;
}

}  // namespace

TEST(Canvas, AddElementToEmptyCanvas) {
  Canvas c;
  c.add_element(rect("e1", 0, 0, 10, 10));
  EXPECT_EQ(c.elements().size(), 1u);
  EXPECT_TRUE(c.contains("e1"));
}

TEST(Canvas, DuplicateIdIsRejected) {
  Canvas c;
  c.add_element(rect("e1", 0, 0, 10, 10));
  EXPECT_EQ(kind_of([&] { c.add_element(rect("e1", 5, 5, 10, 10)); }), ErrorKind::kDuplicateId);
  EXPECT_EQ(c.elements().size(), 1u);
}

TEST(Canvas, NestingUnderGroup) {
  Canvas c;
  SceneElement g = rect("g1", 0, 0, 100, 100);
  g.kind = ElementKind::kGroup;
  c.add_element(g);
  SceneElement child = rect("r1", 10, 10, 20, 20);
  child.parent_group = "g1";
  c.add_element(child);
  EXPECT_EQ(c.find_element("r1")->parent_group, std::optional<std::string>("g1"));
}

TEST(Canvas, UnknownParentAndBadGeometryAreRejected) {
  Canvas c;
  SceneElement orphan = rect("r1", 0, 0, 10, 10);
  orphan.parent_group = "nope";
  EXPECT_EQ(kind_of([&] { c.add_element(orphan); }), ErrorKind::kUnknownId);
  EXPECT_EQ(kind_of([&] { c.add_element(rect("r2", 0, 0, -1, 10)); }), ErrorKind::kInvalidArgument);
  SceneElement bad_color = rect("r3", 0, 0, 10, 10);
  bad_color.style.fill_color = "red";
  EXPECT_EQ(kind_of([&] { c.add_element(bad_color); }), ErrorKind::kInvalidArgument);
}

TEST(Canvas, ConnectorEndpointsMustExist) {
  Canvas c;
  c.add_element(rect("a", 0, 0, 10, 10));
  Connector k;
  k.id = "k";
  k.source = std::string("a");
  k.target = std::string("missing");
  EXPECT_EQ(kind_of([&] { c.add_connector(k); }), ErrorKind::kUnknownId);
  k.target = Point{50, 50};
  c.add_connector(k);
  EXPECT_EQ(c.connectors().size(), 1u);
}

TEST(Canvas, OrderedElementsFollowZOrderThenInsertion) {
  Canvas c;
  auto a = rect("a", 0, 0, 1, 1);
  a.z_order = 2;
  auto b = rect("b", 0, 0, 1, 1);
  auto d = rect("d", 0, 0, 1, 1);
  d.z_order = -1;
  c.add_element(a);
  c.add_element(b);
  c.add_element(d);
  auto order = c.ordered_elements();
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order[0]->id, "d");
  EXPECT_EQ(order[1]->id, "b");
  EXPECT_EQ(order[2]->id, "a");
}

TEST(Canvas, TranslateConceptMovesOnlyTaggedElements) {
  Canvas c;
  auto a = rect("a", 10, 10, 5, 5);
  a.concept_tag = "enc";
  c.add_element(a);
  c.add_element(rect("b", 10, 10, 5, 5));
  c.translate_concept("enc", 5, -2);
  EXPECT_DOUBLE_EQ(c.find_element("a")->x, 15);
  EXPECT_DOUBLE_EQ(c.find_element("a")->y, 8);
  EXPECT_DOUBLE_EQ(c.find_element("b")->x, 10);
}

TEST(Bounds, SingleRect) {
  Canvas c;
  c.add_element(rect("r", 10, 20, 40, 40));
  EXPECT_EQ(bounds(c), (Bounds{10, 20, 50, 60}));
}

TEST(Bounds, TwoRects) {
  Canvas c;
  c.add_element(rect("a", 0, 0, 10, 10));
  c.add_element(rect("b", 20, 20, 10, 10));
  EXPECT_EQ(bounds(c), (Bounds{0, 0, 30, 30}));
}

TEST(Bounds, EmptyCanvasIsAnError) {
  EXPECT_EQ(kind_of([] { bounds(Canvas()); }), ErrorKind::kEmptyCanvas);
}

TEST(MxGraph, RectGeometryPassesThrough) {
  Canvas c;
  c.add_element(rect("r", 10, 20, 40, 40));
  auto doc = xml::parse(to_mxgraph_xml(c));
  const xml::Node* cell = find_cell(doc, "r");
  ASSERT_NE(cell, nullptr);
  EXPECT_EQ(*cell->attribute("vertex"), "1");
  const xml::Node* geo = cell->child("mxGeometry");
  ASSERT_NE(geo, nullptr);
  EXPECT_EQ(*geo->attribute("x"), "10");
  EXPECT_EQ(*geo->attribute("y"), "20");
  EXPECT_EQ(*geo->attribute("width"), "40");
  EXPECT_EQ(*geo->attribute("height"), "40");
}

TEST(MxGraph, EmptyCanvasHasOnlyRootCells) {
  const std::string doc = to_mxgraph_xml(Canvas());
  EXPECT_EQ(count_of(doc, "<mxCell "), 2);
  auto tree = xml::parse(doc);
  EXPECT_NE(find_cell(tree, "0"), nullptr);
  EXPECT_NE(find_cell(tree, "1"), nullptr);
}

TEST(MxGraph, EdgeCellCarriesEndpoints) {
  Canvas c;
  c.add_element(rect("a", 0, 0, 10, 10));
  c.add_element(rect("b", 50, 0, 10, 10));
  Connector k;
  k.id = "k";
  k.source = std::string("a");
  k.target = std::string("b");
  c.add_connector(k);
  const std::string doc = to_mxgraph_xml(c);
  EXPECT_EQ(count_of(doc, "<mxCell "), 2 + 3);
  const xml::Node* edge = find_cell(xml::parse(doc), "k");
  ASSERT_NE(edge, nullptr);
  EXPECT_EQ(*edge->attribute("edge"), "1");
  EXPECT_EQ(*edge->attribute("source"), "a");
  EXPECT_EQ(*edge->attribute("target"), "b");
}

TEST(MxGraph, UnknownShapeFallsBackToRectKeepingStyle) {
  const std::string doc = R"(<mxfile><diagram><mxGraphModel><root>
    <mxCell id="0"/><mxCell id="1" parent="0"/>
    <mxCell id="s" value="Cloud" style="shape=cloud;whiteSpace=wrap;fillColor=#FF0000;" vertex="1" parent="1">
      <mxGeometry x="1" y="2" width="3" height="4" as="geometry"/>
    </mxCell></root></mxGraphModel></diagram></mxfile>)";
  auto result = from_mxgraph_xml(doc);
  const SceneElement* e = result.canvas.find_element("s");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->kind, ElementKind::kRect);
  EXPECT_NE(e->raw_style.find("shape=cloud"), std::string::npos);
  EXPECT_EQ(e->style.fill_color, "#FF0000");
  EXPECT_EQ(e->label, std::optional<std::string>("Cloud"));
  EXPECT_FALSE(result.warnings.empty());
  auto again = from_mxgraph_xml(to_mxgraph_xml(result.canvas));
  EXPECT_TRUE(canonical_equal(again.canvas, result.canvas));
}

TEST(MxGraph, TruncatedDocumentIsMalformed) {
  Canvas c;
  c.add_element(rect("r", 0, 0, 1, 1));
  std::string doc = to_mxgraph_xml(c);
  doc.resize(doc.size() / 2);
  EXPECT_EQ(kind_of([&] { from_mxgraph_xml(doc); }), ErrorKind::kMalformedXml);
}

TEST(MxGraph, RoundTripsRandomCanvases) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    Canvas c = test::random_canvas(rng);
    auto back = from_mxgraph_xml(to_mxgraph_xml(c));
    EXPECT_TRUE(canonical_equal(c, back.canvas)) << "canvas " << i;
  }
}

TEST(MxGraph, ReadsBundledCorpusFigures) {
  for (const auto& entry : std::filesystem::directory_iterator(test::fixtures_dir() / "corpus")) {
    if (entry.path().extension() != ".drawio") continue;
    std::ifstream in(entry.path());
    std::stringstream ss;
    ss << in.rdbuf();
    auto result = from_mxgraph_xml(ss.str());
    EXPECT_FALSE(result.canvas.elements().empty()) << entry.path();
  }
}

TEST(Svg, RectPassesThrough) {
  Canvas c;
  c.add_element(rect("r", 0, 0, 100, 50));
  const std::string svg = to_svg(c);
  EXPECT_NE(svg.find(R"(<rect id="r" x="0" y="0" width="100" height="50")"), std::string::npos) << svg;
}

TEST(Svg, TextLabel) {
  Canvas c;
  auto t = rect("t", 0, 0, 100, 20);
  t.kind = ElementKind::kText;
  t.label = "Encoder";
  c.add_element(t);
  auto doc = xml::parse(to_svg(c));
  bool found = false;
  std::function<void(const xml::Node&)> walk = [&](const xml::Node& n) {
    if (n.name == "text" && n.text.find("Encoder") != std::string::npos) found = true;
    for (const auto& ch : n.children) walk(ch);
  };
  walk(doc);
  EXPECT_TRUE(found);
}

TEST(Svg, FilledArrowUsesMarker) {
  Canvas c;
  c.add_element(rect("a", 0, 0, 10, 10));
  c.add_element(rect("b", 50, 0, 10, 10));
  Connector k;
  k.id = "k";
  k.source = std::string("a");
  k.target = std::string("b");
  k.arrow_head = ArrowHead::kFilled;
  c.add_connector(k);
  const std::string svg = to_svg(c);
  EXPECT_NE(svg.find("<marker"), std::string::npos);
  EXPECT_NE(svg.find("<path id=\"k\""), std::string::npos);
  EXPECT_NE(svg.find("marker-end=\"url(#"), std::string::npos);
}

TEST(Svg, ViewBoxMatchesPage) {
  Canvas c(800, 600);
  EXPECT_NE(to_svg(c).find(R"(viewBox="0 0 800 600")"), std::string::npos);
}

TEST(Xml, EscapesAttributeSpecials) {
  EXPECT_EQ(xml::escape_attribute("a<b&\"c\"\n"), "a&lt;b&amp;&quot;c&quot;&#xa;");
  EXPECT_FALSE(xml::is_well_formed("<a><b></a>"));
  EXPECT_TRUE(xml::is_well_formed("<a x=\"1\"/>"));
}
