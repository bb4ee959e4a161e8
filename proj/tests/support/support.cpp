#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "figforge/error.hpp"
#include "figforge/middleware/json_io.hpp"

namespace figforge::test {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path fixtures_dir() { return FIGFORGE_FIXTURES_DIR; }

TempDir::TempDir() {
  static std::mt19937_64 rng(std::random_device{}());
  for (;;) {
    path_ = fs::temp_directory_path() / ("figforge-test-" + std::to_string(rng() % 1000000000));
    if (fs::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int pick(std::mt19937_64& rng, int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); }

bool coin(std::mt19937_64& rng, double p = 0.5) { return uniform(rng, 0.0, 1.0) < p; }

// Mix of short decimals and full-precision doubles.
double coordinate(std::mt19937_64& rng, double lo, double hi) {
  double v = uniform(rng, lo, hi);
  return coin(rng, 0.7) ? std::round(v * 100.0) / 100.0 : v;
}

std::string hex_color(std::mt19937_64& rng) {
  static const char* digits = "0123456789ABCDEF";
  std::string out = "#";
  for (int i = 0; i < 6; ++i) out += digits[pick(rng, 16)];
  return out;
}

scene::StyleSpec random_style(std::mt19937_64& rng) {
  scene::StyleSpec s;
  if (coin(rng)) s.fill_color = hex_color(rng);
  if (coin(rng)) s.stroke_color = hex_color(rng);
  if (coin(rng)) s.stroke_width = coordinate(rng, 0.0, 6.0);
  if (coin(rng, 0.3)) s.dash_pattern = {coordinate(rng, 1.0, 8.0), coordinate(rng, 1.0, 8.0)};
  if (coin(rng, 0.3)) s.font_size = coordinate(rng, 6.0, 30.0);
  if (coin(rng, 0.2)) s.font_family = coin(rng) ? "Times New Roman" : "Courier";
  if (coin(rng, 0.3)) s.opacity = std::round(uniform(rng, 0.0, 1.0) * 100.0) / 100.0;
  if (coin(rng, 0.3)) s.rounding_radius = coordinate(rng, 0.0, 20.0);
  return s;
}

std::optional<std::string> random_label(std::mt19937_64& rng) {
  static const std::vector<std::string> labels = {
      "Encoder",           "Mask <Decoder>",   "Q & A",        "\"quoted\" 'text'",
      "multi\nline label", "tab\there",        "Überblick α→β", "50% ; style=fake",
      "a=b;c=d",           "   padded   ",     "{braces}",     "emoji 🚀"};
  if (coin(rng, 0.3)) return std::nullopt;
  return labels[static_cast<std::size_t>(pick(rng, static_cast<int>(labels.size())))];
}

}  // namespace

scene::Canvas random_canvas(std::mt19937_64& rng) {
  double width = coin(rng) ? scene::kDefaultPageWidth : std::round(uniform(rng, 300, 3000));
  double height = coin(rng) ? scene::kDefaultPageHeight : std::round(uniform(rng, 200, 2000));
  scene::Canvas canvas(width, height, coin(rng) ? scene::kDefaultGrid : 5.0);
  if (coin(rng, 0.3)) canvas.set_metadata("figforgeRun", "run <" + std::to_string(rng() % 100) + ">");

  static const std::vector<scene::ElementKind> kinds = {
      scene::ElementKind::kRect,      scene::ElementKind::kRoundedRect, scene::ElementKind::kEllipse,
      scene::ElementKind::kCuboid,    scene::ElementKind::kTrapezoid,   scene::ElementKind::kText,
      scene::ElementKind::kPath};
  static const std::vector<std::string> tags = {"encoder", "mask decoder", "loss"};

  std::vector<std::string> groups;
  std::vector<std::string> ids;
  const int group_count = pick(rng, 3);
  const int count = 1 + pick(rng, 20);
  for (int i = 0; i < group_count + count; ++i) {
    scene::SceneElement e;
    const bool is_group = i < group_count;
    e.id = (is_group ? "g" : "e") + std::to_string(i);
    e.kind = is_group ? scene::ElementKind::kGroup
                      : kinds[static_cast<std::size_t>(pick(rng, static_cast<int>(kinds.size())))];
    e.x = coordinate(rng, -50.0, width);
    e.y = coordinate(rng, -50.0, height);
    e.width = coordinate(rng, 1.0, 400.0);
    e.height = coordinate(rng, 1.0, 300.0);
    e.style = random_style(rng);
    e.label = random_label(rng);
    e.z_order = pick(rng, 4) - 1;
    if (!groups.empty() && coin(rng, 0.4)) {
      e.parent_group = groups[static_cast<std::size_t>(pick(rng, static_cast<int>(groups.size())))];
    }
    if (coin(rng, 0.5)) e.concept_tag = tags[static_cast<std::size_t>(pick(rng, 3))];
    if (is_group) groups.push_back(e.id);
    ids.push_back(e.id);
    canvas.add_element(std::move(e));
  }

  static const std::vector<scene::ArrowHead> heads = {scene::ArrowHead::kNone, scene::ArrowHead::kOpen,
                                                      scene::ArrowHead::kFilled, scene::ArrowHead::kBlock};
  auto endpoint = [&]() -> scene::Endpoint {
    if (coin(rng, 0.75)) return ids[static_cast<std::size_t>(pick(rng, static_cast<int>(ids.size())))];
    return scene::Point{coordinate(rng, 0.0, width), coordinate(rng, 0.0, height)};
  };
  const int links = pick(rng, 8);
  for (int i = 0; i < links; ++i) {
    scene::Connector c;
    c.id = "c" + std::to_string(i);
    c.source = endpoint();
    c.target = endpoint();
    const int waypoints = pick(rng, 3);
    for (int w = 0; w < waypoints; ++w) {
      c.waypoints.push_back({coordinate(rng, 0.0, width), coordinate(rng, 0.0, height)});
    }
    c.arrow_head = heads[static_cast<std::size_t>(pick(rng, 4))];
    c.label = random_label(rng);
    c.style = random_style(rng);
    canvas.add_connector(std::move(c));
  }
  return canvas;
}

middleware::Middleware box_middleware(const std::string& id, const std::string& theme,
                                      const std::string& concept_id) {
  middleware::Middleware mw;
  mw.id = id;
  mw.name = "box";
  mw.description = "a labeled box";
  mw.theme = theme;
  mw.concept_id = concept_id;
  mw.params = {
      middleware::ParamSpec{"x", middleware::ParamKind::kNumber, 100.0, 0.0, 1600.0, {}},
      middleware::ParamSpec{"y", middleware::ParamKind::kNumber, 100.0, 0.0, 900.0, {}},
  };
  middleware::Instruction box;
  box.name = "box";
  box.fields = {{"kind", std::string("rect")},
                {"x", std::string("x")},
                {"y", std::string("y")},
                {"width", 120.0},
                {"height", 60.0},
                {"label", std::string("box")}};
  mw.body = {box};
  return mw;
}

middleware::Repository random_repository(std::mt19937_64& rng, std::size_t max_concepts,
                                         const retrieval::EmbeddingProvider& provider) {
  static const std::vector<std::string> heads = {
      "image encoder", "image encoders", "text encoder", "attention map", "attention maps",
      "mask decoder",  "graph readout",  "message passing", "node features", "retriever",
      "document index", "query encoder", "planner", "memory store", "answer generator"};
  static const std::vector<std::string> mods = {"", "", " module", " block", " stage", " head"};
  static const std::vector<std::string> themes = {"vision", "language", "graphs"};

  middleware::Repository repo;
  const std::size_t target = 1 + rng() % max_concepts;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t attempt = 0; seen.size() < target && attempt < 10 * max_concepts; ++attempt) {
    const std::string theme = themes[rng() % themes.size()];
    const std::string name = heads[rng() % heads.size()] + mods[rng() % mods.size()];
    const std::string concept_id = middleware::concept_key(name);
    if (!seen.insert({theme, concept_id}).second) continue;
    const int members = 1 + pick(rng, 3);
    for (int m = 0; m < members; ++m) {
      auto mw = box_middleware(theme + "/" + concept_id + "/m" + std::to_string(m), theme, concept_id);
      if (coin(rng, 0.5)) mw.body[0].fields["width"] = 80.0 + 20.0 * pick(rng, 3);
      repo.add(std::move(mw), theme, concept_id, provider);
    }
  }
  return repo;
}

std::vector<json> StubConstructor::extract(const middleware::ExtractionInput&) {
  ++calls;
  return proposals;
}

std::vector<std::string> StubConstructor::find_redundant(
    const std::string&, const std::string&, const std::vector<middleware::Middleware>& members) {
  ++calls;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (members[i].body == members[j].body && members[i].params == members[j].params) {
        out.push_back(members[i].id);
        break;
      }
    }
  }
  return out;
}

json StubConstructor::mutate(const middleware::Middleware& parent) {
  ++calls;
  json p = middleware::proposal_json(parent);
  p["name"] = parent.name + "_m";
  return p;
}

json StubConstructor::crossover(const std::vector<middleware::Middleware>& parents) {
  ++calls;
  json p = middleware::proposal_json(parents.front());
  p["name"] = parents.front().name + "_x";
  return p;
}

// --- PathScenario -----------------------------------------------------------

namespace {

constexpr double kChoiceSpacing = 200.0;
constexpr double kChoiceOrigin = 40.0;

int decode_choice(double x) {
  return static_cast<int>(std::lround((x - kChoiceOrigin) / kChoiceSpacing));
}

int concept_index(const std::string& concept_id) { return std::stoi(concept_id.substr(1)); }

}  // namespace

PathScenario::PathScenario(int concepts, int choices, std::uint64_t seed, double min_quality)
    : concepts_(concepts),
      choices_(choices),
      backend_([this](const agents::ChatRequest& r) { return respond(r); }) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> frontier = {""};
  for (int depth = 0; depth < concepts; ++depth) {
    std::vector<std::string> next;
    for (const auto& prefix : frontier) {
      for (int c = 0; c < choices; ++c) {
        std::string p = prefix + std::to_string(c);
        table_[p] = uniform(rng, min_quality, 1.0);
        next.push_back(p);
      }
    }
    frontier = std::move(next);
  }
  for (int i = 0; i < concepts; ++i) {
    const std::string id = "c" + std::to_string(i);
    repository_.add(box_middleware("box/" + id, "scenario", id), "scenario", id, provider_);
  }
}

double PathScenario::quality(const std::string& prefix) const {
  if (prefix.empty()) return 0.0;
  return table_.at(prefix);
}

std::string PathScenario::decode(const scene::Canvas& canvas) const {
  std::string prefix(static_cast<std::size_t>(concepts_), '?');
  int drawn = 0;
  for (const auto& e : canvas.elements()) {
    if (!e.concept_tag) continue;
    prefix[static_cast<std::size_t>(concept_index(*e.concept_tag))] =
        static_cast<char>('0' + decode_choice(e.x));
    ++drawn;
  }
  return prefix.substr(0, static_cast<std::size_t>(drawn));
}

std::string PathScenario::brute_force_best() const {
  std::string best;
  double best_q = -1.0;
  for (const auto& [prefix, q] : table_) {
    if (static_cast<int>(prefix.size()) != concepts_) continue;
    if (q > best_q) {
      best_q = q;
      best = prefix;
    }
  }
  return best;
}

std::string PathScenario::respond(const agents::ChatRequest& request) {
  const json user = json::parse(request.user_content);
  const std::string task = user.at("task");
  if (task == "parse_paper") {
    json concepts = json::array();
    json edges = json::array();
    for (int i = 0; i < concepts_; ++i) {
      concepts.push_back({{"id", "c" + std::to_string(i)},
                          {"name", "c" + std::to_string(i)},
                          {"description", "step " + std::to_string(i)}});
      if (i > 0) {
        edges.push_back({{"source", "c" + std::to_string(i - 1)},
                         {"target", "c" + std::to_string(i)},
                         {"label", "then"}});
      }
    }
    return json{{"theme", "scenario"}, {"concepts", concepts}, {"edges", edges}}.dump();
  }
  if (task == "draw_concept") {
    ++drawer_calls_;
    const std::string id = user.at("concept").at("id");
    const int choice = user.at("variant").get<int>() % choices_;
    std::string mw = user.at("candidates").at(0).at("id");
    for (const auto& c : user.at("candidates")) {
      if (c.at("id") == "box/" + id) mw = c.at("id");
    }
    json bindings = {{"x", kChoiceOrigin + kChoiceSpacing * choice},
                     {"y", 100.0 + 150.0 * concept_index(id)}};
    return json{{"invocations", json::array({{{"middleware", mw}, {"bindings", bindings}}})}}.dump();
  }
  if (task == "evaluate_canvas") {
    std::string prefix(static_cast<std::size_t>(concepts_), '?');
    int drawn = 0;
    for (const auto& e : user.at("canvas").at("elements")) {
      if (!e.contains("concept")) continue;
      prefix[static_cast<std::size_t>(concept_index(e.at("concept")))] =
          static_cast<char>('0' + decode_choice(e.at("x").get<double>()));
      ++drawn;
    }
    prefix.resize(static_cast<std::size_t>(drawn));
    return json{{"score", quality(prefix)}, {"feedback", "prefix " + prefix}}.dump();
  }
  if (task == "evaluate_concept_rendering") return R"({"score": 0.5})";
  throw Error(ErrorKind::kBackendFailure, "scenario backend cannot answer " + task);
}

}  // namespace figforge::test
