#include "figforge/middleware/repository.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "figforge/error.hpp"
#include "figforge/middleware/json_io.hpp"
#include "figforge/util/text.hpp"

namespace figforge::middleware {

using nlohmann::json;

std::string concept_key(std::string_view name) { return retrieval::normalize_text(name); }

void Repository::add(Middleware mw, const std::string& theme, const std::string& concept_id,
                     const retrieval::EmbeddingProvider& provider) {
  const std::string t = concept_key(theme);
  const std::string c = concept_key(concept_id);
  if (t.empty() || c.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "theme and concept must be non-empty");
  }
  if (mw.id.empty()) throw Error(ErrorKind::kInvalidArgument, "middleware id is empty");
  if (store_.count(mw.id) != 0) {
    throw Error(ErrorKind::kDuplicateId, "middleware '" + mw.id + "' already exists");
  }
  validate(mw);
  if (embeddings_.count(c) == 0) {
    retrieval::Vector v = retrieval::quantize(provider.embed(c));
    if (!embeddings_.empty() && embeddings_.begin()->second.size() != v.size()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "provider dimension " + std::to_string(v.size()) +
                      " differs from the repository's " +
                      std::to_string(embeddings_.begin()->second.size()));
    }
    embeddings_[c] = std::move(v);
    provider_name_ = provider.name();
  }
  mw.theme = t;
  mw.concept_id = c;
  entries_[EntryKey{t, c}].push_back(mw.id);
  std::string id = mw.id;
  store_.emplace(std::move(id), std::move(mw));
}

void Repository::remove(const std::string& id) {
  auto it = store_.find(id);
  if (it == store_.end()) throw Error(ErrorKind::kUnknownId, "no middleware '" + id + "'");
  EntryKey key{it->second.theme, it->second.concept_id};
  store_.erase(it);
  auto entry = entries_.find(key);
  if (entry != entries_.end()) {
    auto& ids = entry->second;
    ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
    if (ids.empty()) entries_.erase(entry);
  }
  drop_unused_embeddings();
}

void Repository::drop_unused_embeddings() {
  std::set<std::string> used;
  for (const auto& [key, ids] : entries_) used.insert(key.concept_id);
  for (auto it = embeddings_.begin(); it != embeddings_.end();) {
    it = used.count(it->first) != 0 ? std::next(it) : embeddings_.erase(it);
  }
}

const Middleware* Repository::find(const std::string& id) const {
  auto it = store_.find(id);
  return it == store_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* Repository::entry(const std::string& theme,
                                                  const std::string& concept_id) const {
  auto it = entries_.find(EntryKey{theme, concept_id});
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Repository::themes() const {
  std::vector<std::string> out;
  for (const auto& [key, ids] : entries_) {
    if (out.empty() || out.back() != key.theme) out.push_back(key.theme);
  }
  return out;
}

std::vector<std::string> Repository::concepts(const std::string& theme) const {
  std::vector<std::string> out;
  for (const auto& [key, ids] : entries_) {
    if (key.theme == theme) out.push_back(key.concept_id);
  }
  return out;
}

const retrieval::Vector* Repository::embedding(const std::string& concept_id) const {
  auto it = embeddings_.find(concept_id);
  return it == embeddings_.end() ? nullptr : &it->second;
}

void Repository::record_usage(const std::string& id, double score) {
  auto it = store_.find(id);
  if (it == store_.end()) throw Error(ErrorKind::kUnknownId, "no middleware '" + id + "'");
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorKind::kOutOfRange,
                "quality score " + std::to_string(score) + " is outside [0,1]");
  }
  it->second.usage_s += score;
  it->second.usage_n += 1;
}

MergeReport Repository::merge(double threshold, ConstructorPort& backend) {
  Repository next = *this;
  MergeReport report;
  for (const std::string& theme : themes()) {
    std::vector<std::string> names = concepts(theme);
    std::vector<std::size_t> parent(names.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = i + 1; j < names.size(); ++j) {
        const auto* a = embedding(names[i]);
        const auto* b = embedding(names[j]);
        if (a == nullptr || b == nullptr) {
          throw Error(ErrorKind::kPrecondition, "concept embeddings missing in theme " + theme);
        }
        if (retrieval::cosine_similarity(*a, *b) >= threshold) parent[root(j)] = root(i);
      }
    }
    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < names.size(); ++i) groups[root(i)].push_back(names[i]);

    for (auto& [r, members] : groups) {
      if (members.size() < 2) continue;
      // members are sorted because names is; the first maximum wins ties.
      std::string canonical = members.front();
      for (const auto& m : members) {
        if (entry(theme, m)->size() > entry(theme, canonical)->size()) canonical = m;
      }
      std::vector<std::string> ids = *entry(theme, canonical);
      MergeReport::Cluster cluster{theme, canonical, {}};
      for (const auto& m : members) {
        if (m == canonical) continue;
        cluster.merged.push_back(m);
        for (const auto& id : *entry(theme, m)) ids.push_back(id);
        next.entries_.erase(EntryKey{theme, m});
      }
      for (const auto& id : ids) next.store_.at(id).concept_id = canonical;
      next.entries_[EntryKey{theme, canonical}] = ids;

      std::vector<Middleware> group;
      for (const auto& id : ids) group.push_back(next.store_.at(id));
      std::vector<std::string> redundant;
      try {
        redundant = backend.find_redundant(theme, canonical, group);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        throw Error(ErrorKind::kBackendFailure, e.what());
      }
      std::set<std::string> drop;
      for (const auto& id : redundant) {
        if (std::find(ids.begin(), ids.end(), id) != ids.end()) drop.insert(id);
      }
      if (drop.size() == ids.size()) drop.erase(ids.front());
      for (const auto& id : ids) {
        if (drop.count(id) == 0) continue;
        next.remove(id);
        report.removed.push_back(id);
      }
      report.clusters.push_back(std::move(cluster));
    }
  }
  next.drop_unused_embeddings();
  *this = std::move(next);
  return report;
}

std::vector<std::string> Repository::invariant_problems() const {
  std::vector<std::string> problems;
  std::map<std::string, int> reach;
  std::size_t dimension = embeddings_.empty() ? 0 : embeddings_.begin()->second.size();
  for (const auto& [key, ids] : entries_) {
    const std::string where = "entry (" + key.theme + ", " + key.concept_id + ")";
    if (ids.empty()) problems.push_back(where + " is empty");
    if (embeddings_.count(key.concept_id) == 0) {
      problems.push_back("concept '" + key.concept_id + "' has no embedding");
    }
    for (const auto& id : ids) {
      ++reach[id];
      const Middleware* mw = find(id);
      if (mw == nullptr) {
        problems.push_back(where + " references unknown middleware '" + id + "'");
      } else if (mw->theme != key.theme || mw->concept_id != key.concept_id) {
        problems.push_back("middleware '" + id + "' is indexed under " + where +
                           " but records (" + mw->theme + ", " + mw->concept_id + ")");
      }
    }
  }
  for (const auto& [id, mw] : store_) {
    if (mw.id != id) problems.push_back("store key '" + id + "' holds '" + mw.id + "'");
    if (reach[id] != 1) {
      problems.push_back("middleware '" + id + "' is reachable from " +
                         std::to_string(reach[id]) + " entries");
    }
    for (const auto& p : validation_problems(mw)) problems.push_back(id + ": " + p);
  }
  for (const auto& [c, v] : embeddings_) {
    if (v.size() != dimension) problems.push_back("embedding of '" + c + "' has wrong dimension");
  }
  return problems;
}

json Repository::to_json() const {
  json entries = json::array();
  for (const auto& [key, ids] : entries_) {
    entries.push_back({{"theme", key.theme}, {"concept", key.concept_id}, {"middlewares", ids}});
  }
  json middlewares = json::array();
  for (const auto& [id, mw] : store_) middlewares.push_back(middleware::to_json(mw));
  json vectors = json::object();
  for (const auto& [c, v] : embeddings_) vectors[c] = v;
  std::size_t dimension = embeddings_.empty() ? 0 : embeddings_.begin()->second.size();
  return {{"schema_version", kRepositorySchemaVersion},
          {"themes", themes()},
          {"entries", entries},
          {"middlewares", middlewares},
          {"embeddings",
           {{"provider", provider_name_}, {"dimension", dimension}, {"vectors", vectors}}}};
}

Repository Repository::from_json(const json& j) {
  auto corrupt = [](const std::string& what) {
    return Error(ErrorKind::kCorruptFile, "repository file: " + what);
  };
  if (!j.is_object() || !j.contains("schema_version") ||
      !j.at("schema_version").is_number_integer()) {
    throw corrupt("missing schema_version");
  }
  int version = j.at("schema_version").get<int>();
  if (version > kRepositorySchemaVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "repository schema version " + std::to_string(version) +
                    " is newer than supported version " +
                    std::to_string(kRepositorySchemaVersion));
  }
  if (version < 1) throw corrupt("invalid schema_version");
  Repository repo;
  try {
    for (const auto& m : j.at("middlewares")) {
      Middleware mw = middleware_from_json(m);
      std::string id = mw.id;
      if (!repo.store_.emplace(id, std::move(mw)).second) throw corrupt("duplicate id " + id);
    }
    for (const auto& e : j.at("entries")) {
      EntryKey key{e.at("theme").get<std::string>(), e.at("concept").get<std::string>()};
      auto ids = e.at("middlewares").get<std::vector<std::string>>();
      if (!repo.entries_.emplace(key, std::move(ids)).second) throw corrupt("duplicate entry");
    }
    const json& emb = j.at("embeddings");
    repo.provider_name_ = emb.at("provider").get<std::string>();
    auto dimension = emb.at("dimension").get<std::size_t>();
    for (const auto& [c, v] : emb.at("vectors").items()) {
      auto vec = v.get<retrieval::Vector>();
      if (vec.size() != dimension) throw corrupt("embedding of '" + c + "' has wrong dimension");
      repo.embeddings_[c] = std::move(vec);
    }
    if (j.at("themes").get<std::vector<std::string>>() != repo.themes()) {
      throw corrupt("theme list disagrees with entries");
    }
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kCorruptFile) throw;
    throw corrupt(e.what());
  }
  auto problems = repo.invariant_problems();
  if (!problems.empty()) throw corrupt(problems.front());
  return repo;
}

void Repository::save(const std::filesystem::path& path) const {
  util::write_file(path, to_json().dump(2) + "\n");
}

Repository Repository::load(const std::filesystem::path& path) {
  std::string text = util::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptFile,
                "repository file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void UsageLedger::record(const std::string& id, double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorKind::kOutOfRange, "quality score outside [0,1]");
  }
  std::lock_guard lock(mutex_);
  records_.push_back({id, score});
}

std::vector<UsageLedger::Record> UsageLedger::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

void UsageLedger::apply(Repository& repository) const {
  for (const auto& r : records()) repository.record_usage(r.middleware_id, r.score);
}

CreationResult create_from_pair(const std::string& paper_id, const std::string& paper_text,
                                const scene::Canvas& mi_canvas, const std::string& theme,
                                const std::vector<agents::Concept>& concepts,
                                ConstructorPort& constructor) {
  CreationResult result;
  std::set<std::string> ids;
  for (const auto& c : concepts) {
    ExtractionInput input{paper_id, paper_text, &mi_canvas, theme, c};
    std::vector<json> proposals;
    try {
      proposals = constructor.extract(input);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kBackendFailure, e.what());
    }
    for (const auto& proposal : proposals) {
      Middleware mw;
      try {
        mw = middleware_from_proposal(proposal);
      } catch (const Error& e) {
        result.report.push_back("concept '" + c.id + "': proposal dropped: " + e.what());
        continue;
      }
      std::string base = paper_id + "/" + util::slugify(c.name.empty() ? c.id : c.name) + "/" +
                         util::slugify(mw.name);
      std::string id = base;
      for (int n = 2; ids.count(id) != 0; ++n) id = base + "-" + std::to_string(n);
      mw.id = id;
      mw.theme = concept_key(theme);
      mw.concept_id = concept_key(c.name.empty() ? c.id : c.name);
      mw.provenance = Provenance{ProvenanceKind::kExtracted, paper_id, {}};
      auto problems = validation_problems(mw);
      if (!problems.empty()) {
        std::string msg = "concept '" + c.id + "': proposal '" + mw.name + "' dropped:";
        for (const auto& p : problems) msg += " " + p + ";";
        msg.pop_back();
        result.report.push_back(msg);
        continue;
      }
      ids.insert(id);
      result.middlewares.push_back(std::move(mw));
    }
  }
  return result;
}

}  // namespace figforge::middleware
