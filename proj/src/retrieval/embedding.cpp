#include "figforge/retrieval/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

#include "figforge/error.hpp"
#include "figforge/util/http.hpp"

namespace figforge::retrieval {

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Vector normalized(Vector v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(ErrorKind::kProviderFailure, "zero embedding vector");
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  bool gap = false;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      if (gap && !out.empty()) out.push_back(' ');
      gap = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      gap = true;
    }
  }
  return out;
}

TrigramEmbedding::TrigramEmbedding(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw Error(ErrorKind::kInvalidArgument, "embedding dimension must be > 0");
}

Vector TrigramEmbedding::embed(std::string_view text) const {
  const std::string padded = " " + normalize_text(text) + " ";
  Vector v(dimension_, 0.0);
  if (padded.size() < 3) {
    v[0] = 1.0;
    return v;
  }
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    v[fnv1a(std::string_view(padded).substr(i, 3)) % dimension_] += 1.0;
  }
  return normalized(std::move(v));
}

RemoteEmbedding::RemoteEmbedding(std::string endpoint, std::string model, std::string api_key,
                                 std::size_t dimension, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      dimension_(dimension),
      timeout_(timeout) {}

Vector RemoteEmbedding::embed(std::string_view text) const {
  nlohmann::json request = {{"model", model_}, {"input", std::string(text)}};
  nlohmann::json response;
  try {
    response = util::post_json(endpoint_, "/embeddings", api_key_, request, timeout_);
  } catch (const Error& e) {
    throw Error(ErrorKind::kProviderFailure, e.what());
  }
  try {
    const auto& data = response.at("data").at(0).at("embedding");
    Vector v = data.get<Vector>();
    if (v.size() != dimension_) {
      throw Error(ErrorKind::kProviderFailure,
                  "embedding has dimension " + std::to_string(v.size()) + ", expected " +
                      std::to_string(dimension_));
    }
    return normalized(std::move(v));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProviderFailure, std::string("bad embedding response: ") + e.what());
  }
}

double cosine_similarity(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "vectors of dimension " +
                                                   std::to_string(u.size()) + " and " +
                                                   std::to_string(v.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot, -1.0, 1.0);
}

Vector quantize(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::round(v[i] * 1e9) / 1e9;
  return out;
}

}  // namespace figforge::retrieval
