#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace figforge::retrieval {

using Vector = std::vector<double>;

/// Contract: embed() returns a unit-length vector of dimension() entries,
/// identical for identical text, and is safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual Vector embed(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Offline provider: character trigrams of the normalized text hashed
/// (FNV-1a 64) into term-frequency buckets, then L2-normalized.
class TrigramEmbedding final : public EmbeddingProvider {
 public:
  explicit TrigramEmbedding(std::size_t dimension = 256);
  std::size_t dimension() const override { return dimension_; }
  Vector embed(std::string_view text) const override;
  std::string name() const override { return "trigram-" + std::to_string(dimension_); }

 private:
  std::size_t dimension_;
};

/// OpenAI-compatible embeddings endpoint (POST {endpoint}/embeddings).
/// Throws kProviderFailure on transport, status or schema problems.
class RemoteEmbedding final : public EmbeddingProvider {
 public:
  RemoteEmbedding(std::string endpoint, std::string model, std::string api_key,
                  std::size_t dimension, std::chrono::seconds timeout);
  std::size_t dimension() const override { return dimension_; }
  Vector embed(std::string_view text) const override;
  std::string name() const override { return "remote:" + model_; }

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
  std::size_t dimension_;
  std::chrono::seconds timeout_;
};

/// Dot product of two unit vectors. Throws kDimensionMismatch.
double cosine_similarity(const Vector& u, const Vector& v);

/// Rounds each component to 1e-9 so vectors survive the decimal repository
/// file format exactly.
Vector quantize(const Vector& v);

/// Lower-case, collapse runs of non-alphanumerics to one space, trim.
std::string normalize_text(std::string_view text);

}  // namespace figforge::retrieval
