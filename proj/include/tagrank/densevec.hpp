#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tagrank/error.hpp"

namespace tagrank {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense rows keyed by text. One row per id, `dim` columns.
template <typename Scalar>
class BasicEmbeddingMatrix {
 public:
  using Rows = RowMatrix<Scalar>;

  BasicEmbeddingMatrix() = default;
  BasicEmbeddingMatrix(std::vector<std::string> ids, Rows rows)
      : ids_(std::move(ids)), rows_(std::move(rows)) {
    if (static_cast<Eigen::Index>(ids_.size()) != rows_.rows()) {
      throw Error(ErrorCode::kIdCountMismatch,
                  std::to_string(ids_.size()) + " ids for " +
                      std::to_string(rows_.rows()) + " rows");
    }
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(rows_.cols()); }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Rows& rows() const noexcept { return rows_; }
  auto row(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)); }

  bool all_finite() const { return rows_.allFinite(); }

  friend bool operator==(const BasicEmbeddingMatrix& a,
                         const BasicEmbeddingMatrix& b) {
    return a.ids_ == b.ids_ && a.rows_.rows() == b.rows_.rows() &&
           a.rows_.cols() == b.rows_.cols() && a.rows_ == b.rows_;
  }

 private:
  std::vector<std::string> ids_;
  Rows rows_;
};

using EmbeddingMatrix = BasicEmbeddingMatrix<float>;

struct ProviderInfo {
  std::string name;
  std::size_t dim = 0;
  bool normalizes = false;
};

// f(.): text in, vector out.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual ProviderInfo info() = 0;
  // One vector per text; widths are checked by embed().
  virtual std::vector<std::vector<float>> embed_raw(
      const std::vector<std::string>& texts) = 0;
};

// g(.,.): joint relevance score of (query, document) pairs.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::vector<double> score(
      const std::vector<std::pair<std::string, std::string>>& pairs) = 0;
};

// Validated embedding: one row per text, in input order. Ids are the texts
// themselves and may repeat.
EmbeddingMatrix embed(EmbeddingProvider& provider,
                      const std::vector<std::string>& texts);

inline constexpr std::size_t kMockDim = 64;
inline constexpr std::uint64_t kMockSeed = 0x5EED;

// Offline stand-in for f: the normalized mean of per-token pseudo-random unit
// vectors. Tokens are summed in sorted order so only the token multiset
// matters. No tokens gives the zero vector.
Eigen::VectorXf mock_embed(std::string_view text, std::uint64_t seed = kMockSeed);

class MockProvider final : public EmbeddingProvider {
 public:
  explicit MockProvider(std::uint64_t seed = kMockSeed) : seed_(seed) {}
  ProviderInfo info() override;
  std::vector<std::vector<float>> embed_raw(
      const std::vector<std::string>& texts) override;

 private:
  std::uint64_t seed_;
};

// g(r, d) = mock_embed(r) . mock_embed(d), accumulated in double in index
// order.
class MockScorer final : public PairScorer {
 public:
  explicit MockScorer(std::uint64_t seed = kMockSeed) : seed_(seed) {}
  std::vector<double> score(
      const std::vector<std::pair<std::string, std::string>>& pairs) override;

 private:
  std::uint64_t seed_;
};

// Memoizes another provider by text. Only cache misses reach the inner
// provider, batched in first-seen order.
class CachingProvider final : public EmbeddingProvider {
 public:
  explicit CachingProvider(EmbeddingProvider& inner) : inner_(inner) {}
  ProviderInfo info() override;
  std::vector<std::vector<float>> embed_raw(
      const std::vector<std::string>& texts) override;

  std::size_t cached() const;
  std::size_t misses() const noexcept { return misses_; }

 private:
  EmbeddingProvider& inner_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::vector<float>> cache_;
  std::size_t misses_ = 0;
};

// DVEC v1: "DVEC", u32 version, u32 dim, u64 count, count x (u32 length,
// UTF-8 id), then count x dim little-endian float32, row-major.
void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_matrix(const std::filesystem::path& path);

std::string encode_matrix(const EmbeddingMatrix& m);
EmbeddingMatrix decode_matrix(std::string_view bytes);

}  // namespace tagrank
