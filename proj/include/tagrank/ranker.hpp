#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tagrank/corpus.hpp"
#include "tagrank/densevec.hpp"
#include "tagrank/tfidf.hpp"

namespace tagrank {

// Sparse baseline: fitted on the index keys themselves.
struct TfIdfEncoder {};

// Any f(.) behind the provider interface. The provider must outlive every
// index built with it.
struct DenseEncoder {
  EmbeddingProvider* provider = nullptr;
};

using Encoder = std::variant<TfIdfEncoder, DenseEncoder>;

struct Ranked {
  std::string key;
  double score = 0.0;

  friend bool operator==(const Ranked&, const Ranked&) = default;
};

// Dot products of every row with `query`, accumulated in double.
template <typename DerivedRows, typename DerivedQuery>
Eigen::VectorXd dot_scores(const Eigen::MatrixBase<DerivedRows>& rows,
                           const Eigen::MatrixBase<DerivedQuery>& query) {
  return rows.template cast<double>() * query.template cast<double>();
}

// Descending score, ascending key on exact ties; `keys` must be ascending so
// the tie rule reduces to ascending position.
std::vector<Ranked> top_k(const std::vector<std::string>& keys,
                          const Eigen::Ref<const Eigen::VectorXd>& scores,
                          std::size_t k);

// Unique canonical keys in ascending order plus their encoded rows.
class DescriptorIndex {
 public:
  const std::vector<std::string>& keys() const noexcept { return keys_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool dense() const noexcept { return std::holds_alternative<Dense>(backend_); }

  // Key embeddings; only for dense indexes.
  EmbeddingMatrix matrix() const;

  // Score of `request` against every key, in key order.
  Eigen::VectorXd scores(std::string_view request) const;
  // requests x keys; dense backends embed all requests in one call.
  Eigen::MatrixXd scores(const std::vector<std::string>& requests) const;

  // Adopts precomputed key embeddings (e.g. a loaded DVEC file). Rows are
  // reordered to ascending key order.
  static DescriptorIndex from_matrix(const EmbeddingMatrix& m,
                                     EmbeddingProvider& provider);

 private:
  friend DescriptorIndex build_index_from_keys(std::vector<std::string> keys,
                                               const Encoder& encoder);
  struct Sparse {
    TfIdfModel model;
    std::vector<SparseVector> rows;
  };
  struct Dense {
    EmbeddingProvider* provider;
    RowMatrix<float> rows;
  };

  std::vector<std::string> keys_;
  std::variant<Sparse, Dense> backend_;
};

// Deduplicates and sorts the keys, then encodes one row per key.
DescriptorIndex build_index(const std::vector<DescriptorSet>& descriptor_sets,
                            const Encoder& encoder);
DescriptorIndex build_index_from_keys(std::vector<std::string> keys,
                                      const Encoder& encoder);

// Top min(k, |index|) keys for `request`. k must be >= 1.
std::vector<Ranked> rank(std::string_view request, const DescriptorIndex& index,
                         std::size_t k);
std::vector<std::vector<Ranked>> rank_batch(
    const std::vector<std::string>& requests, const DescriptorIndex& index,
    std::size_t k);

}  // namespace tagrank
