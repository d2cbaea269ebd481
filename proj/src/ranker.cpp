#include "tagrank/ranker.hpp"

#include <algorithm>
#include <numeric>

namespace tagrank {

std::vector<Ranked> top_k(const std::vector<std::string>& keys,
                          const Eigen::Ref<const Eigen::VectorXd>& scores,
                          std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(k, order.size());
  const auto better = [&](std::size_t a, std::size_t b) {
    const double sa = scores[static_cast<Eigen::Index>(a)];
    const double sb = scores[static_cast<Eigen::Index>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n),
                    order.end(), better);
  std::vector<Ranked> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({keys[order[i]], scores[static_cast<Eigen::Index>(order[i])]});
  }
  return out;
}

EmbeddingMatrix DescriptorIndex::matrix() const {
  const auto* d = std::get_if<Dense>(&backend_);
  if (d == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "sparse index has no dense matrix");
  }
  return EmbeddingMatrix(keys_, d->rows);
}

Eigen::VectorXd DescriptorIndex::scores(std::string_view request) const {
  return scores(std::vector<std::string>{std::string(request)}).row(0).transpose();
}

Eigen::MatrixXd DescriptorIndex::scores(
    const std::vector<std::string>& requests) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(requests.size()),
                      static_cast<Eigen::Index>(keys_.size()));
  if (requests.empty()) return out;
  if (const auto* s = std::get_if<Sparse>(&backend_)) {
    for (std::size_t r = 0; r < requests.size(); ++r) {
      const SparseVector q = transform(s->model, requests[r]);
      for (std::size_t c = 0; c < s->rows.size(); ++c) {
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            dot(q, s->rows[c]);
      }
    }
    return out;
  }
  const auto& d = std::get<Dense>(backend_);
  const EmbeddingMatrix q = embed(*d.provider, requests);
  if (q.dim() != static_cast<std::size_t>(d.rows.cols())) {
    throw Error(ErrorCode::kDimMismatch,
                "request width " + std::to_string(q.dim()) +
                    " differs from index width " +
                    std::to_string(d.rows.cols()));
  }
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r) = dot_scores(d.rows, q.rows().row(r).transpose()).transpose();
  }
  return out;
}

DescriptorIndex DescriptorIndex::from_matrix(const EmbeddingMatrix& m,
                                             EmbeddingProvider& provider) {
  if (m.size() == 0) throw Error(ErrorCode::kEmptyInput, "empty matrix");
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return m.ids()[a] < m.ids()[b]; });
  DescriptorIndex index;
  RowMatrix<float> rows(m.rows().rows(), m.rows().cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && m.ids()[order[i]] == m.ids()[order[i - 1]]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate key \"" + m.ids()[order[i]] + "\"");
    }
    index.keys_.push_back(m.ids()[order[i]]);
    rows.row(static_cast<Eigen::Index>(i)) = m.row(order[i]);
  }
  index.backend_ = Dense{&provider, std::move(rows)};
  return index;
}

DescriptorIndex build_index_from_keys(std::vector<std::string> keys,
                                      const Encoder& encoder) {
  if (keys.empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot index an empty key list");
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  DescriptorIndex index;
  if (std::holds_alternative<TfIdfEncoder>(encoder)) {
    DescriptorIndex::Sparse sparse{fit(keys), {}};
    sparse.rows.reserve(keys.size());
    for (const auto& key : keys) sparse.rows.push_back(transform(sparse.model, key));
    index.backend_ = std::move(sparse);
  } else {
    auto* provider = std::get<DenseEncoder>(encoder).provider;
    if (provider == nullptr) {
      throw Error(ErrorCode::kProviderUnavailable, "dense encoder has no provider");
    }
    EmbeddingMatrix m = embed(*provider, keys);
    index.backend_ = DescriptorIndex::Dense{provider, m.rows()};
  }
  index.keys_ = std::move(keys);
  return index;
}

DescriptorIndex build_index(const std::vector<DescriptorSet>& descriptor_sets,
                            const Encoder& encoder) {
  std::vector<std::string> keys;
  keys.reserve(descriptor_sets.size());
  for (const auto& s : descriptor_sets) keys.push_back(s.key());
  return build_index_from_keys(std::move(keys), encoder);
}

std::vector<Ranked> rank(std::string_view request, const DescriptorIndex& index,
                         std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  return top_k(index.keys(), index.scores(request), k);
}

std::vector<std::vector<Ranked>> rank_batch(
    const std::vector<std::string>& requests, const DescriptorIndex& index,
    std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const Eigen::MatrixXd all = index.scores(requests);
  std::vector<std::vector<Ranked>> out;
  out.reserve(requests.size());
  for (Eigen::Index r = 0; r < all.rows(); ++r) {
    out.push_back(top_k(index.keys(), all.row(r).transpose(), k));
  }
  return out;
}

}  // namespace tagrank
