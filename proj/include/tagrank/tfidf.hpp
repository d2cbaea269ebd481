#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tagrank {

// Lowercased maximal runs of Unicode letters and digits. Every other
// character, including '-' and '&', separates tokens.
std::vector<std::string> tokenize(std::string_view text);

// Sorted (index, weight) entries; unit L2 norm unless empty.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const noexcept { return entries.empty(); }
};

class TfIdfModel {
 public:
  TfIdfModel() = default;

  std::size_t vocabulary_size() const noexcept { return idf_.size(); }
  std::size_t n_docs() const noexcept { return n_docs_; }

  // Column of `token`, or -1 when out of vocabulary.
  std::int64_t column(const std::string& token) const;
  double idf(std::size_t column) const { return idf_.at(column); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  // {"n_docs", "vocabulary": {token: column}, "idf": [...]}; for inspection.
  std::string dump_json() const;

 private:
  friend TfIdfModel fit(const std::vector<std::string>& docs);
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  std::vector<std::string> terms_;  // column -> token
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
};

// Smoothed idf: ln((1 + N) / (1 + df)) + 1. Columns are assigned in order of
// first appearance.
TfIdfModel fit(const std::vector<std::string>& docs);

// Raw counts times idf, L2-normalized. Unknown tokens are dropped.
SparseVector transform(const TfIdfModel& model, std::string_view text);

double dot(const SparseVector& a, const SparseVector& b);

}  // namespace tagrank
