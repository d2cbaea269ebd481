#include "tagrank/tfidf.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "tagrank/error.hpp"
#include "tagrank/text.hpp"

namespace tagrank {

std::vector<std::string> tokenize(std::string_view text) {
  return text::alnum_runs(text::lower_nfc(text));
}

std::int64_t TfIdfModel::column(const std::string& token) const {
  const auto it = vocabulary_.find(token);
  return it == vocabulary_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::string TfIdfModel::dump_json() const {
  nlohmann::ordered_json j;
  j["n_docs"] = n_docs_;
  nlohmann::ordered_json vocab = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < terms_.size(); ++c) vocab[terms_[c]] = c;
  j["vocabulary"] = std::move(vocab);
  j["idf"] = idf_;
  return j.dump(2);
}

TfIdfModel fit(const std::vector<std::string>& docs) {
  if (docs.empty()) throw Error(ErrorCode::kEmptyInput, "no documents to fit");
  TfIdfModel m;
  m.n_docs_ = docs.size();
  std::vector<std::size_t> df;
  for (const auto& doc : docs) {
    std::unordered_set<std::uint32_t> seen;
    for (auto& tok : tokenize(doc)) {
      auto [it, inserted] = m.vocabulary_.try_emplace(
          tok, static_cast<std::uint32_t>(m.terms_.size()));
      if (inserted) {
        m.terms_.push_back(std::move(tok));
        df.push_back(0);
      }
      if (seen.insert(it->second).second) ++df[it->second];
    }
  }
  if (m.terms_.empty()) {
    throw Error(ErrorCode::kNoTokens, "no document produced any token");
  }
  const double n = static_cast<double>(m.n_docs_);
  m.idf_.resize(df.size());
  for (std::size_t c = 0; c < df.size(); ++c) {
    m.idf_[c] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[c]))) + 1.0;
  }
  return m;
}

SparseVector transform(const TfIdfModel& model, std::string_view text) {
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : tokenize(text)) {
    const auto col = model.column(tok);
    if (col >= 0) counts[static_cast<std::uint32_t>(col)] += 1.0;
  }
  SparseVector v;
  v.entries.reserve(counts.size());
  double sq = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * model.idf(col);
    v.entries.emplace_back(col, w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (auto& e : v.entries) e.second /= norm;
  }
  return v;
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

}  // namespace tagrank
