#include "tagrank/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "tagrank/rng.hpp"
#include "tagrank/tfidf.hpp"

namespace tagrank {

int recall_at_k(const std::vector<std::string>& ranked_keys,
                std::string_view truth_key, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const std::size_t n = std::min(k, ranked_keys.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked_keys[i] == truth_key) return 1;
  }
  return 0;
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& options, std::uint64_t seed) {
  Rng rng(derive_seed(seed, std::string_view("pick")));
  return options[static_cast<std::size_t>(rng.below(options.size()))];
}

}  // namespace

std::vector<TestSet> make_test_samples(const std::vector<Track>& corpus,
                                       std::size_t n_samples, std::uint64_t seed) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "empty corpus");
  if (n_samples == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one sample");
  }
  std::vector<TestSet> samples(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::uint64_t sample_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    for (const auto& track : corpus) {
      const DescriptorSet full = make_descriptor_set(track.descriptors);
      const auto sentences = split_sentences(track.caption);
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        const std::uint64_t sseed = sentence_seed(sample_seed, track.id, s);
        const auto variations = sample_variations(sentences[s], full, sseed);
        samples[i].push_back({sentences[s], pick(variations, sseed), track.id});
      }
    }
  }
  return samples;
}

std::vector<TestSet> test_samples_from_pairs(const std::vector<RequestPair>& pairs,
                                             std::size_t n_samples,
                                             std::uint64_t seed) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no pairs");
  if (n_samples == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one sample");
  }
  std::vector<const RequestPair*> heads;
  std::map<std::pair<std::string, std::string>, std::vector<const RequestPair*>> groups;
  for (const auto& p : pairs) {
    auto& g = groups[{p.track_id, p.request}];
    if (g.empty()) heads.push_back(&p);
    g.push_back(&p);
  }
  std::vector<TestSet> samples(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::uint64_t sample_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const auto& g = groups.at({heads[h]->track_id, heads[h]->request});
      const RequestPair* chosen = pick(g, derive_seed(sample_seed, h));
      samples[i].push_back({chosen->request, chosen->descriptor_set, chosen->track_id});
    }
  }
  return samples;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

EvalReport evaluate(const Encoder& encoder, const std::vector<TestSet>& test_sets,
                    std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (test_sets.empty()) throw Error(ErrorCode::kEmptyInput, "no test sets");
  EvalReport report;
  report.k = k;
  report.n_requests = test_sets.front().size();
  std::set<std::string> all_keys;
  for (const auto& set : test_sets) {
    if (set.empty()) throw Error(ErrorCode::kEmptyInput, "empty test set");
    std::vector<std::string> keys;
    std::vector<std::string> requests;
    keys.reserve(set.size());
    requests.reserve(set.size());
    for (const auto& item : set) {
      keys.push_back(item.truth.key());
      requests.push_back(item.request);
    }
    const DescriptorIndex index = build_index_from_keys(keys, encoder);
    const auto ranked = rank_batch(requests, index, k);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < set.size(); ++r) {
      std::vector<std::string> top;
      top.reserve(ranked[r].size());
      for (const auto& x : ranked[r]) top.push_back(x.key);
      hits += static_cast<std::size_t>(recall_at_k(top, set[r].truth.key(), k));
    }
    report.per_sample_recall.push_back(static_cast<double>(hits) /
                                       static_cast<double>(set.size()));
    report.per_sample_keys.push_back(index.size());
    all_keys.insert(index.keys().begin(), index.keys().end());
  }
  std::tie(report.mean, report.std) = mean_std(report.per_sample_recall);
  report.n_unique_keys = all_keys.size();
  return report;
}

double shared_word_ratio(std::string_view request, const DescriptorSet& set) {
  const auto req_tokens = tokenize(request);
  const std::unordered_set<std::string> req(req_tokens.begin(), req_tokens.end());
  const auto desc_tokens = tokenize(set.key());
  const std::set<std::string> words(desc_tokens.begin(), desc_tokens.end());
  if (words.empty()) return -1.0;
  std::size_t found = 0;
  for (const auto& w : words) found += req.contains(w) ? 1 : 0;
  return static_cast<double>(found) / static_cast<double>(words.size());
}

DatasetStats dataset_stats(const std::vector<RequestPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no pairs");
  std::set<std::pair<std::string, std::string>> requests;
  std::set<std::string> keys;
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& p : pairs) {
    requests.emplace(p.track_id, p.request);
    keys.insert(p.descriptor_set.key());
    const double r = shared_word_ratio(p.request, p.descriptor_set);
    // Descriptor sets made only of punctuation have no words to share.
    if (r < 0.0) continue;
    total += r;
    ++counted;
  }
  DatasetStats stats;
  stats.n_requests = requests.size();
  stats.n_unique_keys = keys.size();
  stats.mean_shared_ratio = counted == 0 ? 0.0 : total / static_cast<double>(counted);
  return stats;
}

std::string report_json(const EvalReport& report, std::string_view encoder_name) {
  nlohmann::ordered_json j;
  j["encoder"] = encoder_name;
  j["k"] = report.k;
  j["n_requests"] = report.n_requests;
  j["n_unique_keys"] = report.n_unique_keys;
  j["per_sample_recall"] = report.per_sample_recall;
  j["per_sample_keys"] = report.per_sample_keys;
  j["mean"] = report.mean;
  j["std"] = report.std;
  return j.dump(2);
}

std::string report_table(const EvalReport& report, std::string_view encoder_name) {
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof(buf), "%-16s %-10s %s\n", "encoder",
                ("R@" + std::to_string(report.k)).c_str(), "samples");
  out << buf;
  std::string per;
  for (double r : report.per_sample_recall) {
    std::snprintf(buf, sizeof(buf), "%s%.1f", per.empty() ? "" : " ", 100.0 * r);
    per += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-16.*s %5.1f ± %.1f %s\n",
                static_cast<int>(encoder_name.size()), encoder_name.data(),
                100.0 * report.mean, 100.0 * report.std, per.c_str());
  out << buf;
  return out.str();
}

void write_test_samples(std::ostream& out, const std::vector<TestSet>& samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const auto& item : samples[i]) {
      nlohmann::ordered_json j;
      j["sample"] = i;
      j["request"] = item.request;
      j["descriptors"] = item.truth.items();
      j["track_id"] = item.track_id;
      out << j.dump() << '\n';
    }
  }
}

}  // namespace tagrank
