#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tagrank/corpus.hpp"
#include "tagrank/pairgen.hpp"
#include "tagrank/ranker.hpp"

namespace tagrank {

inline constexpr std::size_t kRecallK = 10;
inline constexpr std::size_t kTestSamples = 3;

struct EvalItem {
  std::string request;
  DescriptorSet truth;
  std::string track_id;
};

using TestSet = std::vector<EvalItem>;

struct EvalReport {
  std::vector<double> per_sample_recall;
  std::vector<std::size_t> per_sample_keys;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t k = kRecallK;
  std::size_t n_requests = 0;
  std::size_t n_unique_keys = 0;  // across all samples
};

struct DatasetStats {
  std::size_t n_requests = 0;     // distinct (track, request)
  std::size_t n_unique_keys = 0;  // distinct canonical keys
  double mean_shared_ratio = 0.0;
};

// 1 when `truth_key` is among the first min(k, size) keys.
int recall_at_k(const std::vector<std::string>& ranked_keys,
                std::string_view truth_key, std::size_t k);

// Each sample gives every (track, sentence) one variation drawn by the pair
// sampler under a sample-specific seed.
std::vector<TestSet> make_test_samples(const std::vector<Track>& corpus,
                                       std::size_t n_samples, std::uint64_t seed);

// For pre-built request files (e.g. rephrased requests): pairs sharing
// (track_id, request) are one request, and each sample picks one of their
// variations.
std::vector<TestSet> test_samples_from_pairs(const std::vector<RequestPair>& pairs,
                                             std::size_t n_samples,
                                             std::uint64_t seed);

// Recall@k of each sample against an index of that sample's own keys.
EvalReport evaluate(const Encoder& encoder, const std::vector<TestSet>& test_sets,
                    std::size_t k = kRecallK);

// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

// Shared-word ratio of one pair: the share of the descriptor set's distinct
// tokens that also occur among the request's tokens. Returns a negative value
// when the descriptors have no tokens.
double shared_word_ratio(std::string_view request, const DescriptorSet& set);

DatasetStats dataset_stats(const std::vector<RequestPair>& pairs);

std::string report_json(const EvalReport& report, std::string_view encoder_name);
// "<name>  <mean> ± <std>" in percent with one decimal, plus per-sample values.
std::string report_table(const EvalReport& report, std::string_view encoder_name);

// {"sample", "request", "descriptors", "track_id"} per line, sample-major.
void write_test_samples(std::ostream& out, const std::vector<TestSet>& samples);

}  // namespace tagrank
