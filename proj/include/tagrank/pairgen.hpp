#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tagrank/corpus.hpp"

namespace tagrank {

inline constexpr std::size_t kMaxVariations = 3;

struct RequestPair {
  std::string request;
  DescriptorSet descriptor_set;
  std::string track_id;
  int variation = 0;  // 0..2
};

struct OverlapPartition {
  std::vector<std::string> overlapping;
  std::vector<std::string> non_overlapping;
};

// Rule-based splitter: breaks after '.', '!' or '?' when followed by
// whitespace, except after "e.g.", "i.e.", "vs." and "etc.".
std::vector<std::string> split_sentences(std::string_view caption);

// A descriptor overlaps when it occurs in the normalized sentence as a whole
// phrase delimited by non-alphanumeric characters.
OverlapPartition partition_by_overlap(std::string_view sentence,
                                      const DescriptorSet& descriptors);

// Up to three distinct descriptor subsets for one sentence:
//   0: drawn from the overlapping descriptors (the whole set if none overlap)
//   1: the overlapping descriptors plus a random share of the others
//   2: drawn from the whole set
// Each draw picks its size uniformly in 1..pool size. A slot whose draw
// repeats an earlier key falls back to the first unused singleton or the full
// pool; the slot is dropped when its pool has no unused subset left.
std::vector<DescriptorSet> sample_variations(std::string_view sentence,
                                             const DescriptorSet& descriptors,
                                             std::uint64_t rng_seed);

// Per-(track, sentence) seed used by generate_pairs and the test sampler.
std::uint64_t sentence_seed(std::uint64_t seed, std::string_view track_id,
                            std::size_t sentence_index);

// Pairs in (track, sentence, variation) order.
std::vector<RequestPair> generate_pairs(const std::vector<Track>& corpus,
                                        std::uint64_t rng_seed);

// {"request", "descriptors", "track_id", "variation"} per line.
std::string pair_line(const RequestPair& pair);
void write_pairs(std::ostream& out, const std::vector<RequestPair>& pairs);
std::vector<RequestPair> read_pairs(std::istream& in);
std::vector<RequestPair> load_pairs(const std::filesystem::path& path);

}  // namespace tagrank
