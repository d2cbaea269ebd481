#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tagrank/densevec.hpp"
#include "tagrank/pairgen.hpp"
#include "tagrank/ranker.hpp"

namespace tagrank {

// Negatives gathered per query, split evenly over two mining retrievers.
inline constexpr std::size_t kNegativesPerQuery = 30;
inline constexpr std::size_t kNegativesPerRetriever = 15;

struct TrainingTriple {
  std::string request;
  std::string positive_key;
  std::string negative_key;
  double margin = 0.0;

  friend bool operator==(const TrainingTriple&, const TrainingTriple&) = default;
};

// Each retriever contributes its best `per_retriever_k` keys other than
// `positive_key`; the lists are interleaved rank by rank in retriever order,
// deduplicated and cut at `total`.
std::vector<std::string> mine_negatives(
    std::string_view request, std::string_view positive_key,
    const std::vector<const DescriptorIndex*>& retrievers,
    std::size_t per_retriever_k, std::size_t total);

// g(r, pos) - g(r, neg).
double margin_label(std::string_view request, std::string_view positive_key,
                    std::string_view negative_key, PairScorer& scorer);

struct TripleOptions {
  std::size_t negatives_per_pair = kNegativesPerQuery;
  std::size_t per_retriever_k = kNegativesPerRetriever;
  std::uint64_t seed = 0;
};

struct TripleBatch {
  std::vector<TrainingTriple> triples;
  std::size_t skipped_pairs = 0;  // pairs whose mining found no negative
};

// Mines and labels every pair, then shuffles the triples with `seed` so that
// consecutive training batches mix queries.
TripleBatch generate_triples(const std::vector<RequestPair>& pairs,
                             const std::vector<const DescriptorIndex*>& retrievers,
                             PairScorer& scorer, const TripleOptions& options);

// {"query", "pos", "neg", "margin"} per line.
std::string triple_line(const TrainingTriple& t);
void write_triples(std::ostream& out, const std::vector<TrainingTriple>& triples);
std::vector<TrainingTriple> read_triples(std::istream& in);

}  // namespace tagrank
