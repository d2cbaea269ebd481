#include "tagrank/gpl.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "tagrank/rng.hpp"

namespace tagrank {

using json = nlohmann::ordered_json;

std::vector<std::string> mine_negatives(
    std::string_view request, std::string_view positive_key,
    const std::vector<const DescriptorIndex*>& retrievers,
    std::size_t per_retriever_k, std::size_t total) {
  if (total == 0) throw Error(ErrorCode::kInvalidArgument, "total must be >= 1");
  if (retrievers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no mining retriever");
  }
  std::vector<std::vector<std::string>> lists;
  lists.reserve(retrievers.size());
  for (const auto* index : retrievers) {
    std::vector<std::string> keys;
    if (per_retriever_k > 0) {
      // One extra slot absorbs the positive when it ranks inside the cut.
      for (auto& r : rank(request, *index, per_retriever_k + 1)) {
        if (r.key == positive_key) continue;
        if (keys.size() == per_retriever_k) break;
        keys.push_back(std::move(r.key));
      }
    }
    lists.push_back(std::move(keys));
  }
  std::vector<std::string> merged;
  std::unordered_set<std::string> seen;
  for (std::size_t pos = 0; merged.size() < total; ++pos) {
    bool any = false;
    for (auto& list : lists) {
      if (pos >= list.size()) continue;
      any = true;
      if (seen.insert(list[pos]).second) {
        merged.push_back(list[pos]);
        if (merged.size() == total) break;
      }
    }
    if (!any) break;
  }
  return merged;
}

double margin_label(std::string_view request, std::string_view positive_key,
                    std::string_view negative_key, PairScorer& scorer) {
  const auto s = scorer.score({{std::string(request), std::string(positive_key)},
                               {std::string(request), std::string(negative_key)}});
  if (s.size() != 2) {
    throw Error(ErrorCode::kProviderError, "scorer returned a short batch");
  }
  return s[0] - s[1];
}

TripleBatch generate_triples(const std::vector<RequestPair>& pairs,
                             const std::vector<const DescriptorIndex*>& retrievers,
                             PairScorer& scorer, const TripleOptions& options) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no pairs");
  TripleBatch batch;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    const std::string& pos = pair.descriptor_set.key();
    try {
      const auto negatives =
          mine_negatives(pair.request, pos, retrievers, options.per_retriever_k,
                         options.negatives_per_pair);
      if (negatives.empty()) {
        ++batch.skipped_pairs;
        continue;
      }
      // Positive first, then every negative, in one scorer call.
      std::vector<std::pair<std::string, std::string>> queries;
      queries.reserve(negatives.size() + 1);
      queries.emplace_back(pair.request, pos);
      for (const auto& neg : negatives) queries.emplace_back(pair.request, neg);
      const auto scores = scorer.score(queries);
      if (scores.size() != queries.size()) {
        throw Error(ErrorCode::kProviderError, "scorer returned a short batch");
      }
      for (std::size_t n = 0; n < negatives.size(); ++n) {
        const double margin = scores[0] - scores[n + 1];
        if (!std::isfinite(margin)) {
          throw Error(ErrorCode::kNonFiniteValue, "non-finite margin");
        }
        batch.triples.push_back({pair.request, pos, negatives[n], margin});
      }
    } catch (const Error& e) {
      throw Error(e.code(),
                  "pair " + std::to_string(i) + " (track \"" + pair.track_id +
                      "\", variation " + std::to_string(pair.variation) +
                      "): " + e.what());
    }
  }
  Rng rng(options.seed);
  rng.shuffle(batch.triples);
  return batch;
}

std::string triple_line(const TrainingTriple& t) {
  json j;
  j["query"] = t.request;
  j["pos"] = t.positive_key;
  j["neg"] = t.negative_key;
  j["margin"] = t.margin;
  return j.dump();
}

void write_triples(std::ostream& out, const std::vector<TrainingTriple>& triples) {
  for (const auto& t : triples) out << triple_line(t) << '\n';
}

std::vector<TrainingTriple> read_triples(std::istream& in) {
  std::vector<TrainingTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      TrainingTriple t{j.at("query").get<std::string>(),
                       j.at("pos").get<std::string>(),
                       j.at("neg").get<std::string>(),
                       j.at("margin").get<double>()};
      if (t.positive_key == t.negative_key) {
        throw std::runtime_error("pos equals neg");
      }
      out.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace tagrank
