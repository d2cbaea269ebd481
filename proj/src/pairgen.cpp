#include "tagrank/pairgen.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>

#include "tagrank/error.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/text.hpp"

namespace tagrank {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 4> kAbbreviations = {"e.g.", "i.e.",
                                                            "vs.", "etc."};

bool ends_with_abbreviation(std::string_view s, std::size_t end) {
  for (auto abbr : kAbbreviations) {
    if (end < abbr.size()) continue;
    const std::size_t start = end - abbr.size();
    bool match = true;
    for (std::size_t i = 0; i < abbr.size(); ++i) {
      const auto c = static_cast<unsigned char>(s[start + i]);
      if (static_cast<char>(std::tolower(c)) != abbr[i]) {
        match = false;
        break;
      }
    }
    if (match && !text::word_char_before(s, start)) return true;
  }
  return false;
}

std::string trim(std::string_view s) {
  return text::collapse_whitespace(s);
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view caption) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < caption.size(); ++i) {
    const char c = caption[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (!text::is_space_at(caption, i + 1)) continue;
    if (c == '.' && ends_with_abbreviation(caption, i + 1)) continue;
    std::string sentence = trim(caption.substr(start, i + 1 - start));
    if (!sentence.empty()) out.push_back(std::move(sentence));
    start = i + 1;
  }
  std::string tail = trim(caption.substr(start));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

OverlapPartition partition_by_overlap(std::string_view sentence,
                                      const DescriptorSet& descriptors) {
  const std::string haystack = normalize_descriptor(sentence);
  OverlapPartition part;
  for (const auto& d : descriptors.items()) {
    bool found = false;
    for (auto pos = haystack.find(d); pos != std::string::npos;
         pos = haystack.find(d, pos + 1)) {
      const std::size_t end = pos + d.size();
      const bool left_ok = !text::word_char_at(d, 0) ||
                           !text::word_char_before(haystack, pos);
      const bool right_ok = !text::word_char_before(d, d.size()) ||
                            !text::word_char_at(haystack, end);
      if (left_ok && right_ok) {
        found = true;
        break;
      }
    }
    (found ? part.overlapping : part.non_overlapping).push_back(d);
  }
  return part;
}

namespace {

std::vector<std::string> merge_sorted(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
  std::vector<std::string> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool used(const std::vector<DescriptorSet>& sets, const DescriptorSet& s) {
  return std::find(sets.begin(), sets.end(), s) != sets.end();
}

// First subset of `pool` (singletons, then the full pool) not already taken.
std::optional<DescriptorSet> fallback(const std::vector<std::string>& pool,
                                      const std::vector<DescriptorSet>& taken) {
  for (const auto& item : pool) {
    DescriptorSet s = make_descriptor_set({item});
    if (!used(taken, s)) return s;
  }
  DescriptorSet full = make_descriptor_set(pool);
  if (!used(taken, full)) return full;
  return std::nullopt;
}

}  // namespace

std::vector<DescriptorSet> sample_variations(std::string_view sentence,
                                             const DescriptorSet& descriptors,
                                             std::uint64_t rng_seed) {
  if (descriptors.empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot sample from an empty set");
  }
  const OverlapPartition part = partition_by_overlap(sentence, descriptors);
  const auto& all = descriptors.items();
  const auto& over = part.overlapping;
  const auto& rest = part.non_overlapping;
  Rng rng(rng_seed);

  auto draw_from = [&](const std::vector<std::string>& pool) {
    return rng.subset(pool, rng.between(1, pool.size()));
  };

  std::vector<DescriptorSet> out;
  auto offer = [&](const std::vector<std::string>& drawn,
                   const std::vector<std::string>& pool) {
    DescriptorSet s = make_descriptor_set(drawn);
    if (!used(out, s)) {
      out.push_back(std::move(s));
    } else if (auto alt = fallback(pool, out)) {
      out.push_back(std::move(*alt));
    }
  };

  const auto& first_pool = over.empty() ? all : over;
  offer(draw_from(first_pool), first_pool);

  std::vector<std::string> second = over;
  if (!rest.empty()) {
    second = merge_sorted(over, draw_from(rest));
  } else {
    second = draw_from(over);
  }
  offer(second, all);

  offer(draw_from(all), all);
  return out;
}

std::uint64_t sentence_seed(std::uint64_t seed, std::string_view track_id,
                            std::size_t sentence_index) {
  return derive_seed(derive_seed(seed, track_id), sentence_index);
}

std::vector<RequestPair> generate_pairs(const std::vector<Track>& corpus,
                                        std::uint64_t rng_seed) {
  std::vector<RequestPair> pairs;
  for (const auto& track : corpus) {
    const DescriptorSet full = make_descriptor_set(track.descriptors);
    const auto sentences = split_sentences(track.caption);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      auto variations = sample_variations(
          sentences[s], full, sentence_seed(rng_seed, track.id, s));
      for (std::size_t v = 0; v < variations.size(); ++v) {
        pairs.push_back({sentences[s], std::move(variations[v]), track.id,
                         static_cast<int>(v)});
      }
    }
  }
  return pairs;
}

std::string pair_line(const RequestPair& pair) {
  json j;
  j["request"] = pair.request;
  j["descriptors"] = pair.descriptor_set.items();
  j["track_id"] = pair.track_id;
  j["variation"] = pair.variation;
  return j.dump();
}

void write_pairs(std::ostream& out, const std::vector<RequestPair>& pairs) {
  for (const auto& p : pairs) out << pair_line(p) << '\n';
}

std::vector<RequestPair> read_pairs(std::istream& in) {
  std::vector<RequestPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      RequestPair p;
      p.request = j.at("request").get<std::string>();
      p.descriptor_set =
          make_descriptor_set(j.at("descriptors").get<std::vector<std::string>>());
      p.track_id = j.at("track_id").get<std::string>();
      p.variation = j.at("variation").get<int>();
      if (p.request.empty()) throw std::runtime_error("empty request");
      if (p.variation < 0 || p.variation >= static_cast<int>(kMaxVariations)) {
        throw std::runtime_error("variation out of range");
      }
      pairs.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return pairs;
}

std::vector<RequestPair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open pairs " + path.string());
  return read_pairs(in);
}

}  // namespace tagrank
