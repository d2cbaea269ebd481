#include "tagrank/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "tagrank/error.hpp"
#include "tagrank/text.hpp"

namespace tagrank {

using json = nlohmann::ordered_json;

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyDescriptors: return "EmptyDescriptors";
    case ErrorCode::kSeparatorInDescriptor: return "SeparatorInDescriptor";
    case ErrorCode::kAllEmpty: return "AllEmpty";
    case ErrorCode::kNoTokens: return "NoTokens";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kIdCountMismatch: return "IdCountMismatch";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string normalize_descriptor(std::string_view raw) {
  return text::collapse_whitespace(text::lower_nfc(raw));
}

DescriptorSet make_descriptor_set(const std::vector<std::string>& raw) {
  if (raw.empty()) {
    throw Error(ErrorCode::kEmptyInput, "descriptor list is empty");
  }
  DescriptorSet set;
  set.items_.reserve(raw.size());
  for (const auto& r : raw) {
    std::string norm = normalize_descriptor(r);
    if (norm.empty()) continue;
    if (norm.find(kKeySeparator) != std::string::npos) {
      throw Error(ErrorCode::kSeparatorInDescriptor,
                  "descriptor contains \", \": \"" + norm + "\"");
    }
    set.items_.push_back(std::move(norm));
  }
  if (set.items_.empty()) {
    throw Error(ErrorCode::kAllEmpty, "every descriptor normalizes to empty");
  }
  // std::string compares bytewise, which is the canonical order.
  std::sort(set.items_.begin(), set.items_.end());
  set.items_.erase(std::unique(set.items_.begin(), set.items_.end()),
                   set.items_.end());
  for (std::size_t i = 0; i < set.items_.size(); ++i) {
    if (i > 0) set.key_ += kKeySeparator;
    set.key_ += set.items_[i];
  }
  return set;
}

DescriptorSet DescriptorSet::from_key(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto hit = key.find(kKeySeparator, start);
    parts.emplace_back(key.substr(start, hit - start));
    if (hit == std::string_view::npos) break;
    start = hit + kKeySeparator.size();
  }
  DescriptorSet set = make_descriptor_set(parts);
  if (set.key() != key) {
    throw Error(ErrorCode::kInvalidArgument,
                "not a canonical descriptor key: \"" + std::string(key) + "\"");
  }
  return set;
}

std::vector<Track> read_corpus(std::istream& in) {
  std::vector<Track> tracks;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Track t;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw std::runtime_error("line is not a JSON object");
      t.id = j.at("id").get<std::string>();
      t.caption = j.at("caption").get<std::string>();
      t.descriptors = j.at("descriptors").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (t.id.empty()) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": empty id", line_no);
    }
    if (!seen.insert(t.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "line " + std::to_string(line_no) + ": duplicate id \"" +
                      t.id + "\"",
                  line_no);
    }
    try {
      (void)make_descriptor_set(t.descriptors);
    } catch (const Error& e) {
      const ErrorCode code = e.code() == ErrorCode::kSeparatorInDescriptor
                                 ? e.code()
                                 : ErrorCode::kEmptyDescriptors;
      throw Error(code, "line " + std::to_string(line_no) + ": " + e.what(),
                  line_no);
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

std::vector<Track> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open corpus " + path.string());
  }
  return read_corpus(in);
}

std::string corpus_line(const Track& track) {
  json j;
  j["id"] = track.id;
  j["caption"] = track.caption;
  j["descriptors"] = track.descriptors;
  return j.dump();
}

void write_corpus(std::ostream& out, const std::vector<Track>& tracks) {
  for (const auto& t : tracks) out << corpus_line(t) << '\n';
}

}  // namespace tagrank
