#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tagrank {

inline constexpr std::string_view kKeySeparator = ", ";

struct Track {
  std::string id;
  std::string caption;
  std::vector<std::string> descriptors;  // raw, as read
};

// A normalized, deduplicated, ascending set of descriptor phrases together
// with its canonical key (the items joined by ", "). Equality is key
// equality.
class DescriptorSet {
 public:
  DescriptorSet() = default;

  const std::vector<std::string>& items() const noexcept { return items_; }
  const std::string& key() const noexcept { return key_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

  // Inverse of key(); throws unless `key` is canonical.
  static DescriptorSet from_key(std::string_view key);

  friend bool operator==(const DescriptorSet& a, const DescriptorSet& b) {
    return a.key_ == b.key_;
  }
  friend auto operator<=>(const DescriptorSet& a, const DescriptorSet& b) {
    return a.key_ <=> b.key_;
  }

 private:
  friend DescriptorSet make_descriptor_set(const std::vector<std::string>&);
  std::vector<std::string> items_;
  std::string key_;
};

// Lowercase, NFC, whitespace trimmed and collapsed. May return "".
std::string normalize_descriptor(std::string_view raw);

// Throws kEmptyInput for an empty list, kAllEmpty when nothing survives
// normalization and kSeparatorInDescriptor when a normalized item contains
// ", ".
DescriptorSet make_descriptor_set(const std::vector<std::string>& raw);

// JSON-lines corpus: {"id", "caption", "descriptors"} per line. Blank lines
// are skipped; line numbers in errors are 1-based physical lines.
std::vector<Track> read_corpus(std::istream& in);
std::vector<Track> load_corpus(const std::filesystem::path& path);

std::string corpus_line(const Track& track);
void write_corpus(std::ostream& out, const std::vector<Track>& tracks);

}  // namespace tagrank
