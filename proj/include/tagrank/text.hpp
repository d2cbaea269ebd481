#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 text helpers shared by the descriptor, sentence and token code.
namespace tagrank::text {

// Unicode NFC of the lowercased input. Invalid UTF-8 sequences are replaced
// by U+FFFD.
std::string lower_nfc(std::string_view utf8);

// Replaces every run of Unicode whitespace with one ASCII space and trims
// both ends.
std::string collapse_whitespace(std::string_view utf8);

// Maximal runs of Unicode letters and digits, in order.
std::vector<std::string> alnum_runs(std::string_view utf8);

// True when the code point ending just before `pos` (or starting at `pos`)
// is a letter or digit. Out-of-range positions count as non-word.
bool word_char_before(std::string_view utf8, std::size_t pos);
bool word_char_at(std::string_view utf8, std::size_t pos);

bool is_space_at(std::string_view utf8, std::size_t pos);

}  // namespace tagrank::text
