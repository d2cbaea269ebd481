#include "tagrank/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace tagrank::text {
namespace {

UChar32 decode_at(std::string_view s, std::size_t pos) {
  int32_t i = static_cast<int32_t>(pos);
  UChar32 c;
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i,
          static_cast<int32_t>(s.size()), c);
  return c;
}

UChar32 decode_before(std::string_view s, std::size_t pos) {
  int32_t i = static_cast<int32_t>(pos);
  UChar32 c;
  U8_PREV(reinterpret_cast<const uint8_t*>(s.data()), 0, i, c);
  return c;
}

bool is_word(UChar32 c) { return c >= 0 && u_isalnum(c); }

}  // namespace

std::string lower_nfc(std::string_view utf8) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  u.toLower(icu::Locale::getRoot());
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  icu::UnicodeString out = nfc->normalize(u, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU normalization failed");
  }
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string collapse_whitespace(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < utf8.size()) {
    int32_t i = static_cast<int32_t>(pos);
    UChar32 c;
    U8_NEXT(reinterpret_cast<const uint8_t*>(utf8.data()), i,
            static_cast<int32_t>(utf8.size()), c);
    const auto next = static_cast<std::size_t>(i);
    if (c >= 0 && u_isUWhiteSpace(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.append(utf8.substr(pos, next - pos));
    }
    pos = next;
  }
  return out;
}

std::vector<std::string> alnum_runs(std::string_view utf8) {
  std::vector<std::string> runs;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < utf8.size()) {
    int32_t i = static_cast<int32_t>(pos);
    UChar32 c;
    U8_NEXT(reinterpret_cast<const uint8_t*>(utf8.data()), i,
            static_cast<int32_t>(utf8.size()), c);
    if (is_word(c)) {
      if (start == std::string_view::npos) start = pos;
    } else if (start != std::string_view::npos) {
      runs.emplace_back(utf8.substr(start, pos - start));
      start = std::string_view::npos;
    }
    pos = static_cast<std::size_t>(i);
  }
  if (start != std::string_view::npos) runs.emplace_back(utf8.substr(start));
  return runs;
}

bool word_char_before(std::string_view utf8, std::size_t pos) {
  if (pos == 0 || pos > utf8.size()) return false;
  return is_word(decode_before(utf8, pos));
}

bool word_char_at(std::string_view utf8, std::size_t pos) {
  if (pos >= utf8.size()) return false;
  return is_word(decode_at(utf8, pos));
}

bool is_space_at(std::string_view utf8, std::size_t pos) {
  if (pos >= utf8.size()) return false;
  const UChar32 c = decode_at(utf8, pos);
  return c >= 0 && u_isUWhiteSpace(c);
}

}  // namespace tagrank::text
