#include "mpager/textnorm.h"

#include <algorithm>
#include <stdexcept>

namespace mpager {
namespace {

struct CodePointRange {
  char32_t first;
  char32_t last;
};

struct WideFolding {
  char32_t wide;
  char32_t narrow;
};

#include "unicode_tables.inc"

constexpr char32_t kJapaneseMarks[] = {U'。', U'、', U'「', U'」', U'・', U'！', U'？'};

// Returns the scalar starting at text[*pos] and advances *pos, or throws.
char32_t DecodeOne(std::string_view text, size_t* pos) {
  const size_t i = *pos;
  const auto b0 = static_cast<unsigned char>(text[i]);
  size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if (b0 < 0x80) {
    *pos = i + 1;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    throw Utf8Error("invalid UTF-8 lead byte at offset " + std::to_string(i));
  }
  if (i + len > text.size()) {
    throw Utf8Error("truncated UTF-8 sequence at offset " + std::to_string(i));
  }
  for (size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      throw Utf8Error("invalid UTF-8 continuation byte at offset " + std::to_string(i + k));
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    throw Utf8Error("invalid UTF-8 scalar at offset " + std::to_string(i));
  }
  *pos = i + len;
  return cp;
}

}  // namespace

std::u32string DecodeUtf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) out.push_back(DecodeOne(text, &pos));
  return out;
}

void AppendUtf8(char32_t cp, std::string* out) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string EncodeUtf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) AppendUtf8(cp, &out);
  return out;
}

bool IsValidUtf8(std::string_view text) {
  try {
    size_t pos = 0;
    while (pos < text.size()) DecodeOne(text, &pos);
    return true;
  } catch (const Utf8Error&) {
    return false;
  }
}

size_t CountScalars(std::string_view text, bool skip_whitespace) {
  size_t n = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = DecodeOne(text, &pos);
    if (!skip_whitespace || !IsUnicodeWhitespace(cp)) ++n;
  }
  return n;
}

bool IsUnicodeWhitespace(char32_t cp) {
  // White_Space property.
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

bool IsUnicodePunctuation(char32_t cp) {
  auto it = std::upper_bound(std::begin(kPunctuationRanges), std::end(kPunctuationRanges), cp,
                             [](char32_t v, const CodePointRange& r) { return v < r.first; });
  if (it == std::begin(kPunctuationRanges)) return false;
  --it;
  return cp <= it->last;
}

char32_t FoldWidth(char32_t cp) {
  if (cp < 0x3000) return cp;
  auto it = std::lower_bound(std::begin(kWideFoldings), std::end(kWideFoldings), cp,
                             [](const WideFolding& f, char32_t v) { return f.wide < v; });
  if (it != std::end(kWideFoldings) && it->wide == cp) return it->narrow;
  return cp;
}

PunctuationSet PunctuationSet::Default() {
  PunctuationSet set;
  set.use_unicode_categories_ = true;
  for (char32_t cp : kJapaneseMarks) set.Add(cp);
  return set;
}

PunctuationSet PunctuationSet::FromChars(std::string_view chars) {
  PunctuationSet set;
  for (char32_t cp : DecodeUtf8(chars)) set.Add(cp);
  return set;
}

PunctuationSet& PunctuationSet::Add(char32_t cp) {
  auto it = std::lower_bound(extra_.begin(), extra_.end(), cp);
  if (it == extra_.end() || *it != cp) extra_.insert(it, cp);
  return *this;
}

bool PunctuationSet::Contains(char32_t cp) const {
  if (use_unicode_categories_ && IsUnicodePunctuation(cp)) return true;
  return std::binary_search(extra_.begin(), extra_.end(), cp);
}

void NormalizationOptions::Validate() const {
  if (strip_punctuation && punctuation_set.empty()) {
    throw std::invalid_argument("strip_punctuation requires a non-empty punctuation set");
  }
}

std::string Normalize(std::string_view text, const NormalizationOptions& opts) {
  opts.Validate();
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = DecodeOne(text, &pos);
    if (opts.fold_width) cp = FoldWidth(cp);
    if (opts.strip_punctuation && opts.punctuation_set.Contains(cp)) continue;
    if (opts.collapse_whitespace) {
      if (IsUnicodeWhitespace(cp)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
    }
    AppendUtf8(cp, &out);
  }
  return out;
}

const char* TokenModeName(TokenMode mode) {
  return mode == TokenMode::kChar ? "char" : "whitespace";
}

TokenMode ParseTokenMode(std::string_view name) {
  if (name == "char") return TokenMode::kChar;
  if (name == "whitespace" || name == "word") return TokenMode::kWhitespace;
  throw std::invalid_argument("unknown token mode: " + std::string(name));
}

TokenSequence Tokenize(std::string_view text, TokenMode mode) {
  TokenSequence seq;
  seq.mode = mode;
  std::string current;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t start = pos;
    char32_t cp = DecodeOne(text, &pos);
    if (IsUnicodeWhitespace(cp)) {
      if (!current.empty()) seq.tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.append(text.substr(start, pos - start));
    if (mode == TokenMode::kChar) {
      seq.tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) seq.tokens.push_back(std::move(current));
  return seq;
}

std::string Detokenize(const TokenSequence& seq) {
  std::string out;
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i > 0 && seq.mode == TokenMode::kWhitespace) out.push_back(' ');
    out += seq.tokens[i];
  }
  return out;
}

}  // namespace mpager
