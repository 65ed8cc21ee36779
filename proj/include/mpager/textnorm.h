#ifndef MPAGER_TEXTNORM_H_
#define MPAGER_TEXTNORM_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mpager {

// Thrown when input bytes are not well-formed UTF-8.
class Utf8Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decodes UTF-8 into Unicode scalar values. Rejects overlong forms,
// surrogates and values above U+10FFFF.
std::u32string DecodeUtf8(std::string_view text);
std::string EncodeUtf8(std::u32string_view text);
void AppendUtf8(char32_t cp, std::string* out);
bool IsValidUtf8(std::string_view text);

// Number of Unicode scalars in `text`, optionally skipping whitespace.
size_t CountScalars(std::string_view text, bool skip_whitespace = false);

bool IsUnicodeWhitespace(char32_t cp);
bool IsUnicodePunctuation(char32_t cp);  // general category P*

// Full-width form -> half-width equivalent (the <wide> compatibility
// mapping, U+3000 and U+FF01..U+FFEE). Other code points map to themselves.
char32_t FoldWidth(char32_t cp);

// Set of code points treated as punctuation. The default set covers the
// Unicode P* categories plus 。、「」・！？.
class PunctuationSet {
 public:
  static PunctuationSet Default();
  // Exactly the scalars of `chars` (UTF-8).
  static PunctuationSet FromChars(std::string_view chars);

  bool Contains(char32_t cp) const;
  bool empty() const { return !use_unicode_categories_ && extra_.empty(); }

  PunctuationSet& Add(char32_t cp);

 private:
  bool use_unicode_categories_ = false;
  std::vector<char32_t> extra_;  // sorted, unique
};

struct NormalizationOptions {
  bool fold_width = true;
  bool strip_punctuation = true;
  PunctuationSet punctuation_set = PunctuationSet::Default();
  bool collapse_whitespace = true;

  // Throws std::invalid_argument when strip_punctuation is set with an empty
  // punctuation set.
  void Validate() const;
};

// Width folding, then punctuation removal, then whitespace collapsing
// (runs -> one ASCII space, trimmed). Idempotent. Throws Utf8Error.
std::string Normalize(std::string_view text, const NormalizationOptions& opts);

enum class TokenMode { kChar, kWhitespace };

const char* TokenModeName(TokenMode mode);
TokenMode ParseTokenMode(std::string_view name);

struct TokenSequence {
  std::vector<std::string> tokens;
  TokenMode mode = TokenMode::kChar;

  size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

// kChar drops all whitespace and yields one token per scalar; kWhitespace
// splits on whitespace runs. Never yields empty tokens. Throws Utf8Error.
TokenSequence Tokenize(std::string_view text, TokenMode mode);

// Inverse used when emitting text: kChar concatenates, kWhitespace joins
// with single spaces.
std::string Detokenize(const TokenSequence& seq);

}  // namespace mpager

#endif  // MPAGER_TEXTNORM_H_
