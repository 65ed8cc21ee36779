#include "mpager/synthetic.h"

#include <random>
#include <stdexcept>

#include "mpager/textnorm.h"

namespace mpager {

std::vector<std::string> DefaultSyntheticAlphabet() {
  std::vector<std::string> out;
  const std::string kana =
      "あいうえおかきくけこさしすせそたちつてとなにぬねのはひふへほまみむめもやゆよらりるれろわをん";
  for (char32_t cp : DecodeUtf8(kana)) out.push_back(EncodeUtf8(std::u32string(1, cp)));
  return out;
}

Corpus GenerateSyntheticCorpus(const SyntheticOptions& options) {
  if (options.utterances < 0 || options.length < 0 || options.streams < 1) {
    throw std::invalid_argument("synthetic corpus needs non-negative sizes and at least one stream");
  }
  if (options.substitution_rate < 0.0 || options.substitution_rate > 1.0) {
    throw std::invalid_argument("substitution_rate must lie in [0, 1]");
  }
  const auto alphabet = options.alphabet.empty() ? DefaultSyntheticAlphabet() : options.alphabet;
  const size_t n = alphabet.size();
  if (n < 2) throw std::invalid_argument("synthetic alphabet needs at least two characters");
  if (options.noise == NoiseModel::kConfusionPartner && n % 2 != 0) {
    throw std::invalid_argument("confusion-partner noise needs an even alphabet");
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<size_t> pick(0, n - 1);
  std::uniform_int_distribution<size_t> other(1, n - 1);
  std::bernoulli_distribution corrupt(options.substitution_rate);

  Corpus corpus;
  const int width = static_cast<int>(std::to_string(options.utterances).size());
  for (int u = 0; u < options.utterances; ++u) {
    std::string id = std::to_string(u);
    id = "syn" + std::string(width - id.size(), '0') + id;
    std::vector<size_t> ref(options.length);
    for (auto& c : ref) c = pick(rng);
    Utterance& utt = corpus.Add(id);
    std::string ref_text;
    for (size_t c : ref) ref_text += alphabet[c];
    utt.reference = ref_text;
    for (int s = 0; s < options.streams; ++s) {
      std::string text;
      for (size_t c : ref) {
        size_t out = c;
        if (corrupt(rng)) {
          out = options.noise == NoiseModel::kConfusionPartner ? (c ^ 1) : (c + other(rng)) % n;
        }
        text += alphabet[out];
      }
      utt.hypotheses.entries.push_back({"S" + std::to_string(s + 1), 1, std::move(text), std::nullopt});
    }
  }
  return corpus;
}

}  // namespace mpager
