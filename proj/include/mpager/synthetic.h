#ifndef MPAGER_SYNTHETIC_H_
#define MPAGER_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mpager/corpus.h"

namespace mpager {

enum class NoiseModel {
  // An erroneous character becomes its fixed confusable partner, so two
  // streams that err at the same position agree (homophone-style errors).
  kConfusionPartner,
  // An erroneous character becomes a uniformly drawn different character.
  kUniformSubstitution,
};

struct SyntheticOptions {
  int utterances = 500;
  int length = 40;              // characters per reference
  int streams = 3;              // systems named S1, S2, ...
  double substitution_rate = 0.1;
  NoiseModel noise = NoiseModel::kConfusionPartner;
  std::uint64_t seed = 1;
  // Characters the references are drawn from; an even count pairs them up
  // as confusion partners (0<->1, 2<->3, ...).
  std::vector<std::string> alphabet;
};

// Default alphabet: 46 hiragana.
std::vector<std::string> DefaultSyntheticAlphabet();

// References plus independently corrupted 1-best streams. Deterministic
// for a given seed on one standard library.
Corpus GenerateSyntheticCorpus(const SyntheticOptions& options);

}  // namespace mpager

#endif  // MPAGER_SYNTHETIC_H_
