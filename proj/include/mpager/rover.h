#ifndef MPAGER_ROVER_H_
#define MPAGER_ROVER_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpager/textnorm.h"

namespace mpager {

// One arc of a network slot. A missing token is the NULL arc.
struct Arc {
  std::optional<std::string> token;
  size_t votes = 0;
  double confidence_sum = 0.0;
  size_t first_input = 0;  // index of the earliest input that voted for this arc

  bool is_null() const { return !token.has_value(); }
};

struct Slot {
  std::vector<Arc> arcs;

  size_t total_votes() const;
  const Arc* Find(const std::optional<std::string>& token) const;
};

// Token transition network built by iterative alignment of hypotheses.
struct TransitionNetwork {
  std::vector<Slot> slots;
  size_t num_inputs = 0;
  TokenMode mode = TokenMode::kChar;
};

enum class TieBreak {
  kPreferTokenThenEarliest,  // non-NULL beats NULL, then earliest input
  kEarliestInput,            // earliest input only
};

struct VoteOptions {
  double alpha = 1.0;            // weight of vote frequency against confidence
  double null_confidence = 0.0;  // confidence assigned to NULL arcs
  TieBreak tie_break = TieBreak::kPreferTokenThenEarliest;

  void Validate() const;  // throws std::invalid_argument unless 0 <= alpha <= 1
};

class RoverError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Builds the network from hyps[0], then aligns each further hypothesis
// against it. A hypothesis token matches a slot when it equals any arc in
// that slot. Deleted slots receive a NULL vote; inserted tokens open a new
// slot whose NULL arc carries the votes of all earlier inputs.
//
// `confidences`, when given, holds one value per token for each hypothesis;
// tokens default to confidence 1.
TransitionNetwork BuildNetwork(const std::vector<TokenSequence>& hyps,
                               const std::vector<std::vector<double>>* confidences = nullptr);

// Per slot: score = alpha * votes/num_inputs + (1 - alpha) * mean confidence.
// Winning NULL arcs emit nothing.
TokenSequence Vote(const TransitionNetwork& network, const VoteOptions& opts);

TokenSequence RoverCombine(const std::vector<TokenSequence>& hyps, const VoteOptions& opts,
                           const std::vector<std::vector<double>>* confidences = nullptr);

}  // namespace mpager

#endif  // MPAGER_ROVER_H_
