#include "mpager/rover.h"

#include "mpager/alignment.h"

namespace mpager {
namespace {

void AddVote(Slot* slot, std::optional<std::string> token, double confidence, size_t input) {
  for (auto& arc : slot->arcs) {
    if (arc.token == token) {
      ++arc.votes;
      arc.confidence_sum += confidence;
      return;
    }
  }
  slot->arcs.push_back(Arc{std::move(token), 1, confidence, input});
}

double ConfidenceOf(const std::vector<std::vector<double>>* confidences, size_t input, size_t pos) {
  if (confidences == nullptr) return 1.0;
  return (*confidences)[input][pos];
}

// Every slot holds exactly one arc that input 0 voted for.
const Arc* BaseArc(const Slot& slot) {
  for (const auto& arc : slot.arcs) {
    if (arc.first_input == 0) return &arc;
  }
  return &slot.arcs.front();
}

}  // namespace

size_t Slot::total_votes() const {
  size_t n = 0;
  for (const auto& arc : arcs) n += arc.votes;
  return n;
}

const Arc* Slot::Find(const std::optional<std::string>& token) const {
  for (const auto& arc : arcs) {
    if (arc.token == token) return &arc;
  }
  return nullptr;
}

void VoteOptions::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("vote alpha must lie in [0, 1]");
  }
}

TransitionNetwork BuildNetwork(const std::vector<TokenSequence>& hyps,
                               const std::vector<std::vector<double>>* confidences) {
  if (hyps.empty()) throw RoverError("ROVER needs at least one hypothesis");
  if (confidences != nullptr) {
    if (confidences->size() != hyps.size()) throw RoverError("one confidence list per hypothesis");
    for (size_t k = 0; k < hyps.size(); ++k) {
      if ((*confidences)[k].size() != hyps[k].size()) {
        throw RoverError("confidence count does not match token count for input " +
                         std::to_string(k));
      }
    }
  }

  TransitionNetwork net;
  net.mode = hyps[0].mode;
  net.num_inputs = 1;
  net.slots.reserve(hyps[0].size());
  for (size_t p = 0; p < hyps[0].size(); ++p) {
    Slot slot;
    slot.arcs.push_back(Arc{hyps[0].tokens[p], 1, ConfidenceOf(confidences, 0, p), 0});
    net.slots.push_back(std::move(slot));
  }

  for (size_t k = 1; k < hyps.size(); ++k) {
    const TokenSequence& hyp = hyps[k];
    if (hyp.mode != net.mode) throw RoverError("token mode mismatch in ROVER input");
    // Minimum-cost alignments are ranked by how many slots they agree with
    // hyps[0] on, so repeated copies of the base always land on its slots.
    const auto steps = detail::AlignUnitCost(
        net.slots.size(), hyp.size(),
        [&](size_t i, size_t j) { return net.slots[i].Find(hyp.tokens[j]) != nullptr; },
        [&](size_t i, size_t j) {
          const Arc* base = BaseArc(net.slots[i]);
          return base->token == hyp.tokens[j] ? 1u : 0u;
        },
        [&](size_t i) { return BaseArc(net.slots[i])->is_null() ? 1u : 0u; });

    std::vector<Slot> merged;
    merged.reserve(steps.size());
    for (const auto& step : steps) {
      switch (step.kind) {
        case EditKind::kCor:
        case EditKind::kSub: {
          Slot slot = std::move(net.slots[step.ref_index]);
          AddVote(&slot, hyp.tokens[step.hyp_index], ConfidenceOf(confidences, k, step.hyp_index), k);
          merged.push_back(std::move(slot));
          break;
        }
        case EditKind::kDel: {
          Slot slot = std::move(net.slots[step.ref_index]);
          AddVote(&slot, std::nullopt, 0.0, k);
          merged.push_back(std::move(slot));
          break;
        }
        case EditKind::kIns: {
          Slot slot;
          slot.arcs.push_back(Arc{std::nullopt, k, 0.0, 0});
          slot.arcs.push_back(
              Arc{hyp.tokens[step.hyp_index], 1, ConfidenceOf(confidences, k, step.hyp_index), k});
          merged.push_back(std::move(slot));
          break;
        }
      }
    }
    net.slots = std::move(merged);
    net.num_inputs = k + 1;
  }
  return net;
}

TokenSequence Vote(const TransitionNetwork& network, const VoteOptions& opts) {
  opts.Validate();
  TokenSequence out;
  out.mode = network.mode;
  const double n = static_cast<double>(network.num_inputs);
  for (const auto& slot : network.slots) {
    const Arc* best = nullptr;
    double best_score = 0.0;
    for (const auto& arc : slot.arcs) {
      const double confidence =
          arc.is_null() ? opts.null_confidence : arc.confidence_sum / static_cast<double>(arc.votes);
      const double score =
          opts.alpha * (static_cast<double>(arc.votes) / n) + (1.0 - opts.alpha) * confidence;
      bool better = best == nullptr || score > best_score;
      if (!better && score == best_score) {
        if (opts.tie_break == TieBreak::kPreferTokenThenEarliest && arc.is_null() != best->is_null()) {
          better = !arc.is_null();
        } else {
          better = arc.first_input < best->first_input;
        }
      }
      if (better) {
        best = &arc;
        best_score = score;
      }
    }
    if (best != nullptr && !best->is_null()) out.tokens.push_back(*best->token);
  }
  return out;
}

TokenSequence RoverCombine(const std::vector<TokenSequence>& hyps, const VoteOptions& opts,
                           const std::vector<std::vector<double>>* confidences) {
  opts.Validate();
  return Vote(BuildNetwork(hyps, confidences), opts);
}

}  // namespace mpager
