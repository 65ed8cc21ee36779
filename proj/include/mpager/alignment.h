#ifndef MPAGER_ALIGNMENT_H_
#define MPAGER_ALIGNMENT_H_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpager/textnorm.h"

namespace mpager {

enum class EditKind : std::uint8_t { kCor, kSub, kIns, kDel };

const char* EditKindName(EditKind kind);

struct EditOp {
  EditKind kind;
  std::optional<std::string> ref_token;  // absent for kIns
  std::optional<std::string> hyp_token;  // absent for kDel

  bool operator==(const EditOp&) const = default;
};

struct Alignment {
  std::vector<EditOp> ops;
  size_t distance = 0;
};

struct EditCounts {
  size_t hits = 0;
  size_t subs = 0;
  size_t dels = 0;
  size_t ins = 0;
  size_t ref_len = 0;

  size_t errors() const { return subs + dels + ins; }
  EditCounts& operator+=(const EditCounts& o) {
    hits += o.hits, subs += o.subs, dels += o.dels, ins += o.ins, ref_len += o.ref_len;
    return *this;
  }
  bool operator==(const EditCounts&) const = default;
};

class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unit-cost Levenshtein alignment. Among minimal alignments the backtrace
// prefers COR/SUB, then DEL, then INS at every cell, so results are
// reproducible. Throws AlignmentError when token modes differ.
Alignment Align(const TokenSequence& ref, const TokenSequence& hyp);

EditCounts CountEdits(const Alignment& alignment);

namespace detail {

// One step of a DP backtrace, in forward order. For kCor/kSub both indices
// are valid; kDel consumes ref_index only; kIns consumes hyp_index only.
struct AlignStep {
  EditKind kind;
  size_t ref_index;
  size_t hyp_index;
};

// Shared unit-cost DP. `matches(i, j)` says whether ref item i and hyp item
// j are a zero-cost match. Used by token alignment and by the ROVER network
// builder (where a ref item is a network slot).
//
// Among minimum-cost alignments, the one with the largest total affinity
// wins; `diag_affinity(i, j)` scores pairing ref i with hyp j and
// `del_affinity(i)` scores leaving ref i unpaired. Remaining ties follow the
// backtrace order COR/SUB, DEL, INS.
template <typename MatchFn, typename DiagAffinityFn, typename DelAffinityFn>
std::vector<AlignStep> AlignUnitCost(size_t ref_len, size_t hyp_len, MatchFn&& matches,
                                     DiagAffinityFn&& diag_affinity,
                                     DelAffinityFn&& del_affinity) {
  struct Cell {
    std::uint32_t cost;
    std::uint32_t affinity;
    bool operator==(const Cell&) const = default;
    bool BetterThan(const Cell& o) const {
      return cost < o.cost || (cost == o.cost && affinity > o.affinity);
    }
  };
  // Entry (i, j) holds the DP cell plus, for i, j > 0, the pair data of
  // ref[i-1] / hyp[j-1] so the backtrace can re-derive predecessors.
  struct Entry {
    Cell cell;
    std::uint32_t diag_aff;
    std::uint32_t match;
  };
  const size_t cols = hyp_len + 1;
  std::vector<Entry> table((ref_len + 1) * cols);
  std::vector<std::uint32_t> del_aff(ref_len);
  auto at = [&](size_t i, size_t j) -> Cell& { return table[i * cols + j].cell; };
  auto pair = [&](size_t i, size_t j) -> Entry& { return table[i * cols + j]; };
  for (size_t i = 0; i < ref_len; ++i) del_aff[i] = del_affinity(i);

  at(0, 0) = {0, 0};
  for (size_t i = 1; i <= ref_len; ++i) {
    at(i, 0) = {at(i - 1, 0).cost + 1, at(i - 1, 0).affinity + del_aff[i - 1]};
  }
  for (size_t j = 1; j <= hyp_len; ++j) at(0, j) = {static_cast<std::uint32_t>(j), 0};

  auto diag_from = [&](size_t i, size_t j) {
    const Entry& e = pair(i, j);
    const Cell& p = at(i - 1, j - 1);
    return Cell{p.cost + (e.match ? 0u : 1u), p.affinity + e.diag_aff};
  };
  auto del_from = [&](size_t i, size_t j) {
    const Cell& p = at(i - 1, j);
    return Cell{p.cost + 1, p.affinity + del_aff[i - 1]};
  };
  auto ins_from = [&](size_t i, size_t j) {
    const Cell& p = at(i, j - 1);
    return Cell{p.cost + 1, p.affinity};
  };

  for (size_t i = 1; i <= ref_len; ++i) {
    for (size_t j = 1; j <= hyp_len; ++j) {
      Entry& e = pair(i, j);
      e.match = matches(i - 1, j - 1) ? 1 : 0;
      e.diag_aff = diag_affinity(i - 1, j - 1);
      Cell best = diag_from(i, j);
      const Cell del = del_from(i, j);
      if (del.BetterThan(best)) best = del;
      const Cell ins = ins_from(i, j);
      if (ins.BetterThan(best)) best = ins;
      e.cell = best;
    }
  }

  std::vector<AlignStep> steps;
  steps.reserve(ref_len + hyp_len);
  size_t i = ref_len;
  size_t j = hyp_len;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == diag_from(i, j)) {
      const bool m = pair(i, j).match != 0;
      steps.push_back({m ? EditKind::kCor : EditKind::kSub, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && (j == 0 || at(i, j) == del_from(i, j))) {
      steps.push_back({EditKind::kDel, i - 1, j});
      --i;
    } else {
      steps.push_back({EditKind::kIns, i, j - 1});
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

template <typename MatchFn>
std::vector<AlignStep> AlignUnitCost(size_t ref_len, size_t hyp_len, MatchFn&& matches) {
  return AlignUnitCost(
      ref_len, hyp_len, std::forward<MatchFn>(matches), [](size_t, size_t) { return 0u; },
      [](size_t) { return 0u; });
}

}  // namespace detail
}  // namespace mpager

#endif  // MPAGER_ALIGNMENT_H_
