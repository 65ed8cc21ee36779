#include "mpager/alignment.h"

namespace mpager {

const char* EditKindName(EditKind kind) {
  switch (kind) {
    case EditKind::kCor: return "COR";
    case EditKind::kSub: return "SUB";
    case EditKind::kIns: return "INS";
    case EditKind::kDel: return "DEL";
  }
  return "?";
}

Alignment Align(const TokenSequence& ref, const TokenSequence& hyp) {
  if (ref.mode != hyp.mode) {
    throw AlignmentError(std::string("token mode mismatch: ") + TokenModeName(ref.mode) + " vs " +
                         TokenModeName(hyp.mode));
  }
  const auto steps = detail::AlignUnitCost(
      ref.size(), hyp.size(), [&](size_t i, size_t j) { return ref.tokens[i] == hyp.tokens[j]; });

  Alignment out;
  out.ops.reserve(steps.size());
  for (const auto& s : steps) {
    EditOp op{s.kind, std::nullopt, std::nullopt};
    if (s.kind != EditKind::kIns) op.ref_token = ref.tokens[s.ref_index];
    if (s.kind != EditKind::kDel) op.hyp_token = hyp.tokens[s.hyp_index];
    if (s.kind != EditKind::kCor) ++out.distance;
    out.ops.push_back(std::move(op));
  }
  return out;
}

EditCounts CountEdits(const Alignment& alignment) {
  EditCounts c;
  for (const auto& op : alignment.ops) {
    switch (op.kind) {
      case EditKind::kCor: ++c.hits; break;
      case EditKind::kSub: ++c.subs; break;
      case EditKind::kDel: ++c.dels; break;
      case EditKind::kIns: ++c.ins; break;
    }
  }
  c.ref_len = c.hits + c.subs + c.dels;
  return c;
}

}  // namespace mpager
