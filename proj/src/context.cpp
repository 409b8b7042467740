#include "sempf/context.hpp"

#include "sempf/pie.hpp"

namespace sempf {

BranchHistory update_bhr(BranchHistory bhr, Addr branch_ip, bool taken) {
  const std::uint32_t slot = static_cast<std::uint32_t>(branch_ip & 0xF) ^ (taken ? 1u : 0u);
  return BranchHistory((bhr.bits() << BranchHistory::kSlotBits) | slot);
}

std::uint32_t fold_index(Addr ip, std::uint32_t bhr, int index_bits) {
  if (index_bits <= 0) return 0;
  const std::uint64_t mask = (std::uint64_t{1} << index_bits) - 1;
  std::uint64_t x = ip ^ (std::uint64_t{bhr} << 1);
  std::uint64_t out = 0;
  while (x != 0) {
    out ^= x & mask;
    x >>= index_bits;
  }
  return static_cast<std::uint32_t>(out);
}

ContextKey context_of(Addr load_ip, BranchHistory bhr, int context_bits, int index_bits) {
  const std::uint32_t masked = bhr.masked(context_bits);
  return ContextKey{load_ip, masked, fold_index(load_ip, masked, index_bits)};
}

DetectorDecision FlakinessDetector::observe_load(PieArray& pies, const ContextKey& key, bool l1_missed,
                                                 std::uint64_t retired_index, Cycle /*now*/) {
  ContextRecord* rec = l1_missed ? &pies.context_record(key) : pies.find_context_record(key);
  if (rec && !rec->eligible) {
    FlakinessRecord& f = rec->shadow;
    if (f.appearances == 0 || retired_index - f.window_start > cfg_.window) f = FlakinessRecord{0, 0, retired_index};
    if (f.appearances < FlakinessRecord::kSaturate) ++f.appearances;
    if (l1_missed && f.misses < FlakinessRecord::kSaturate) ++f.misses;
    rec->eligible = f.appearances >= cfg_.hot_threshold && f.misses >= cfg_.miss_threshold;
  }
  Pie& slot = pies.slot_for(key);
  if (!slot.valid) {
    if (!l1_missed) return DetectorDecision::ignore;
    pies.allocate(key, retired_index);
    return DetectorDecision::allocate_pie;
  }

  if (slot.tag == key) {
    if (slot.state != PieState::Active) return DetectorDecision::ignore;
    FlakinessRecord& f = slot.flaky;
    if (retired_index - f.window_start > cfg_.window) f = FlakinessRecord{0, 0, retired_index};
    if (f.appearances < FlakinessRecord::kSaturate) ++f.appearances;
    if (l1_missed && f.misses < FlakinessRecord::kSaturate) ++f.misses;
    if (f.appearances >= cfg_.hot_threshold && f.misses >= cfg_.miss_threshold)
      return DetectorDecision::advance_to_gen;
    return DetectorDecision::ignore;
  }

  // Index collision with another context.
  if (!l1_missed) return DetectorDecision::ignore;
  switch (slot.state) {
    case PieState::Armed:
    case PieState::Disabled:
      ++pies.context_record(key).denied;
      return DetectorDecision::ignore;
    case PieState::Gen:
    case PieState::Validate:
    case PieState::Trim:
      pies.reset(slot, ResetCause::hash_collision);
      break;
    case PieState::Active:
      break;
  }
  pies.allocate(key, retired_index);
  return DetectorDecision::allocate_pie;
}

}  // namespace sempf
