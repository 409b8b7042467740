#pragma once

#include <cstdint>

#include "sempf/isa.hpp"

namespace sempf {

// 6 slots x 4 bits; newest branch in the low nibble.
class BranchHistory {
 public:
  static constexpr int kSlots = 6;
  static constexpr int kSlotBits = 4;
  static constexpr int kBits = kSlots * kSlotBits;
  static constexpr std::uint32_t kMask = (1u << kBits) - 1;

  constexpr BranchHistory() = default;
  constexpr explicit BranchHistory(std::uint32_t bits) : bits_(bits & kMask) {}

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr std::uint32_t newest_slot() const { return bits_ & 0xF; }
  constexpr std::uint32_t masked(int context_bits) const {
    return context_bits >= kBits ? bits_ : bits_ & ((1u << context_bits) - 1);
  }
  constexpr bool operator==(const BranchHistory&) const = default;

 private:
  std::uint32_t bits_ = 0;
};

BranchHistory update_bhr(BranchHistory bhr, Addr branch_ip, bool taken);

// A load instance in program context. `index` only selects a PIE slot; equality
// is over (ip, bhr) so colliding contexts are never merged.
struct ContextKey {
  Addr ip = 0;
  std::uint32_t bhr = 0;
  std::uint32_t index = 0;

  bool operator==(const ContextKey& o) const { return ip == o.ip && bhr == o.bhr; }
};

// XOR of consecutive `index_bits`-wide chunks of (ip ^ (bhr << 1)).
std::uint32_t fold_index(Addr ip, std::uint32_t bhr, int index_bits);

ContextKey context_of(Addr load_ip, BranchHistory bhr, int context_bits, int index_bits = 4);

// Hot/flaky tracking carried by an Active PIE.
struct FlakinessRecord {
  static constexpr std::uint32_t kSaturate = 255;
  std::uint32_t appearances = 0;
  std::uint32_t misses = 0;
  std::uint64_t window_start = 0;
};

struct DetectorConfig {
  std::uint64_t window = 10'000;  // retired instructions
  std::uint32_t hot_threshold = 2;
  std::uint32_t miss_threshold = 1;
};

enum class DetectorDecision { ignore, allocate_pie, advance_to_gen };

class PieArray;

class FlakinessDetector {
 public:
  explicit FlakinessDetector(DetectorConfig cfg = {}) : cfg_(cfg) {}

  // Called for every retired load that probed L1.
  DetectorDecision observe_load(PieArray& pies, const ContextKey& key, bool l1_missed, std::uint64_t retired_index,
                                Cycle now);

  const DetectorConfig& config() const { return cfg_; }

 private:
  DetectorConfig cfg_;
};

}  // namespace sempf
