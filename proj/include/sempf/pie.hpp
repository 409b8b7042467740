#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "sempf/causes.hpp"
#include "sempf/context.hpp"
#include "sempf/feedback.hpp"
#include "sempf/slicer.hpp"

namespace sempf {

enum class PieState : std::uint8_t { Active, Gen, Validate, Trim, Armed, Disabled };
inline constexpr int kNumPieStates = 6;

enum class LifecycleEvent : std::uint8_t { qualified_hot_flaky, walk_done, pass, fail, trim_done };
inline constexpr int kNumLifecycleEvents = 5;

std::string_view to_string(PieState s);
std::string_view to_string(LifecycleEvent e);

// Pure transition table. `last_round` only matters for Validate+pass. Illegal
// pairs throw std::logic_error.
PieState next_state(PieState s, LifecycleEvent e, bool last_round = false);

struct PieConfig {
  std::size_t entries = 16;  // power of two
  int validation_rounds = 3;
  int stale_resets = 25;
  Cycle timeout = 100'000;
  double usefulness_threshold = 0.10;
  int repeat_limit = 4;
  std::uint32_t counter_max = 64;
  std::uint64_t steady_events = 32;
  std::size_t queue = 64;
  LookaheadPolicy policy = LookaheadPolicy::dynamic_from_1;

  int index_bits() const;
};

struct Pie {
  bool valid = false;
  ContextKey tag;
  PieState state = PieState::Active;
  std::uint64_t uid = 0;
  FlakinessRecord flaky;
  std::optional<SliceDraft> draft;
  std::vector<MicroOp> generation_ops;  // draft as first walked, kept for inspection
  std::vector<SliceOp> slice;
  int lookahead = 1;
  std::uint32_t sent = 0;
  std::uint32_t useless = 0;
  std::uint64_t raw_sent = 0;  // since arming; gates the usefulness test
  int resets = 0;
  int validations_passed = 0;
  std::optional<Addr> last_addr;
  int repeat_count = 0;
  double hit_depth_ewma = 0;
  bool ewma_valid = false;
  std::uint32_t hits_since_eval = 0;
  Cycle gen_time = 0;

  // Lifetime diagnostics, survive resets.
  std::uint64_t injections = 0;
  std::uint64_t prefetches = 0;
  std::uint64_t hits = 0;
  std::uint64_t useless_total = 0;
  std::uint64_t reward_total = 0;
  std::uint64_t times_armed = 0;
  std::array<std::uint32_t, kNumResetCauses> causes{};
};

// Per-context bookkeeping used to detect loads that never get a PIE.
struct ContextRecord {
  std::uint64_t allocations = 0;
  std::uint64_t denied = 0;          // miss ignored because the slot was protected
  std::uint64_t evicted_early = 0;   // lost the slot before qualifying
  bool qualified = false;
  // Shadow of the hotness rule, as if the context owned a slot.
  FlakinessRecord shadow{};
  bool eligible = false;
};

class PieArray {
 public:
  explicit PieArray(PieConfig cfg = {});

  const PieConfig& config() const { return cfg_; }
  std::size_t size() const { return pies_.size(); }
  Pie& at(std::size_t i) { return pies_.at(i); }
  const Pie& at(std::size_t i) const { return pies_.at(i); }
  Pie& slot_for(const ContextKey& k) { return pies_.at(k.index); }

  // Valid entry at the key's index whose tag matches, else nullptr.
  Pie* find(const ContextKey& k);
  const Pie* find(const ContextKey& k) const;

  // Overwrites the slot at the key's index with a fresh Active entry.
  Pie& allocate(const ContextKey& k, std::uint64_t retired_index);

  void transition(Pie& p, LifecycleEvent e);
  void reset(Pie& p, ResetCause cause);
  void arm(Pie& p, std::vector<SliceOp> slice);

  // Each returns true if the call reset the PIE.
  bool record_sent(Pie& p);
  bool record_useless(Pie& p);
  bool record_hit(Pie& p, std::size_t depth, bool late);
  bool repeat_address_check(Pie& p, Addr addr);

  std::size_t timeout_sweep(Cycle now);

  const std::array<std::uint64_t, kNumResetCauses>& cause_histogram() const { return causes_; }
  std::uint64_t total_resets() const;
  std::uint64_t disabled_count() const { return disabled_; }

  ContextRecord& context_record(const ContextKey& k) { return contexts_[{k.ip, k.bhr}]; }
  const std::map<std::pair<Addr, std::uint32_t>, ContextRecord>& contexts() const { return contexts_; }
  ContextRecord* find_context_record(const ContextKey& k);
  // Contexts that met the hot/flaky rule on their own yet never reached Gen.
  std::size_t starved_contexts() const;

 private:
  void clear_slice_state(Pie& p);
  bool check_usefulness(Pie& p);
  void shift_if_needed(Pie& p);

  PieConfig cfg_;
  std::vector<Pie> pies_;
  std::uint64_t next_uid_ = 1;
  std::array<std::uint64_t, kNumResetCauses> causes_{};
  std::uint64_t disabled_ = 0;
  std::map<std::pair<Addr, std::uint32_t>, ContextRecord> contexts_;
};

}  // namespace sempf
