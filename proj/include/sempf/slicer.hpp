#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sempf/causes.hpp"
#include "sempf/context.hpp"
#include "sempf/history.hpp"
#include "sempf/isa.hpp"

namespace sempf {

inline constexpr std::size_t kMaxSliceOps = 16;
inline constexpr int kMaxSliceTemps = kNumTempRegs;

struct WalkConfig {
  int context_bits = 24;
  int loop_unroll = 1;  // round trips through the trigger context before stopping, 1..4
  std::size_t max_ops = kMaxSliceOps;
  int max_temps = kMaxSliceTemps;
};

// Load address -> draft slot, 4 sets x 4 ways, FIFO replacement within a set.
class RenameCache {
 public:
  static constexpr int kSets = 4;
  static constexpr int kWays = 4;

  void insert(Addr addr, std::size_t slot);
  std::optional<std::size_t> lookup(Addr addr) const;
  void erase(Addr addr);

 private:
  struct Entry {
    Addr addr = 0;
    std::size_t slot = 0;
    bool valid = false;
  };
  static std::size_t set_of(Addr a) { return (a >> 3) % kSets; }
  std::array<std::array<Entry, kWays>, kSets> sets_{};
  std::array<std::uint8_t, kSets> fifo_{};
};

// Output of a generation walk. ops are in program order; the last op is the
// triggering load. Store/load pairs resolved through memory appear as MOVs
// through t0..t7.
struct SliceDraft {
  std::vector<MicroOp> ops;
  std::vector<std::vector<std::uint64_t>> value_log;  // [op][round]
  RegSet live_ins;            // sources left unresolved when the walk ended
  int temps_used = 0;
  std::size_t scanned = 0;    // history entries visited
  int round_trips = 0;

  std::size_t load_depth() const;  // longest dependent load chain ending at the trigger
  std::size_t alu_count() const;
};

struct Annotation {
  enum class Kind : std::uint8_t { dynamic, constant, stride };
  Kind kind = Kind::dynamic;
  std::int64_t value = 0;  // constant value or stride

  static Annotation dynamic() { return {}; }
  static Annotation constant(std::uint64_t c) { return {Kind::constant, static_cast<std::int64_t>(c)}; }
  static Annotation stride(std::int64_t s) { return {Kind::stride, s}; }
  bool operator==(const Annotation&) const = default;
};

struct SliceSrc {
  enum class Kind : std::uint8_t { none, live, temp, imm };
  Kind kind = Kind::none;
  Reg reg;
  std::int64_t imm = 0;

  static SliceSrc live(Reg r) { return {Kind::live, r, 0}; }
  static SliceSrc temp(Reg r) { return {Kind::temp, r, 0}; }
  static SliceSrc immediate(std::int64_t v) { return {Kind::imm, Reg::none(), v}; }
  bool operator==(const SliceSrc&) const = default;
};

// One op of an armed slice. Destinations are always temporaries. A stride op
// is `dest <- a + b.imm * L`.
struct SliceOp {
  OpKind kind = OpKind::MOV_IMM;
  Reg dest;
  SliceSrc a, b;
  SliceSrc base, index;  // LOAD addressing
  std::uint8_t scale = 1;
  std::int64_t disp = 0;
  bool lookahead_scaled = false;
  Annotation annotation;
  Addr origin_ip = 0;

  bool operator==(const SliceOp&) const = default;
};

using WalkResult = std::variant<SliceDraft, AbortCause>;
using TrimResult = std::variant<std::vector<SliceOp>, AbortCause>;

bool is_slice_legal(const MicroOp& op);

// Backward dependency walk from the youngest history entry (the trigger load).
WalkResult walk_generate(const HistoryQueue& hist, const ContextKey& key, const WalkConfig& cfg = {});

enum class Validation { consistent, inconsistent };

// Compares a fresh walk against the stored draft; on success appends the fresh
// values to the stored value log.
Validation validate_pass(SliceDraft& stored, const SliceDraft& fresh);

Annotation classify_values(const std::vector<std::uint64_t>& observations);
std::vector<Annotation> classify_draft(const SliceDraft& draft);

// Drops everything behind constants and strides, then renames destinations
// onto temporaries.
TrimResult trim(const SliceDraft& draft, const std::vector<Annotation>& annotations, int max_temps = kMaxSliceTemps);

// Walker occupancy in cycles: 8 entries per cycle, capped at 64.
Cycle walk_occupancy(std::size_t entries_scanned);

// Static checks on an armed slice; returns a description of the first problem.
std::optional<std::string> check_slice(const std::vector<SliceOp>& slice);

std::string format_slice_op(const SliceOp& op);
std::string format_slice(const std::vector<SliceOp>& slice);

}  // namespace sempf
