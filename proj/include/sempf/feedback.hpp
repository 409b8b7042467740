#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>

#include "sempf/isa.hpp"

namespace sempf {

enum class LookaheadPolicy : std::uint8_t { dynamic_from_1, dynamic_from_16, fixed_32 };

std::string_view to_string(LookaheadPolicy p);
std::optional<LookaheadPolicy> parse_policy(std::string_view s);
int initial_lookahead(LookaheadPolicy p);
bool is_adaptive(LookaheadPolicy p);

inline constexpr int kMaxLookahead = 64;
inline constexpr std::uint32_t kEvalPeriod = 32;  // hits between lookahead adjustments
inline constexpr double kEwmaAlpha = 1.0 / 8.0;

inline constexpr std::uint32_t kNoPie = 0xFFFFFFFF;

struct PrefetchRecord {
  Addr line = 0;                 // line id, not byte address
  std::uint32_t pie_slot = kNoPie;
  std::uint64_t pie_uid = 0;     // distinguishes successive owners of a slot
  Addr trigger_ip = 0;
  Cycle issued = 0;
  bool hit = false;
};

struct QueueHit {
  PrefetchRecord record;
  std::size_t depth = 0;  // prefetches issued after the matched one
};

// FIFO of issued prefetches used to score usefulness and hit depth.
class PrefetchQueue {
 public:
  explicit PrefetchQueue(std::size_t capacity = 64);

  // Returns the evicted record when it was never hit.
  std::optional<PrefetchRecord> enqueue(const PrefetchRecord& rec);
  // Marks the most recent un-hit record on the same line.
  std::optional<QueueHit> match_demand(Addr addr);

  std::size_t size() const { return q_.size(); }
  std::size_t capacity() const { return cap_; }
  const std::deque<PrefetchRecord>& records() const { return q_; }

  std::uint64_t enqueued() const { return enqueued_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t useless() const { return useless_; }

 private:
  std::size_t cap_;
  std::deque<PrefetchRecord> q_;
  std::uint64_t enqueued_ = 0, hits_ = 0, useless_ = 0;
};

int reward(std::size_t depth, std::size_t q);
double update_ewma(double ewma, bool have_sample, double depth);
int adapt_lookahead(int lookahead, double ewma, std::size_t q);

}  // namespace sempf
