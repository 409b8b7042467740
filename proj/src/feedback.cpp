#include "sempf/feedback.hpp"

#include <algorithm>
#include <stdexcept>

#include "sempf/memsys.hpp"

namespace sempf {

std::string_view to_string(LookaheadPolicy p) {
  switch (p) {
    case LookaheadPolicy::dynamic_from_1: return "dynamic_from_1";
    case LookaheadPolicy::dynamic_from_16: return "dynamic_from_16";
    case LookaheadPolicy::fixed_32: return "fixed_32";
  }
  return "?";
}

std::optional<LookaheadPolicy> parse_policy(std::string_view s) {
  for (auto p : {LookaheadPolicy::dynamic_from_1, LookaheadPolicy::dynamic_from_16, LookaheadPolicy::fixed_32})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

int initial_lookahead(LookaheadPolicy p) {
  switch (p) {
    case LookaheadPolicy::dynamic_from_1: return 1;
    case LookaheadPolicy::dynamic_from_16: return 16;
    case LookaheadPolicy::fixed_32: return 32;
  }
  return 1;
}

bool is_adaptive(LookaheadPolicy p) { return p != LookaheadPolicy::fixed_32; }

PrefetchQueue::PrefetchQueue(std::size_t capacity) : cap_(capacity) {
  if (capacity == 0) throw std::invalid_argument("prefetch queue capacity must be positive");
}

std::optional<PrefetchRecord> PrefetchQueue::enqueue(const PrefetchRecord& rec) {
  std::optional<PrefetchRecord> out;
  if (q_.size() == cap_) {
    if (!q_.front().hit) {
      out = q_.front();
      ++useless_;
    }
    q_.pop_front();
  }
  q_.push_back(rec);
  ++enqueued_;
  return out;
}

std::optional<QueueHit> PrefetchQueue::match_demand(Addr addr) {
  const Addr line = line_of(addr);
  for (std::size_t k = q_.size(); k-- > 0;) {
    PrefetchRecord& r = q_[k];
    if (r.hit || r.line != line) continue;
    r.hit = true;
    ++hits_;
    return QueueHit{r, q_.size() - 1 - k};
  }
  return std::nullopt;
}

int reward(std::size_t depth, std::size_t q) {
  return (depth >= q / 8 && depth <= 3 * q / 4) ? 2 : 1;
}

double update_ewma(double ewma, bool have_sample, double depth) {
  return have_sample ? ewma + kEwmaAlpha * (depth - ewma) : depth;
}

int adapt_lookahead(int lookahead, double ewma, std::size_t q) {
  if (ewma < static_cast<double>(q) / 8) return std::min(2 * lookahead, kMaxLookahead);
  if (ewma > 3.0 * static_cast<double>(q) / 4) return std::max(lookahead - 1, 1);
  return lookahead;
}

}  // namespace sempf
