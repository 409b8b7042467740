#include "sempf/pie.hpp"

#include <bit>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sempf {

std::string_view to_string(PieState s) {
  switch (s) {
    case PieState::Active: return "Active";
    case PieState::Gen: return "Gen";
    case PieState::Validate: return "Validate";
    case PieState::Trim: return "Trim";
    case PieState::Armed: return "Armed";
    case PieState::Disabled: return "Disabled";
  }
  return "?";
}

std::string_view to_string(LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::qualified_hot_flaky: return "qualified_hot_flaky";
    case LifecycleEvent::walk_done: return "walk_done";
    case LifecycleEvent::pass: return "pass";
    case LifecycleEvent::fail: return "fail";
    case LifecycleEvent::trim_done: return "trim_done";
  }
  return "?";
}

PieState next_state(PieState s, LifecycleEvent e, bool last_round) {
  using S = PieState;
  using E = LifecycleEvent;
  switch (e) {
    case E::qualified_hot_flaky:
      if (s == S::Active) return S::Gen;
      break;
    case E::walk_done:
      if (s == S::Gen) return S::Validate;
      break;
    case E::pass:
      if (s == S::Validate) return last_round ? S::Trim : S::Validate;
      break;
    case E::trim_done:
      if (s == S::Trim) return S::Armed;
      break;
    case E::fail:
      if (s == S::Gen || s == S::Validate || s == S::Trim || s == S::Armed) return S::Active;
      break;
  }
  throw std::logic_error("illegal PIE transition: " + std::string(to_string(s)) + " + " +
                         std::string(to_string(e)));
}

int PieConfig::index_bits() const { return std::countr_zero(entries); }

PieArray::PieArray(PieConfig cfg) : cfg_(cfg), pies_(cfg.entries) {
  if (cfg.entries == 0 || !std::has_single_bit(cfg.entries))
    throw std::invalid_argument("PIE array size must be a power of two");
  if (cfg.validation_rounds < 1 || cfg.validation_rounds > 7)
    throw std::invalid_argument("validation rounds must be in 1..7");
}

Pie* PieArray::find(const ContextKey& k) {
  Pie& p = pies_.at(k.index);
  return p.valid && p.tag == k ? &p : nullptr;
}

const Pie* PieArray::find(const ContextKey& k) const {
  const Pie& p = pies_.at(k.index);
  return p.valid && p.tag == k ? &p : nullptr;
}

Pie& PieArray::allocate(const ContextKey& k, std::uint64_t retired_index) {
  Pie& p = pies_.at(k.index);
  if (p.valid && !(p.tag == k) && p.state == PieState::Active) {
    ContextRecord& old = context_record(p.tag);
    if (!old.qualified) ++old.evicted_early;
  }
  p = Pie{};
  p.valid = true;
  p.tag = k;
  p.uid = next_uid_++;
  p.lookahead = initial_lookahead(cfg_.policy);
  p.flaky = FlakinessRecord{1, 1, retired_index};
  ++context_record(k).allocations;
  return p;
}

void PieArray::transition(Pie& p, LifecycleEvent e) {
  bool last = false;
  if (p.state == PieState::Validate && e == LifecycleEvent::pass) {
    ++p.validations_passed;
    last = p.validations_passed >= cfg_.validation_rounds;
  }
  p.state = next_state(p.state, e, last);
  if (e == LifecycleEvent::qualified_hot_flaky) context_record(p.tag).qualified = true;
}

void PieArray::clear_slice_state(Pie& p) {
  p.draft.reset();
  p.generation_ops.clear();
  p.slice.clear();
  p.sent = p.useless = 0;
  p.raw_sent = 0;
  p.validations_passed = 0;
  p.last_addr.reset();
  p.repeat_count = 0;
  p.hit_depth_ewma = 0;
  p.ewma_valid = false;
  p.hits_since_eval = 0;
  p.lookahead = initial_lookahead(cfg_.policy);
  p.flaky = FlakinessRecord{};
  p.gen_time = 0;
}

void PieArray::reset(Pie& p, ResetCause cause) {
  if (p.state == PieState::Disabled) throw std::logic_error("reset of a disabled PIE");
  const auto c = static_cast<std::size_t>(cause);
  ++causes_[c];
  ++p.causes[c];
  ++p.resets;
  clear_slice_state(p);
  p.uid = next_uid_++;
  if (p.resets > cfg_.stale_resets) {
    p.state = PieState::Disabled;
    ++disabled_;
  } else {
    p.state = PieState::Active;
  }
}

void PieArray::arm(Pie& p, std::vector<SliceOp> slice) {
  transition(p, LifecycleEvent::trim_done);
  p.slice = std::move(slice);
  p.draft.reset();
  p.lookahead = initial_lookahead(cfg_.policy);
  p.sent = p.useless = 0;
  p.raw_sent = 0;
  ++p.times_armed;
}

void PieArray::shift_if_needed(Pie& p) {
  if (p.sent > cfg_.counter_max || p.useless > cfg_.counter_max) {
    p.sent >>= 1;
    p.useless >>= 1;
  }
  if (p.useless > p.sent) p.useless = p.sent;
}

bool PieArray::check_usefulness(Pie& p) {
  if (p.state != PieState::Armed || p.raw_sent < cfg_.steady_events || p.sent == 0) return false;
  const double useful = 1.0 - static_cast<double>(p.useless) / static_cast<double>(p.sent);
  if (useful < cfg_.usefulness_threshold) {
    reset(p, ResetCause::low_usefulness);
    return true;
  }
  return false;
}

bool PieArray::record_sent(Pie& p) {
  ++p.sent;
  ++p.raw_sent;
  ++p.prefetches;
  shift_if_needed(p);
  return check_usefulness(p);
}

bool PieArray::record_useless(Pie& p) {
  ++p.useless;
  ++p.useless_total;
  shift_if_needed(p);
  return check_usefulness(p);
}

bool PieArray::record_hit(Pie& p, std::size_t depth, bool late) {
  ++p.hits;
  p.reward_total += static_cast<std::uint64_t>(reward(depth, cfg_.queue));
  // A late hit means the prefetch was not far enough ahead, whatever its depth.
  const double sample = late ? 0.0 : static_cast<double>(depth);
  p.hit_depth_ewma = update_ewma(p.hit_depth_ewma, p.ewma_valid, sample);
  p.ewma_valid = true;
  if (is_adaptive(cfg_.policy) && ++p.hits_since_eval >= kEvalPeriod) {
    p.hits_since_eval = 0;
    p.lookahead = adapt_lookahead(p.lookahead, p.hit_depth_ewma, cfg_.queue);
  }
  return false;
}

bool PieArray::repeat_address_check(Pie& p, Addr addr) {
  if (p.last_addr && *p.last_addr == addr) ++p.repeat_count;
  else p.repeat_count = 1;
  p.last_addr = addr;
  if (p.repeat_count >= cfg_.repeat_limit) {
    reset(p, ResetCause::repeated_address);
    return true;
  }
  return false;
}

std::size_t PieArray::timeout_sweep(Cycle now) {
  std::size_t n = 0;
  for (Pie& p : pies_) {
    if (!p.valid) continue;
    if (p.state != PieState::Gen && p.state != PieState::Validate && p.state != PieState::Trim) continue;
    if (now > p.gen_time && now - p.gen_time > cfg_.timeout) {
      reset(p, ResetCause::timeout);
      ++n;
    }
  }
  return n;
}

std::uint64_t PieArray::total_resets() const { return std::accumulate(causes_.begin(), causes_.end(), std::uint64_t{0}); }

ContextRecord* PieArray::find_context_record(const ContextKey& k) {
  auto it = contexts_.find({k.ip, k.bhr});
  return it == contexts_.end() ? nullptr : &it->second;
}

std::size_t PieArray::starved_contexts() const {
  std::size_t n = 0;
  for (const auto& [k, r] : contexts_)
    if (r.eligible && !r.qualified) ++n;
  return n;
}

}  // namespace sempf
