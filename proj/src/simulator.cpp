#include "sempf/simulator.hpp"

#include <algorithm>
#include <stdexcept>

namespace sempf {

double PerIpStats::coverage() const {
  const std::uint64_t got = covered + late;
  return got + misses == 0 ? 0.0 : static_cast<double>(got) / static_cast<double>(got + misses);
}

double PerIpStats::accuracy() const {
  return pf_sent == 0 ? 0.0 : static_cast<double>(pf_useful) / static_cast<double>(pf_sent);
}

double SimStats::accuracy() const {
  const std::uint64_t resolved = pf_useful + pf_useless;
  return resolved == 0 ? 0.0 : static_cast<double>(pf_useful) / static_cast<double>(resolved);
}

double coverage(const CacheStats& s) {
  const std::uint64_t got = s.covered + s.late;
  const std::uint64_t total = got + s.demand_l1_misses();
  return total == 0 ? 0.0 : static_cast<double>(got) / static_cast<double>(total);
}

namespace {

PieConfig pie_config(const RunConfig& c) {
  PieConfig p;
  p.entries = c.semantic.pie_entries;
  p.validation_rounds = c.semantic.validation_rounds;
  p.stale_resets = c.semantic.stale_resets;
  p.timeout = c.semantic.timeout;
  p.usefulness_threshold = c.semantic.usefulness_threshold;
  p.queue = c.queue;
  p.policy = c.policy;
  return p;
}

const RunConfig& checked(const RunConfig& c) {
  c.check();
  return c;
}

}  // namespace

Simulator::Simulator(const RunConfig& cfg) : Simulator(checked(cfg), generate(cfg.workload)) {}

Simulator::Simulator(const RunConfig& cfg, Workload workload)
    : cfg_(checked(cfg)),
      wl_(std::move(workload)),
      program_(wl_.image.ops),
      hier_(cfg.cache),
      history_(cfg.semantic.history),
      detector_(DetectorConfig{cfg.semantic.hot_window, 2, 1}),
      pies_(pie_config(cfg)),
      queue_(cfg.queue),
      stride_(cfg.stride_degree),
      walker_busy_until_(static_cast<std::size_t>(cfg.semantic.walkers), 0) {
  validate(program_);
  if (program_.size() == 0) throw SimulationFault("empty program");
  for (const auto& [addr, value] : wl_.image.memory) state_.mem.write64(addr, value);
  state_.ip = program_.entry();
  walk_cfg_.context_bits = cfg.semantic.context_bits;
  walk_cfg_.loop_unroll = cfg.semantic.loop_unroll;
  stats_.hit_depth.assign(cfg.queue, 0);
  lifetime_.hit_depth.assign(cfg.queue, 0);
  if (cfg_.warmup == 0) begin_measurement();
}

bool Simulator::finished() const {
  return state_.halted || state_.retired >= cfg_.warmup + cfg_.measure;
}

void Simulator::run() {
  while (step()) {
  }
}

void Simulator::begin_measurement() {
  measuring_ = true;
  stats_ = SimStats{};
  stats_.hit_depth.assign(cfg_.queue, 0);
  hier_.reset_stats();
  measure_start_retired_ = state_.retired;
  measure_start_cycle_ = state_.cycle;
}

bool Simulator::step() {
  if (finished()) return false;
  const MicroOp* m = program_.fetch(state_.ip);
  if (!m) throw SimulationFault("fetch outside program at ip " + std::to_string(state_.ip));
  const bool semantic = cfg_.prefetcher == PrefetcherKind::semantic;

  std::optional<ContextKey> key;
  if (m->kind == OpKind::LOAD && semantic) {
    key = context_of(m->ip, bhr_, cfg_.semantic.context_bits, pies_.config().index_bits());
    if (Pie* p = try_trigger(*key, pies_)) inject(*p, *m);
  }

  const RetiredEvent ev = sempf::step(state_, program_);
  bool missed = false;

  if (ev.eff_addr) {
    const bool is_load = ev.op.kind == OpKind::LOAD;
    const AccessResult r =
        hier_.access(*ev.eff_addr, is_load ? AccessKind::demand_load : AccessKind::demand_store, state_.cycle);
    state_.cycle += r.latency;
    if (is_load) {
      const bool late = r.hit_level == HitLevel::IN_FLIGHT;
      missed = r.hit_level != HitLevel::L1 && !late;
      count([&](SimStats& s) {
        PerIpStats& st = s.per_ip[ev.op.ip];
        ++st.accesses;
        if (missed) ++st.misses;
        if (r.covered) ++(late ? st.late : st.covered);
      });
      if (cfg_.prefetcher != PrefetcherKind::none) {
        if (auto h = queue_.match_demand(*ev.eff_addr)) on_demand_hit(*h, late);
      }
      // Deferred so the demand above is matched before this injection's record enters the queue.
      if (pending_) {
        const Pending pf = *pending_;
        pending_.reset();
        Pie& owner = pies_.at(pf.slot);
        issue_prefetch(pf.addr, pf.at, pf.ip, owner.valid && owner.uid == pf.uid ? &owner : nullptr);
      }
      if (cfg_.prefetcher == PrefetcherKind::nextline && missed) {
        issue_prefetch(next_line(*ev.eff_addr), state_.cycle, ev.op.ip, nullptr);
      } else if (cfg_.prefetcher == PrefetcherKind::stride) {
        for (Addr a : stride_.observe_and_issue(ev.op.ip, *ev.eff_addr)) issue_prefetch(a, state_.cycle, ev.op.ip, nullptr);
      }
      if (ev.op.ip == wl_.oracle.critical_ip) ++critical_instances_;
    }
  }

  history_.push(HistoryEntry{ev, bhr_});
  if (ev.op.kind == OpKind::BR) bhr_ = update_bhr(bhr_, ev.op.ip, *ev.taken);

  if (key) encounter(*key, missed);
  if (semantic) pies_.timeout_sweep(state_.cycle);

  count([](SimStats& s) { ++s.retired; });
  if (!measuring_ && state_.retired >= cfg_.warmup) begin_measurement();
  stats_.cycles = measured_cycles();
  lifetime_.cycles = state_.cycle;
  return !finished();
}

void Simulator::inject(Pie& p, const MicroOp& load) {
  const InjectionResult res =
      execute_slice(p.slice, state_, p.lookahead, &hier_, state_.cycle, cfg_.semantic.mode);
  state_.cycle += res.cost_cycles;
  ++p.injections;
  count([&](SimStats& s) {
    ++s.injections;
    s.injected_ops += res.ops_executed;
    s.injection_cycles += res.cost_cycles;
  });
  if (load.ip == wl_.oracle.critical_ip) {
    const OracleVerdict v = oracle_check(wl_.oracle, res.prefetch_addr, load.ip, critical_instances_, p.lookahead);
    if (v != OracleVerdict::not_applicable) {
      count([&](SimStats& s) {
        ++s.oracle_checks;
        if (v == OracleVerdict::match) ++s.oracle_matches;
      });
    }
  }
  if (on_injection) on_injection(p, critical_instances_, res);

  const auto slot = static_cast<std::uint32_t>(p.tag.index);
  const std::uint64_t uid = p.uid;
  if (pies_.repeat_address_check(p, res.prefetch_addr)) {
    count([](SimStats& s) { ++s.pf_repeat_drops; });
    return;
  }
  pending_ = Pending{res.prefetch_addr, std::max(res.issue_time, state_.cycle), slot, uid, load.ip};
}

void Simulator::issue_prefetch(Addr addr, Cycle at, Addr trigger_ip, Pie* pie) {
  if (hier_.in_l1(addr)) {
    count([](SimStats& s) { ++s.pf_filtered; });
    return;
  }
  hier_.access(addr, AccessKind::prefetch, at);
  PrefetchRecord rec;
  rec.line = line_of(addr);
  rec.trigger_ip = trigger_ip;
  rec.issued = at;
  if (pie) {
    rec.pie_slot = static_cast<std::uint32_t>(pie->tag.index);
    rec.pie_uid = pie->uid;
  }
  count([&](SimStats& s) {
    ++s.pf_issued;
    ++s.per_ip[trigger_ip].pf_sent;
  });
  if (pie) pies_.record_sent(*pie);

  if (auto ev = queue_.enqueue(rec)) {
    count([](SimStats& s) { ++s.pf_useless; });
    if (ev->pie_slot != kNoPie) {
      Pie& owner = pies_.at(ev->pie_slot);
      if (owner.valid && owner.uid == ev->pie_uid && owner.state == PieState::Armed) pies_.record_useless(owner);
    }
  }
}

void Simulator::on_demand_hit(const QueueHit& h, bool late) {
  count([&](SimStats& s) {
    ++s.pf_useful;
    ++s.per_ip[h.record.trigger_ip].pf_useful;
    if (h.depth < s.hit_depth.size()) ++s.hit_depth[h.depth];
    if (late) ++s.late_hits;
  });
  if (h.record.pie_slot == kNoPie) return;
  Pie& owner = pies_.at(h.record.pie_slot);
  if (owner.valid && owner.uid == h.record.pie_uid && owner.state == PieState::Armed)
    pies_.record_hit(owner, h.depth, late);
}

std::optional<std::size_t> Simulator::claim_walker() {
  for (std::size_t w = 0; w < walker_busy_until_.size(); ++w)
    if (walker_busy_until_[w] <= state_.cycle) return w;
  count([](SimStats& s) { ++s.walks_dropped; });
  return std::nullopt;
}

void Simulator::occupy_walker(std::size_t w, std::size_t scanned) {
  const Cycle start = state_.cycle;
  const Cycle end = start + walk_occupancy(scanned);
  walker_busy_until_[w] = end;
  const Cycle fresh = end - std::max(start, std::min(end, walk_union_end_));
  walk_union_end_ = std::max(walk_union_end_, end);
  count([&](SimStats& s) {
    ++s.walks;
    s.walk_busy_cycles += fresh;
  });
}

void Simulator::encounter(const ContextKey& key, bool missed) {
  Pie* p = pies_.find(key);
  if (!p || p->state == PieState::Active) {
    const DetectorDecision d = detector_.observe_load(pies_, key, missed, state_.retired, state_.cycle);
    if (d == DetectorDecision::advance_to_gen) {
      p = pies_.find(key);
      p->gen_time = state_.cycle;
      pies_.transition(*p, LifecycleEvent::qualified_hot_flaky);
      try_generate(*p, key);
    }
  } else {
    switch (p->state) {
      case PieState::Gen: try_generate(*p, key); break;
      case PieState::Validate: try_validate(*p, key); break;
      case PieState::Trim: do_trim(*p); break;
      default: break;
    }
  }
  if (on_encounter) on_encounter(key, pies_.find(key));
}

void Simulator::try_generate(Pie& p, const ContextKey& key) {
  const auto w = claim_walker();
  if (!w) return;  // stays in Gen, retried on the next encounter
  WalkResult r = walk_generate(history_, key, walk_cfg_);
  if (auto* cause = std::get_if<AbortCause>(&r)) {
    occupy_walker(*w, history_.size());
    pies_.reset(p, *cause);
    return;
  }
  SliceDraft& d = std::get<SliceDraft>(r);
  occupy_walker(*w, d.scanned);
  p.generation_ops = d.ops;
  p.draft = std::move(d);
  pies_.transition(p, LifecycleEvent::walk_done);
}

void Simulator::try_validate(Pie& p, const ContextKey& key) {
  const auto w = claim_walker();
  if (!w) return;
  WalkResult r = walk_generate(history_, key, walk_cfg_);
  if (auto* cause = std::get_if<AbortCause>(&r)) {
    occupy_walker(*w, history_.size());
    count([](SimStats& s) { ++s.validation_failures; });
    pies_.reset(p, *cause);
    return;
  }
  const SliceDraft& fresh = std::get<SliceDraft>(r);
  occupy_walker(*w, fresh.scanned);
  if (validate_pass(*p.draft, fresh) == Validation::inconsistent) {
    count([](SimStats& s) { ++s.validation_failures; });
    pies_.reset(p, ResetCause::inconsistent);
    return;
  }
  pies_.transition(p, LifecycleEvent::pass);
}

void Simulator::do_trim(Pie& p) {
  const std::vector<Annotation> ann = classify_draft(*p.draft);
  TrimResult r = trim(*p.draft, ann);
  if (auto* cause = std::get_if<AbortCause>(&r)) {
    pies_.reset(p, *cause);
    return;
  }
  auto& slice = std::get<std::vector<SliceOp>>(r);
  if (auto problem = check_slice(slice)) throw std::logic_error("trim produced a bad slice: " + *problem);
  pies_.arm(p, std::move(slice));
}

}  // namespace sempf
