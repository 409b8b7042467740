// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sempf/config.hpp"
#include "sempf/pie.hpp"
#include "sempf/report.hpp"
#include "sempf/simulator.hpp"
#include "sempf/workloads.hpp"

using namespace sempf;

namespace {

// Pinned tolerances.
constexpr int kArmBound = 8;
constexpr std::uint64_t kStrideIters = 10'000;
constexpr std::uint64_t kStrideOpsPerIter = 3;  // LOAD, ADD, BR
constexpr double kStrideCoverage = 0.90;
constexpr double kStrideAccuracy = 0.95;
constexpr double kStrideOracle = 0.99;
constexpr double kIndirectOracle = 0.90;
constexpr double kIndirectStrideAcc = 0.05;
constexpr double kBfsCoverage = 0.60;
constexpr double kBfsStrideCoverage = 0.20;
constexpr double kBfsMpkiReduction = 0.30;
constexpr double kSeedBand = 0.05;
constexpr double kPolicyCoverage = 0.85;
constexpr double kPolicySlack = 0.02;
constexpr double kWalkBusy = 0.02;
constexpr std::uint64_t kMaxOps = 5'000'000;

const WorkloadKind kBundled[] = {WorkloadKind::stride,  WorkloadKind::indirect,          WorkloadKind::linked_list,
                                 WorkloadKind::bfs_csr, WorkloadKind::double_deref_fig6, WorkloadKind::nested_two_phase};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

RunConfig base(WorkloadKind k, PrefetcherKind pf = PrefetcherKind::semantic) {
  RunConfig c;
  c.workload.kind = k;
  c.prefetcher = pf;
  c.measure = kMaxOps;
  return c;
}

std::unique_ptr<Simulator> run(const RunConfig& c) {
  auto sim = std::make_unique<Simulator>(c);
  sim->run();
  return sim;
}

const PerIpStats& critical(const Simulator& s) {
  static const PerIpStats empty;
  auto it = s.stats().per_ip.find(s.workload().oracle.critical_ip);
  return it == s.stats().per_ip.end() ? empty : it->second;
}

double oracle_rate(const Simulator& s) {
  const auto& st = s.stats();
  return st.oracle_checks ? static_cast<double>(st.oracle_matches) / static_cast<double>(st.oracle_checks) : 0.0;
}

double demand_mpki(const Simulator& s) { return mpki(s.caches().stats(), s.measured_retired()); }

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4f", v);
  return b;
}

// 1 -------------------------------------------------------------------------
void fig6_slice(Outcome& o) {
  const auto sim = run(base(WorkloadKind::double_deref_fig6));
  const std::string dump = dump_slices(*sim);
  std::vector<const Pie*> armed;
  for (std::size_t i = 0; i < sim->pies().size(); ++i) {
    const Pie& p = sim->pies().at(i);
    if (p.valid && p.state == PieState::Armed) armed.push_back(&p);
  }
  o.require(dump.find("# armed slices: 1\n") != std::string::npos, "dump shows one armed slice");
  o.require(armed.size() == 1, "exactly one armed PIE");
  if (armed.size() != 1) return;
  const Pie& p = *armed.front();
  o.require(p.tag.ip == sim->workload().oracle.critical_ip, "armed on the critical load");
  std::multiset<std::string> forms;
  for (const SliceOp& op : p.slice) {
    if (op.kind == OpKind::MOV_IMM && op.annotation.kind == Annotation::Kind::constant) forms.insert("imm_move");
    else if (op.kind == OpKind::ADD && op.lookahead_scaled) forms.insert("stride_add");
    else if (op.kind == OpKind::LOAD) forms.insert("load");
    else forms.insert("other");
  }
  o.require(forms == std::multiset<std::string>{"imm_move", "stride_add", "load"}, "forms {imm move, stride add, load}");
  bool draft_mul = false, slice_mul = false;
  for (const MicroOp& m : p.generation_ops) draft_mul |= m.kind == OpKind::MUL;
  for (const SliceOp& op : p.slice) slice_mul |= op.kind == OpKind::MUL;
  bool program_mul = false;
  for (const MicroOp& m : sim->workload().image.ops) program_mul |= m.kind == OpKind::MUL;
  o.require(program_mul, "program contains a multiply");
  o.require(!draft_mul && !slice_mul, "multiply absent from draft and slice");
  o.detail << "slice ops " << p.slice.size() << ", draft ops " << p.generation_ops.size();
}

// 2 -------------------------------------------------------------------------
void arm_bound(Outcome& o) {
  for (WorkloadKind k : {WorkloadKind::stride, WorkloadKind::indirect, WorkloadKind::linked_list,
                         WorkloadKind::double_deref_fig6, WorkloadKind::nested_two_phase}) {
    RunConfig c = base(k);
    Simulator sim(c);
    const Addr crit = sim.workload().oracle.critical_ip;
    std::map<std::pair<Addr, std::uint32_t>, int> seen, armed_at;
    sim.on_encounter = [&](const ContextKey& key, const Pie* p) {
      const auto id = std::make_pair(key.ip, key.bhr);
      const int n = ++seen[id];
      if (p && p->state == PieState::Armed && !armed_at.count(id)) armed_at[id] = n;
    };
    sim.run();
    // Steady contexts of the critical load: those seen at least 1000 times.
    int worst = 0, contexts = 0;
    for (const auto& [id, n] : seen) {
      if (id.first != crit || n < 1000) continue;
      ++contexts;
      const auto it = armed_at.find(id);
      worst = std::max(worst, it == armed_at.end() ? n : it->second);
    }
    o.require(contexts > 0, std::string(to_string(k)) + " has a steady context");
    o.require(worst <= kArmBound, std::string(to_string(k)) + " armed by encounter " + std::to_string(kArmBound));
    o.detail << to_string(k) << ":" << worst << " ";
  }
}

// 3 -------------------------------------------------------------------------
void stride_steady(Outcome& o) {
  RunConfig c = base(WorkloadKind::stride);
  c.warmup = kStrideIters * kStrideOpsPerIter;
  const auto sim = run(c);
  const PerIpStats& cr = critical(*sim);
  o.require(cr.coverage() >= kStrideCoverage, "coverage");
  o.require(cr.accuracy() >= kStrideAccuracy, "critical accuracy");
  o.require(sim->stats().accuracy() >= kStrideAccuracy, "overall accuracy");
  o.require(oracle_rate(*sim) >= kStrideOracle && sim->stats().oracle_checks > 0, "oracle match");
  o.detail << "coverage " << fmt(cr.coverage()) << " accuracy " << fmt(sim->stats().accuracy()) << " oracle "
           << fmt(oracle_rate(*sim)) << " (" << sim->stats().oracle_checks << " checks)";
}

// 4 -------------------------------------------------------------------------
void indirect(Outcome& o) {
  for (LookaheadPolicy pol : {LookaheadPolicy::dynamic_from_1, LookaheadPolicy::fixed_32}) {
    RunConfig c = base(WorkloadKind::indirect);
    c.policy = pol;
    const auto sim = run(c);
    o.require(oracle_rate(*sim) >= kIndirectOracle && sim->stats().oracle_checks > 0,
              std::string("oracle match under ") + std::string(to_string(pol)));
    o.detail << to_string(pol) << " oracle " << fmt(oracle_rate(*sim)) << " ";
  }
  const auto st = run(base(WorkloadKind::indirect, PrefetcherKind::stride));
  const PerIpStats& cr = critical(*st);
  o.require(cr.accuracy() <= kIndirectStrideAcc, "stride accuracy on dependent load");
  o.detail << "stride dependent-load accuracy " << fmt(cr.accuracy()) << " (" << cr.pf_sent << " sent)";
}

// 5 -------------------------------------------------------------------------
void bfs(Outcome& o) {
  std::vector<double> sem_cov, str_cov, red;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto cfg = [&](PrefetcherKind pf) {
      RunConfig c = base(WorkloadKind::bfs_csr, pf);
      c.workload.seed = seed;
      c.seed = seed;
      return c;
    };
    const auto sem = run(cfg(PrefetcherKind::semantic));
    const auto str = run(cfg(PrefetcherKind::stride));
    const auto none = run(cfg(PrefetcherKind::none));
    sem_cov.push_back(critical(*sem).coverage());
    str_cov.push_back(critical(*str).coverage());
    red.push_back(1.0 - demand_mpki(*sem) / demand_mpki(*none));
    const std::string s = " (seed " + std::to_string(seed) + ")";
    o.require(sem_cov.back() >= kBfsCoverage, "semantic critical coverage" + s);
    o.require(str_cov.back() < kBfsStrideCoverage, "stride critical coverage" + s);
    o.require(red.back() >= kBfsMpkiReduction, "MPKI reduction" + s);
    o.detail << "seed " << seed << ": cov " << fmt(sem_cov.back()) << " stride " << fmt(str_cov.back())
             << " mpki-red " << fmt(red.back()) << "; ";
  }
  auto within_band = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    return std::all_of(v.begin(), v.end(), [&](double x) { return std::abs(x - mean) <= kSeedBand; });
  };
  o.require(within_band(sem_cov) && within_band(str_cov) && within_band(red), "seed spread within 5 points");
}

// 6 -------------------------------------------------------------------------
void lookahead(Outcome& o) {
  const double q = 64;
  std::map<LookaheadPolicy, double> cov;
  for (LookaheadPolicy pol :
       {LookaheadPolicy::dynamic_from_1, LookaheadPolicy::dynamic_from_16, LookaheadPolicy::fixed_32}) {
    RunConfig c = base(WorkloadKind::stride);
    c.policy = pol;
    c.cache.mem_latency = 200;
    c.queue = 64;
    c.warmup = kStrideIters * kStrideOpsPerIter;
    Simulator sim(c);
    struct Sample {
      std::size_t instance;
      bool in_band;
      bool evaluated;  // the controller just consumed this EWMA value
      int lookahead;
      std::uint64_t uid;
    };
    std::vector<Sample> trace;
    const Addr crit = sim.workload().oracle.critical_ip;
    std::uint64_t last_hits = 0;
    sim.on_injection = [&](const Pie& p, std::size_t instance, const InjectionResult&) {
      if (p.tag.ip != crit) return;
      // At most one hit lands between two injections of the same load, so a
      // zero hit counter right after a new hit is the value the controller saw.
      const bool evaluated = p.hits != last_hits && p.hits_since_eval == 0;
      last_hits = p.hits;
      const bool band = p.ewma_valid && p.hit_depth_ewma >= q / 8 && p.hit_depth_ewma <= 3 * q / 4;
      trace.push_back({instance, band, evaluated, p.lookahead, p.uid});
    };
    sim.run();
    cov[pol] = critical(sim).coverage();
    o.require(cov[pol] >= kPolicyCoverage, std::string(to_string(pol)) + " coverage");
    o.detail << to_string(pol) << " cov " << fmt(cov[pol]);
    if (!is_adaptive(pol)) {
      o.detail << "; ";
      continue;
    }
    const auto crossing = std::find_if(trace.begin(), trace.end(), [](const Sample& s) { return s.in_band; });
    const auto entry =
        std::find_if(trace.begin(), trace.end(), [](const Sample& s) { return s.in_band && s.evaluated; });
    if (crossing != trace.end()) o.detail << " first crossing@" << crossing->instance << " (L " << crossing->lookahead << ")";
    o.require(entry != trace.end() && entry->instance <= kStrideIters,
              std::string(to_string(pol)) + " EWMA in band within 10k iterations");
    if (entry == trace.end()) continue;
    // Steady L: the value held over the last half of the first PIE's life.
    std::vector<int> tail;
    for (auto it = entry; it != trace.end(); ++it)
      if (it->uid == entry->uid) tail.push_back(it->lookahead);
    std::vector<int> late(tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2), tail.end());
    std::sort(late.begin(), late.end());
    const int steady = late[late.size() / 2];
    const bool bounded = std::all_of(tail.begin(), tail.end(), [&](int l) { return 2 * l >= steady && l <= 2 * steady; });
    o.require(bounded, std::string(to_string(pol)) + " L within 2x of steady after entering band");
    o.detail << " band at evaluation@" << entry->instance << " steady L " << steady << "; ";
  }
  for (LookaheadPolicy pol : {LookaheadPolicy::dynamic_from_1, LookaheadPolicy::dynamic_from_16})
    o.require(cov[pol] >= cov[LookaheadPolicy::fixed_32] - kPolicySlack,
              std::string(to_string(pol)) + " coverage >= fixed - 2 points");
}

// 7 -------------------------------------------------------------------------
void context_sensitivity(Outcome& o) {
  auto cfg = [](int bits) {
    RunConfig c = base(WorkloadKind::nested_two_phase);
    c.semantic.context_bits = bits;
    return c;
  };
  const auto full = run(cfg(24));
  const auto none = run(cfg(0));
  const std::uint64_t f24 = full->stats().validation_failures, f0 = none->stats().validation_failures;
  o.require(f24 < f0, "fewer validation failures at 24 bits");
  std::vector<std::vector<SliceOp>> slices;
  std::set<std::uint32_t> contexts;
  for (std::size_t i = 0; i < full->pies().size(); ++i) {
    const Pie& p = full->pies().at(i);
    if (!p.valid || p.state != PieState::Armed || p.tag.ip != full->workload().oracle.critical_ip) continue;
    if (std::find(slices.begin(), slices.end(), p.slice) == slices.end()) slices.push_back(p.slice);
    contexts.insert(p.tag.bhr);
  }
  o.require(slices.size() >= 2, "two contexts arm distinct slices");
  o.detail << "failures 24b=" << f24 << " 0b=" << f0 << ", distinct armed slices " << slices.size() << " over "
           << contexts.size() << " contexts";
}

// 8 -------------------------------------------------------------------------
Pie& make_armed(PieArray& pies, ContextKey k) {
  Pie& p = pies.allocate(k, 0);
  pies.transition(p, LifecycleEvent::qualified_hot_flaky);
  pies.transition(p, LifecycleEvent::walk_done);
  for (int i = 0; i < pies.config().validation_rounds; ++i) pies.transition(p, LifecycleEvent::pass);
  pies.arm(p, {});
  return p;
}

void counters(Outcome& o) {
  {
    // Exhaustive over every reachable (useless, sent) pair at the shift point.
    bool ok = true;
    for (std::uint32_t u = 0; u <= 64; ++u) {
      PieConfig pc;
      pc.steady_events = ~std::uint64_t{0};
      PieArray pies(pc);
      Pie& p = make_armed(pies, {0x40, 0, 0});
      p.sent = 64;
      p.useless = u;
      pies.record_sent(p);
      const double before = u / 65.0, after = static_cast<double>(p.useless) / p.sent;
      ok &= p.sent == 32 && std::abs(after - before) <= 1.0 / 32;
    }
    o.require(ok, "shift keeps ratio within 1/32");
  }
  {
    PieArray pies;
    Pie& p = pies.allocate({0x40, 0, 0}, 0);
    bool ok = true;
    for (int i = 1; i <= 25; ++i) {
      pies.reset(p, ResetCause::inconsistent);
      ok &= p.state == PieState::Active;
    }
    pies.reset(p, ResetCause::inconsistent);
    o.require(ok && p.state == PieState::Disabled && p.resets == 26, "disabled exactly at the 26th reset");
  }
  {
    PieArray pies;
    Pie& p = make_armed(pies, {0x40, 0, 0});
    bool fired[4];
    for (bool& f : fired) f = pies.repeat_address_check(p, 0x1000);
    o.require(!fired[0] && !fired[1] && !fired[2] && fired[3] && p.state == PieState::Active,
              "4 identical addresses reset");
  }
  {
    PieArray pies;
    Pie& p = pies.allocate({0x40, 0, 0}, 0);
    pies.transition(p, LifecycleEvent::qualified_hot_flaky);
    p.gen_time = 0;
    const std::size_t at_limit = pies.timeout_sweep(100'000);
    const std::size_t past = pies.timeout_sweep(100'001);
    o.require(at_limit == 0 && past == 1 && p.state == PieState::Active, "timeout at 100,001 cycles");
  }
  // Same mechanics inside the simulator: a short timeout must show up as timeout resets.
  {
    RunConfig c = base(WorkloadKind::linked_list);
    c.semantic.timeout = 1;
    const auto sim = run(c);
    o.require(sim->pies().cause_histogram()[static_cast<std::size_t>(ResetCause::timeout)] > 0,
              "simulator applies the timeout");
  }
  o.detail << "shift, 26th reset, repeat filter, timeout";
}

// 9 -------------------------------------------------------------------------
void transparency(Outcome& o) {
  for (WorkloadKind k : kBundled) {
    const auto on = run(base(k));
    const auto off = run(base(k, PrefetcherKind::none));
    const auto again = run(base(k));
    const std::string n(to_string(k));
    o.require(on->state().arch_equal(off->state()) && on->state().regs == off->state().regs, n + " ArchState on == off");
    o.require(on->state().retired == off->state().retired, n + " retired count on == off");
    o.require(render_report(make_report(*on)) == render_report(make_report(*again)), n + " report byte-identical");
    o.require(pie_table_csv(*on) == pie_table_csv(*again) && dump_slices(*on) == dump_slices(*again),
              n + " PIE table and slices identical");
  }
  o.detail << "6 generators, on/off and repeat runs";
}

// 10 ------------------------------------------------------------------------
void occupancy(Outcome& o) {
  for (WorkloadKind k : kBundled) {
    RunConfig c = base(k);
    c.semantic.walkers = 2;
    c.semantic.pie_entries = 16;
    const auto sim = run(c);
    const double busy = static_cast<double>(sim->stats().walk_busy_cycles) / static_cast<double>(sim->measured_cycles());
    const std::string n(to_string(k));
    o.require(busy <= kWalkBusy, n + " walk-busy fraction");
    o.require(sim->pies().starved_contexts() == 0, n + " no starved context");
    o.detail << n << " busy " << fmt(busy) << " starved " << sim->pies().starved_contexts() << "; ";
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"1 fig6 three-op slice", fig6_slice},
      {"2 armed by 8th encounter", arm_bound},
      {"3 stride steady state", stride_steady},
      {"4 indirect accuracy", indirect},
      {"5 bfs_csr coverage and MPKI", bfs},
      {"6 lookahead controller", lookahead},
      {"7 context sensitivity", context_sensitivity},
      {"8 counters and resets", counters},
      {"9 transparency and determinism", transparency},
      {"10 walker and PIE occupancy", occupancy},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
