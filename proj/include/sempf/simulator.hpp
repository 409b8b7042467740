#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "sempf/baselines.hpp"
#include "sempf/config.hpp"
#include "sempf/context.hpp"
#include "sempf/feedback.hpp"
#include "sempf/history.hpp"
#include "sempf/injector.hpp"
#include "sempf/isa.hpp"
#include "sempf/memsys.hpp"
#include "sempf/pie.hpp"
#include "sempf/workloads.hpp"

namespace sempf {

struct PerIpStats {
  std::uint64_t accesses = 0;
  std::uint64_t misses = 0;   // demand L1 misses
  std::uint64_t covered = 0;  // first touch of a filled prefetched line
  std::uint64_t late = 0;     // first touch of a prefetched line still in flight
  std::uint64_t pf_sent = 0;  // prefetches triggered by this ip
  std::uint64_t pf_useful = 0;

  double coverage() const;
  double accuracy() const;
};

// Counters cleared at the end of warmup.
struct SimStats {
  std::uint64_t retired = 0;
  Cycle cycles = 0;
  std::uint64_t injections = 0;
  std::uint64_t injected_ops = 0;
  Cycle injection_cycles = 0;
  std::uint64_t pf_issued = 0;
  std::uint64_t pf_useful = 0;
  std::uint64_t pf_useless = 0;
  std::uint64_t pf_filtered = 0;   // target line already resident or in flight
  std::uint64_t pf_repeat_drops = 0;
  std::vector<std::uint64_t> hit_depth;  // histogram, one bucket per queue position
  std::uint64_t late_hits = 0;
  std::uint64_t oracle_checks = 0;
  std::uint64_t oracle_matches = 0;
  std::uint64_t walks = 0;
  std::uint64_t walks_dropped = 0;  // no free walker
  Cycle walk_busy_cycles = 0;        // cycles with at least one walk in progress
  std::uint64_t validation_failures = 0;
  std::map<Addr, PerIpStats> per_ip;

  double accuracy() const;
};

class Simulator {
 public:
  explicit Simulator(const RunConfig& cfg);
  Simulator(const RunConfig& cfg, Workload workload);

  // Runs to HALT or to warmup+measure retired ops.
  void run();
  // One retired op; false when the run is over.
  bool step();
  bool finished() const;

  const RunConfig& config() const { return cfg_; }
  const Workload& workload() const { return wl_; }
  const Program& program() const { return program_; }
  const ArchState& state() const { return state_; }
  const MemoryHierarchy& caches() const { return hier_; }
  const PieArray& pies() const { return pies_; }
  const PrefetchQueue& queue() const { return queue_; }
  const SimStats& stats() const { return stats_; }
  const SimStats& lifetime() const { return lifetime_; }
  std::uint64_t measured_retired() const { return state_.retired - measure_start_retired_; }
  Cycle measured_cycles() const { return state_.cycle - measure_start_cycle_; }
  BranchHistory bhr() const { return bhr_; }

  // Test hooks.
  std::function<void(const Pie&, std::size_t instance, const InjectionResult&)> on_injection;
  std::function<void(const ContextKey&, const Pie*)> on_encounter;

 private:
  struct Pending {
    Addr addr = 0;
    Cycle at = 0;
    std::uint32_t slot = kNoPie;
    std::uint64_t uid = 0;
    Addr ip = 0;
  };

  void inject(Pie& p, const MicroOp& load);
  void issue_prefetch(Addr addr, Cycle at, Addr trigger_ip, Pie* pie);
  void on_demand_hit(const QueueHit& h, bool late);
  void encounter(const ContextKey& key, bool missed);
  std::optional<std::size_t> claim_walker();
  void occupy_walker(std::size_t w, std::size_t scanned);
  void try_generate(Pie& p, const ContextKey& key);
  void try_validate(Pie& p, const ContextKey& key);
  void do_trim(Pie& p);
  void begin_measurement();
  template <typename F>
  void count(F&& f) {
    f(stats_);
    f(lifetime_);
  }

  RunConfig cfg_;
  Workload wl_;
  Program program_;
  ArchState state_;
  MemoryHierarchy hier_;
  HistoryQueue history_;
  BranchHistory bhr_;
  FlakinessDetector detector_;
  PieArray pies_;
  PrefetchQueue queue_;
  StridePrefetcher stride_;
  WalkConfig walk_cfg_;
  std::vector<Cycle> walker_busy_until_;
  Cycle walk_union_end_ = 0;
  std::optional<Pending> pending_;
  std::uint64_t critical_instances_ = 0;
  std::uint64_t measure_start_retired_ = 0;
  Cycle measure_start_cycle_ = 0;
  bool measuring_ = false;
  SimStats stats_;
  SimStats lifetime_;
};

double coverage(const CacheStats& s);

}  // namespace sempf
