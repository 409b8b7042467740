#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sempf/isa.hpp"

namespace sempf {

inline constexpr Addr kLineBits = 6;
inline constexpr Addr kLineSize = Addr{1} << kLineBits;

constexpr Addr line_of(Addr addr) { return addr >> kLineBits; }

struct LevelConfig {
  std::uint64_t size = 0;
  std::uint32_t assoc = 1;
  Cycle latency = 1;
};

struct CacheConfig {
  LevelConfig l1{32 * 1024, 8, 2};
  LevelConfig l2{256 * 1024, 4, 12};
  LevelConfig l3{4 * 1024 * 1024, 16, 40};
  Cycle mem_latency = 200;

  // Throws std::invalid_argument when a level's geometry is inconsistent.
  void check() const;
};

enum class AccessKind : std::uint8_t { demand_load, demand_store, prefetch };
enum class HitLevel : std::uint8_t { L1, L2, L3, MEM, IN_FLIGHT };

const char* to_string(HitLevel h);

struct AccessResult {
  HitLevel hit_level = HitLevel::MEM;
  Cycle latency = 0;
  Cycle fill_time = 0;
  // Demand touched a line installed by a prefetch for the first time.
  bool covered = false;
};

struct CounterGroup {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
};

struct CacheStats {
  // [level][kind]
  std::array<std::array<CounterGroup, 3>, 3> levels{};
  std::uint64_t covered = 0;         // demand first-touch on a filled prefetched line
  std::uint64_t late = 0;            // demand first-touch while the prefetch fill was pending
  std::uint64_t prefetch_fills = 0;  // prefetches that installed a new L1 line
  std::uint64_t prefetch_unused_evictions = 0;

  const CounterGroup& at(int level, AccessKind k) const {
    return levels[static_cast<std::size_t>(level)][static_cast<std::size_t>(k)];
  }
  std::uint64_t demand_l1_misses() const { return at(0, AccessKind::demand_load).misses; }
};

// Inclusive three-level hierarchy with LRU sets and pending-fill tracking in L1.
// IN_FLIGHT accesses find the tag resident and are counted as hits; the late
// counter records them when they consume a prefetch.
class MemoryHierarchy {
 public:
  explicit MemoryHierarchy(const CacheConfig& cfg = {});

  AccessResult access(Addr addr, AccessKind kind, Cycle now);

  bool in_l1(Addr addr) const { return l1_.find(line_of(addr)) != nullptr; }
  bool in_l2(Addr addr) const { return l2_.find(line_of(addr)) != nullptr; }
  bool in_l3(Addr addr) const { return l3_.find(line_of(addr)) != nullptr; }

  const CacheStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  const CacheConfig& config() const { return cfg_; }

  // Inclusion check over every resident L1 and L2 line (test hook).
  bool inclusion_holds() const;

 private:
  struct Line {
    Addr tag = 0;
    bool valid = false;
    bool prefetched = false;
    Cycle fill_time = 0;
    std::uint64_t lru = 0;
  };

  class Level {
   public:
    Level() = default;
    explicit Level(const LevelConfig& c);
    Line* find(Addr line);
    const Line* find(Addr line) const;
    // Installs `line`, returning the evicted line (valid=false if none).
    Line install(Addr line, std::uint64_t stamp, Line** slot);
    void invalidate(Addr line, Line* evicted);
    template <typename F>
    void for_each(F&& f) const {
      for (const Line& l : lines_)
        if (l.valid) f(l);
    }

   private:
    std::uint64_t sets_ = 1;
    std::uint32_t ways_ = 1;
    std::vector<Line> lines_;
  };

  void note_l1_eviction(const Line& victim);

  CacheConfig cfg_;
  Level l1_, l2_, l3_;
  CacheStats stats_;
  std::uint64_t stamp_ = 0;
};

// Misses per kilo-instruction over demand loads.
double mpki(const CacheStats& stats, std::uint64_t retired);

}  // namespace sempf
