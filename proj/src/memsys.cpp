#include "sempf/memsys.hpp"

#include <stdexcept>
#include <string>

namespace sempf {

void CacheConfig::check() const {
  auto one = [](const char* name, const LevelConfig& l) {
    if (l.assoc == 0 || l.size == 0 || l.size % (std::uint64_t{l.assoc} * kLineSize) != 0)
      throw std::invalid_argument(std::string(name) + ": size must be a multiple of assoc * 64");
  };
  one("l1", l1);
  one("l2", l2);
  one("l3", l3);
}

const char* to_string(HitLevel h) {
  switch (h) {
    case HitLevel::L1: return "L1";
    case HitLevel::L2: return "L2";
    case HitLevel::L3: return "L3";
    case HitLevel::MEM: return "MEM";
    case HitLevel::IN_FLIGHT: return "IN_FLIGHT";
  }
  return "?";
}

MemoryHierarchy::Level::Level(const LevelConfig& c)
    : sets_(c.size / (std::uint64_t{c.assoc} * kLineSize)), ways_(c.assoc), lines_(sets_ * c.assoc) {}

MemoryHierarchy::Line* MemoryHierarchy::Level::find(Addr line) {
  Line* set = &lines_[(line % sets_) * ways_];
  for (std::uint32_t w = 0; w < ways_; ++w)
    if (set[w].valid && set[w].tag == line) return &set[w];
  return nullptr;
}

const MemoryHierarchy::Line* MemoryHierarchy::Level::find(Addr line) const {
  return const_cast<Level*>(this)->find(line);
}

MemoryHierarchy::Line MemoryHierarchy::Level::install(Addr line, std::uint64_t stamp, Line** slot) {
  Line* set = &lines_[(line % sets_) * ways_];
  Line* victim = &set[0];
  for (std::uint32_t w = 0; w < ways_; ++w) {
    if (!set[w].valid) {
      victim = &set[w];
      break;
    }
    if (set[w].lru < victim->lru) victim = &set[w];
  }
  Line old = *victim;
  *victim = Line{line, true, false, 0, stamp};
  *slot = victim;
  return old;
}

void MemoryHierarchy::Level::invalidate(Addr line, Line* evicted) {
  if (Line* l = find(line)) {
    if (evicted) *evicted = *l;
    l->valid = false;
  }
}

MemoryHierarchy::MemoryHierarchy(const CacheConfig& cfg) : cfg_(cfg) {
  cfg_.check();
  l1_ = Level(cfg_.l1);
  l2_ = Level(cfg_.l2);
  l3_ = Level(cfg_.l3);
}

void MemoryHierarchy::note_l1_eviction(const Line& victim) {
  if (victim.valid && victim.prefetched) ++stats_.prefetch_unused_evictions;
}

AccessResult MemoryHierarchy::access(Addr addr, AccessKind kind, Cycle now) {
  const Addr line = line_of(addr);
  const auto k = static_cast<std::size_t>(kind);
  auto& lv = stats_.levels;
  ++stamp_;
  AccessResult r;

  ++lv[0][k].accesses;
  if (Line* l = l1_.find(line)) {
    ++lv[0][k].hits;
    l->lru = stamp_;
    // Keep lower levels warm so inclusion does not back-invalidate hot L1 lines.
    if (Line* l2 = l2_.find(line)) l2->lru = stamp_;
    if (Line* l3 = l3_.find(line)) l3->lru = stamp_;
    const bool pending = l->fill_time > now;
    r.hit_level = pending ? HitLevel::IN_FLIGHT : HitLevel::L1;
    r.latency = pending ? l->fill_time - now : cfg_.l1.latency;
    r.fill_time = l->fill_time;
    if (kind != AccessKind::prefetch && l->prefetched) {
      l->prefetched = false;
      r.covered = true;
      ++(pending ? stats_.late : stats_.covered);
    }
    return r;
  }
  ++lv[0][k].misses;

  Cycle lat = cfg_.l1.latency + cfg_.l2.latency;
  bool in2 = false, in3 = false;
  ++lv[1][k].accesses;
  if (Line* l = l2_.find(line)) {
    ++lv[1][k].hits;
    l->lru = stamp_;
    in2 = true;
    r.hit_level = HitLevel::L2;
    if (Line* l3 = l3_.find(line)) l3->lru = stamp_;
  } else {
    ++lv[1][k].misses;
    lat += cfg_.l3.latency;
    ++lv[2][k].accesses;
    if (Line* l3 = l3_.find(line)) {
      ++lv[2][k].hits;
      l3->lru = stamp_;
      in3 = true;
      r.hit_level = HitLevel::L3;
    } else {
      ++lv[2][k].misses;
      lat += cfg_.mem_latency;
      r.hit_level = HitLevel::MEM;
    }
  }

  Line* slot = nullptr;
  if (!in2 && !in3) {
    Line v = l3_.install(line, stamp_, &slot);
    if (v.valid) {
      l2_.invalidate(v.tag, nullptr);
      Line ev;
      l1_.invalidate(v.tag, &ev);
      if (ev.tag == v.tag) note_l1_eviction(ev);
    }
  }
  if (!in2) {
    Line v = l2_.install(line, stamp_, &slot);
    if (v.valid) {
      Line ev;
      l1_.invalidate(v.tag, &ev);
      if (ev.tag == v.tag) note_l1_eviction(ev);
    }
  }
  Line v = l1_.install(line, stamp_, &slot);
  note_l1_eviction(v);
  slot->fill_time = now + lat;
  slot->prefetched = kind == AccessKind::prefetch;
  if (kind == AccessKind::prefetch) ++stats_.prefetch_fills;

  r.latency = lat;
  r.fill_time = now + lat;
  return r;
}

bool MemoryHierarchy::inclusion_holds() const {
  bool ok = true;
  l1_.for_each([&](const Line& l) { ok = ok && l2_.find(l.tag) && l3_.find(l.tag); });
  l2_.for_each([&](const Line& l) { ok = ok && l3_.find(l.tag); });
  return ok;
}

double mpki(const CacheStats& stats, std::uint64_t retired) {
  if (retired == 0) return 0.0;
  return 1000.0 * static_cast<double>(stats.demand_l1_misses()) / static_cast<double>(retired);
}

}  // namespace sempf
