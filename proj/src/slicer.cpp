#include "sempf/slicer.hpp"

#include <algorithm>
#include <bitset>
#include <stdexcept>

#include "sempf/program_text.hpp"

namespace sempf {

// --- RenameCache ------------------------------------------------------------

void RenameCache::insert(Addr addr, std::size_t slot) {
  auto& set = sets_[set_of(addr)];
  for (auto& e : set) {
    if (e.valid && e.addr == addr) {
      e.slot = slot;
      return;
    }
  }
  auto& way = fifo_[set_of(addr)];
  set[way] = Entry{addr, slot, true};
  way = static_cast<std::uint8_t>((way + 1) % kWays);
}

std::optional<std::size_t> RenameCache::lookup(Addr addr) const {
  for (const auto& e : sets_[set_of(addr)])
    if (e.valid && e.addr == addr) return e.slot;
  return std::nullopt;
}

void RenameCache::erase(Addr addr) {
  for (auto& e : sets_[set_of(addr)])
    if (e.valid && e.addr == addr) e.valid = false;
}

// --- Draft ------------------------------------------------------------------

std::size_t SliceDraft::load_depth() const {
  std::array<std::size_t, kNumRegs> depth{};
  std::size_t last = 0;
  for (const MicroOp& m : ops) {
    std::size_t d = 0;
    const RegSet src = m.sources();
    for (int r = 0; r < kNumRegs; ++r)
      if (src.test(Reg{static_cast<std::uint8_t>(r)})) d = std::max(d, depth[static_cast<std::size_t>(r)]);
    if (m.kind == OpKind::LOAD) ++d;
    last = d;
    if (m.dest.valid()) depth[m.dest.id] = d;
  }
  return last;
}

std::size_t SliceDraft::alu_count() const {
  return static_cast<std::size_t>(std::count_if(ops.begin(), ops.end(), [](const MicroOp& m) { return is_alu(m.kind); }));
}

bool is_slice_legal(const MicroOp& m) {
  const bool kind_ok = m.kind == OpKind::MOV_IMM || m.kind == OpKind::MOV || is_alu(m.kind) || m.kind == OpKind::LOAD;
  return kind_ok && !m.reads_flags();
}

Cycle walk_occupancy(std::size_t entries_scanned) {
  const Cycle c = (entries_scanned + 7) / 8;
  return std::clamp<Cycle>(c, 1, 64);
}

// --- Generation walk --------------------------------------------------------

WalkResult walk_generate(const HistoryQueue& hist, const ContextKey& key, const WalkConfig& cfg) {
  if (hist.empty()) throw std::logic_error("walk on empty history");
  const HistoryEntry& trig = hist.at(0);
  if (trig.event.op.kind != OpKind::LOAD || trig.event.op.ip != key.ip)
    throw std::logic_error("walk must start at the triggering load");

  // Built youngest-first, reversed at the end.
  std::vector<MicroOp> rev{trig.event.op};
  std::vector<std::uint64_t> vals{trig.event.result.value_or(0)};
  RegSet bitmap;
  bitmap.set(trig.event.op.mem.base);
  bitmap.set(trig.event.op.mem.index);

  RenameCache renames;
  int temps = 0;
  int round_trips = 0;
  std::size_t scanned = 1;

  for (auto it = ++hist.walk_backward(0).begin(); it != hist.walk_backward(0).end(); ++it) {
    if (bitmap.empty()) break;
    ++scanned;
    const RetiredEvent& ev = it->event;
    const MicroOp& m = ev.op;
    const bool same_context =
        m.kind == OpKind::LOAD && m.ip == key.ip && it->bhr.masked(cfg.context_bits) == key.bhr;

    if (m.kind == OpKind::STORE) {
      if (auto slot = renames.lookup(*ev.eff_addr)) {
        if (temps >= cfg.max_temps) return AbortCause::too_many_temps;
        const Reg t = Reg::temp(temps++);
        const MicroOp& ld = rev[*slot];
        rev[*slot] = op::mov(ld.ip, ld.dest, t);
        rev.push_back(m.src1.is_reg() ? op::mov(m.ip, t, m.src1.reg) : op::mov_imm(m.ip, t, m.src1.imm));
        vals.push_back(ev.stored.value_or(0));
        // The renamed load no longer needs its address registers; rebuild the
        // bitmap from the kept ops, youngest first.
        bitmap = trig.event.op.sources();
        for (std::size_t i = 1; i < rev.size(); ++i) {
          bitmap.clear(rev[i].dest);
          const RegSet src = rev[i].sources();
          for (int r = 0; r < kNumRegs; ++r)
            if (src.test(Reg{static_cast<std::uint8_t>(r)})) bitmap.set(Reg{static_cast<std::uint8_t>(r)});
        }
        renames.erase(*ev.eff_addr);
        if (rev.size() > cfg.max_ops) return AbortCause::too_long;
      }
    } else if (writes_dest(m.kind) && bitmap.test(m.dest)) {
      if (!is_slice_legal(m)) return AbortCause::complex_instruction;
      rev.push_back(m);
      vals.push_back(ev.result.value_or(0));
      bitmap.clear(m.dest);
      const RegSet src = m.sources();
      for (int r = 0; r < kNumRegs; ++r) {
        const Reg reg{static_cast<std::uint8_t>(r)};
        if (src.test(reg)) bitmap.set(reg);
      }
      if (m.kind == OpKind::LOAD) renames.insert(*ev.eff_addr, rev.size() - 1);
      if (rev.size() > cfg.max_ops) return AbortCause::too_long;
    } else if (m.kind == OpKind::HALT) {
      return AbortCause::complex_instruction;
    }

    if (same_context && ++round_trips >= cfg.loop_unroll) break;
  }

  SliceDraft d;
  d.ops.assign(rev.rbegin(), rev.rend());
  for (auto v = vals.rbegin(); v != vals.rend(); ++v) d.value_log.push_back({*v});
  d.live_ins = bitmap;
  d.temps_used = temps;
  d.scanned = scanned;
  d.round_trips = round_trips;
  return d;
}

// --- Validation and classification ------------------------------------------

Validation validate_pass(SliceDraft& stored, const SliceDraft& fresh) {
  if (stored.ops != fresh.ops) return Validation::inconsistent;
  for (std::size_t i = 0; i < stored.ops.size(); ++i)
    stored.value_log[i].push_back(fresh.value_log[i].front());
  return Validation::consistent;
}

Annotation classify_values(const std::vector<std::uint64_t>& obs) {
  if (obs.size() < 2) return Annotation::dynamic();
  if (std::all_of(obs.begin(), obs.end(), [&](std::uint64_t v) { return v == obs.front(); }))
    return Annotation::constant(obs.front());
  const std::uint64_t delta = obs[1] - obs[0];
  for (std::size_t i = 2; i < obs.size(); ++i)
    if (obs[i] - obs[i - 1] != delta) return Annotation::dynamic();
  return Annotation::stride(static_cast<std::int64_t>(delta));
}

std::vector<Annotation> classify_draft(const SliceDraft& draft) {
  std::vector<Annotation> out;
  out.reserve(draft.ops.size());
  for (std::size_t i = 0; i + 1 < draft.ops.size(); ++i) out.push_back(classify_values(draft.value_log[i]));
  if (!draft.ops.empty()) out.push_back(Annotation::dynamic());  // the trigger itself
  return out;
}

// --- Trim -------------------------------------------------------------------

namespace {

struct Pending {
  SliceOp op;
  Reg orig_dest;
  bool pinned_live = false;  // stride source reads the architectural value
};

SliceSrc src_of(const Operand& o) {
  if (o.is_reg()) return SliceSrc::live(o.reg);
  if (o.is_imm()) return SliceSrc::immediate(o.imm);
  return {};
}

SliceOp lift(const MicroOp& m) {
  SliceOp s;
  s.kind = m.kind;
  s.dest = m.dest;
  s.origin_ip = m.ip;
  if (m.kind == OpKind::LOAD) {
    s.base = SliceSrc::live(m.mem.base);
    if (m.mem.index.valid()) s.index = SliceSrc::live(m.mem.index);
    s.scale = m.mem.scale;
    s.disp = m.mem.disp;
  } else {
    s.a = src_of(m.src1);
    s.b = src_of(m.src2);
  }
  return s;
}

template <typename F>
void for_each_reg_src(SliceOp& s, bool pinned, F&& f) {
  for (SliceSrc* p : {&s.a, &s.b, &s.base, &s.index}) {
    if (p->kind != SliceSrc::Kind::live) continue;
    if (pinned && p == &s.a) continue;
    f(*p);
  }
}

}  // namespace

TrimResult trim(const SliceDraft& draft, const std::vector<Annotation>& ann, int max_temps) {
  const std::size_t n = draft.ops.size();
  if (n == 0 || ann.size() != n) throw std::invalid_argument("trim: draft/annotation mismatch");

  // Backward pass: stop tracking sources at constants and strides.
  std::vector<std::optional<Pending>> kept(n);
  const MicroOp& last = draft.ops.back();
  RegSet needed = last.sources();
  kept[n - 1] = Pending{lift(last), last.dest, false};
  for (std::size_t k = n - 1; k-- > 0;) {
    const MicroOp& m = draft.ops[k];
    if (!m.dest.valid() || !needed.test(m.dest)) continue;
    needed.clear(m.dest);
    const Annotation& a = ann[k];
    Pending p{lift(m), m.dest, false};
    p.op.annotation = a;
    if (a.kind == Annotation::Kind::constant) {
      p.op.kind = OpKind::MOV_IMM;
      p.op.a = SliceSrc::immediate(a.value);
      p.op.b = p.op.base = p.op.index = {};
    } else if (a.kind == Annotation::Kind::stride && m.dest.is_arch()) {
      p.op.kind = OpKind::ADD;
      p.op.a = SliceSrc::live(m.dest);
      p.op.b = SliceSrc::immediate(a.value);
      p.op.base = p.op.index = {};
      p.op.scale = 1;
      p.op.disp = 0;
      p.op.lookahead_scaled = true;
      p.pinned_live = true;
    } else {
      p.op.annotation = Annotation::dynamic();
      const RegSet src = m.sources();
      for (int r = 0; r < kNumRegs; ++r) {
        const Reg reg{static_cast<std::uint8_t>(r)};
        if (src.test(reg)) needed.set(reg);
      }
    }
    kept[k] = p;
  }

  std::vector<Pending> ops;
  for (auto& p : kept)
    if (p) ops.push_back(*p);

  // Liveness: last reader of each producer.
  const std::size_t m = ops.size();
  std::vector<std::size_t> last_use(m);
  {
    std::array<int, kNumRegs> producer;
    producer.fill(-1);
    for (std::size_t i = 0; i < m; ++i) {
      last_use[i] = i;
      for_each_reg_src(ops[i].op, ops[i].pinned_live, [&](SliceSrc& s) {
        const int p = producer[s.reg.id];
        if (p >= 0) last_use[static_cast<std::size_t>(p)] = i;
      });
      producer[ops[i].orig_dest.id] = static_cast<int>(i);
    }
  }

  // Forward pass: rename destinations onto the lowest free temporary.
  std::array<int, kNumRegs> temp_map;
  temp_map.fill(-1);
  std::array<int, kNumTempRegs> holder;  // op index owning each temp
  holder.fill(-1);
  std::vector<SliceOp> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    SliceOp s = ops[i].op;
    bool dangling = false;
    for_each_reg_src(s, ops[i].pinned_live, [&](SliceSrc& src) {
      const int t = temp_map[src.reg.id];
      if (t >= 0) src = SliceSrc::temp(Reg::temp(t));
      else if (!src.reg.is_arch()) dangling = true;
    });
    if (dangling) throw std::logic_error("trim: temporary read before write");
    for (int t = 0; t < kNumTempRegs; ++t) {
      const int h = holder[static_cast<std::size_t>(t)];
      if (h >= 0 && last_use[static_cast<std::size_t>(h)] <= i) holder[static_cast<std::size_t>(t)] = -1;
    }
    int free_temp = -1;
    for (int t = 0; t < std::min(max_temps, kNumTempRegs); ++t) {
      if (holder[static_cast<std::size_t>(t)] < 0) {
        free_temp = t;
        break;
      }
    }
    if (free_temp < 0) return AbortCause::too_many_temps;
    holder[static_cast<std::size_t>(free_temp)] = static_cast<int>(i);
    // Older mappings of any register now held by this temp are dead.
    for (auto& tm : temp_map)
      if (tm == free_temp) tm = -1;
    temp_map[ops[i].orig_dest.id] = free_temp;
    s.dest = Reg::temp(free_temp);
    out.push_back(s);
  }
  return out;
}

// --- Checks and printing ----------------------------------------------------

std::optional<std::string> check_slice(const std::vector<SliceOp>& slice) {
  if (slice.empty()) return "empty slice";
  if (slice.size() > kMaxSliceOps) return "slice longer than 16 ops";
  if (slice.back().kind != OpKind::LOAD) return "final op is not the load";
  std::bitset<kNumTempRegs> defined;
  for (const SliceOp& s : slice) {
    if (s.kind == OpKind::STORE || s.kind == OpKind::BR || s.kind == OpKind::JMP || s.kind == OpKind::HALT)
      return "illegal op kind " + std::string(to_string(s.kind));
    for (const SliceSrc* p : {&s.a, &s.b, &s.base, &s.index}) {
      if (p->kind == SliceSrc::Kind::temp && (!p->reg.is_temp() || !defined.test(p->reg.id - kNumArchRegs)))
        return "temporary read before write";
      if (p->kind == SliceSrc::Kind::live && !p->reg.is_arch()) return "live read of a non-architectural register";
    }
    if (!s.dest.is_temp()) return "destination is not a temporary";
    defined.set(s.dest.id - kNumArchRegs);
  }
  return std::nullopt;
}

namespace {
std::string src_text(const SliceSrc& s) {
  switch (s.kind) {
    case SliceSrc::Kind::live:
    case SliceSrc::Kind::temp: return to_string(s.reg);
    case SliceSrc::Kind::imm: return std::to_string(s.imm);
    case SliceSrc::Kind::none: break;
  }
  return "?";
}
}  // namespace

std::string format_slice_op(const SliceOp& s) {
  std::string out = hex(s.origin_ip) + ": " + std::string(to_string(s.kind)) + " " + to_string(s.dest);
  if (s.kind == OpKind::LOAD) {
    out += " | [" + src_text(s.base);
    if (s.index.kind != SliceSrc::Kind::none) out += " + " + src_text(s.index) + "*" + std::to_string(s.scale);
    if (s.disp > 0) out += " + " + std::to_string(s.disp);
    if (s.disp < 0) out += " - " + std::to_string(-static_cast<std::uint64_t>(s.disp));
    out += "]";
  } else {
    out += ", " + src_text(s.a);
    if (s.b.kind != SliceSrc::Kind::none) out += ", " + src_text(s.b);
  }
  if (s.lookahead_scaled) out += "  # stride x L";
  else if (s.annotation.kind == Annotation::Kind::constant) out += "  # const";
  return out;
}

std::string format_slice(const std::vector<SliceOp>& slice) {
  std::string out;
  for (const SliceOp& s : slice) out += format_slice_op(s) + "\n";
  return out;
}

}  // namespace sempf
