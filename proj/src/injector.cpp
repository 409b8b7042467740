#include "sempf/injector.hpp"

#include <algorithm>
#include <stdexcept>

namespace sempf {

std::string_view to_string(InjectionMode m) { return m == InjectionMode::dedicated ? "dedicated" : "shared"; }

std::optional<InjectionMode> parse_injection_mode(std::string_view s) {
  if (s == "dedicated") return InjectionMode::dedicated;
  if (s == "shared") return InjectionMode::shared;
  return std::nullopt;
}

Pie* try_trigger(const ContextKey& key, PieArray& pies) {
  Pie* p = pies.find(key);
  return p && p->state == PieState::Armed ? p : nullptr;
}

Cycle injection_cost(std::size_t ops_executed, InjectionMode mode) {
  return mode == InjectionMode::dedicated ? 1 : static_cast<Cycle>(ops_executed);
}

InjectionResult execute_slice(const std::vector<SliceOp>& slice, const ArchState& state, int lookahead,
                              MemoryHierarchy* hier, Cycle now, InjectionMode mode) {
  if (slice.empty() || slice.size() > kMaxSliceOps) throw std::logic_error("execute_slice: bad slice length");
  InjectionResult res;
  std::array<std::uint64_t, kNumTempRegs> t{};
  std::array<Cycle, kNumTempRegs> ready;
  ready.fill(now);

  auto temp_slot = [](Reg r) { return static_cast<std::size_t>(r.id - kNumArchRegs); };
  auto value = [&](const SliceSrc& s) -> std::uint64_t {
    switch (s.kind) {
      case SliceSrc::Kind::live: return state.reg(s.reg);
      case SliceSrc::Kind::temp: return t[temp_slot(s.reg)];
      case SliceSrc::Kind::imm: return static_cast<std::uint64_t>(s.imm);
      case SliceSrc::Kind::none: break;
    }
    return 0;
  };
  auto ready_of = [&](const SliceSrc& s) -> Cycle {
    return s.kind == SliceSrc::Kind::temp ? ready[temp_slot(s.reg)] : now;
  };

  for (std::size_t i = 0; i < slice.size(); ++i) {
    const SliceOp& op = slice[i];
    const bool final_op = i + 1 == slice.size();
    std::uint64_t v = 0;
    Cycle at = std::max(ready_of(op.a), ready_of(op.b));
    switch (op.kind) {
      case OpKind::MOV_IMM:
      case OpKind::MOV: v = value(op.a); break;
      case OpKind::LOAD: {
        const Addr addr = value(op.base) + value(op.index) * op.scale + static_cast<std::uint64_t>(op.disp);
        at = std::max(ready_of(op.base), ready_of(op.index));
        if (final_op) {
          res.prefetch_addr = addr;
          res.issue_time = at;
          v = addr;
          break;
        }
        v = state.mem.read64(addr);
        if (hier) {
          const AccessResult r = hier->access(addr, AccessKind::prefetch, at);
          at += r.latency;
        }
        break;
      }
      default:
        if (!is_alu(op.kind)) throw std::logic_error("execute_slice: illegal op");
        if (op.lookahead_scaled)
          v = value(op.a) + value(op.b) * static_cast<std::uint64_t>(lookahead);
        else
          v = alu_eval(op.kind, value(op.a), value(op.b));
        break;
    }
    if (!op.dest.is_temp()) throw std::logic_error("execute_slice: slice writes a non-temporary");
    t[temp_slot(op.dest)] = v;
    ready[temp_slot(op.dest)] = at;
  }
  res.ops_executed = slice.size();
  res.cost_cycles = injection_cost(res.ops_executed, mode);
  res.temps_final = t;
  return res;
}

}  // namespace sempf
