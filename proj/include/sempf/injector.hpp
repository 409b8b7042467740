#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sempf/isa.hpp"
#include "sempf/memsys.hpp"
#include "sempf/pie.hpp"
#include "sempf/slicer.hpp"

namespace sempf {

enum class InjectionMode : std::uint8_t { dedicated, shared };

std::string_view to_string(InjectionMode m);
std::optional<InjectionMode> parse_injection_mode(std::string_view s);

struct InjectionResult {
  Addr prefetch_addr = 0;
  std::size_t ops_executed = 0;
  Cycle cost_cycles = 0;
  Cycle issue_time = 0;  // when the final address is known, after interior loads
  std::array<std::uint64_t, kNumTempRegs> temps_final{};
};

// Armed PIE whose tag matches, else nullptr.
Pie* try_trigger(const ContextKey& key, PieArray& pies);

Cycle injection_cost(std::size_t ops_executed, InjectionMode mode);

// Runs the slice on a private temporary file. Live sources read `state`;
// interior loads read `state.mem` and, when `hier` is given, probe it as
// prefetches issued once their sources are ready. Never writes `state`.
InjectionResult execute_slice(const std::vector<SliceOp>& slice, const ArchState& state, int lookahead,
                              MemoryHierarchy* hier, Cycle now, InjectionMode mode = InjectionMode::dedicated);

}  // namespace sempf
