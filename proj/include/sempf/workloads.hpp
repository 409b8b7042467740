#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sempf/isa.hpp"
#include "sempf/program_text.hpp"

namespace sempf {

enum class WorkloadKind : std::uint8_t { stride, indirect, linked_list, bfs_csr, double_deref_fig6, nested_two_phase, file };

std::string_view to_string(WorkloadKind k);
std::optional<WorkloadKind> parse_workload_kind(std::string_view s);

// Unused fields are ignored by generators that do not need them; zero means
// "use the generator's default".
struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::stride;
  std::uint64_t size = 0;        // elements / nodes / vertices / outer iterations
  std::uint64_t stride = 64;     // bytes per step (stride)
  std::uint64_t spacing = 8;     // element spacing of the gathered array (indirect)
  std::uint64_t table = 0;       // gathered array length (indirect)
  std::uint64_t passes = 0;
  std::uint64_t degree_min = 6;  // bfs_csr
  std::uint64_t degree_max = 8;
  std::uint64_t inner = 2;       // nested_two_phase inner trip count
  std::uint64_t seed = 1;
  std::string program_path;      // kind=file
};

struct SliceShape {
  std::size_t loads = 0;  // dependent load chain depth, critical load included
  std::size_t alu = 0;
  bool operator==(const SliceShape&) const = default;
};

// Analytic description of the critical load, built from the layout alone.
struct Oracle {
  Addr critical_ip = 0;
  bool has_stream = false;
  std::vector<Addr> stream;       // demand address of the critical load per dynamic instance
  bool lookahead_scaled = true;   // false: the slice advances one instance regardless of L
  bool single_context = true;     // false: instances interleave several contexts, no future address
  std::optional<SliceShape> shape;
  std::uint64_t unique_lines = 0; // distinct lines the critical load touches

  std::optional<Addr> future_address(std::size_t i, int lookahead) const;
};

struct Workload {
  WorkloadSpec spec;
  ProgramImage image;
  Oracle oracle;
};

// Throws std::invalid_argument on bad sizes.
Workload generate(const WorkloadSpec& spec);

enum class OracleVerdict { match, mismatch, not_applicable };

OracleVerdict oracle_check(const Oracle& oracle, Addr prefetch_addr, Addr load_ip, std::size_t instance, int lookahead);

}  // namespace sempf
