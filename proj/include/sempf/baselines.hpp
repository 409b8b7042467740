#pragma once

#include <cstdint>
#include <vector>

#include "sempf/isa.hpp"

namespace sempf {

inline constexpr Addr next_line(Addr addr) { return addr + 64; }

struct StrideEntry {
  Addr ip = 0;
  bool valid = false;
  Addr last_addr = 0;
  std::int64_t last_delta = 0;
  int confidence = 0;  // 0..3
};

// IP-indexed reference prediction table, direct mapped.
class StridePrefetcher {
 public:
  explicit StridePrefetcher(int degree = 3, std::size_t entries = 256);

  std::vector<Addr> observe_and_issue(Addr ip, Addr addr);
  const StrideEntry* entry(Addr ip) const;
  int degree() const { return degree_; }

 private:
  int degree_;
  std::vector<StrideEntry> table_;
};

}  // namespace sempf
