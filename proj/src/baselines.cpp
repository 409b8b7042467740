#include "sempf/baselines.hpp"

#include <stdexcept>

namespace sempf {

StridePrefetcher::StridePrefetcher(int degree, std::size_t entries) : degree_(degree), table_(entries) {
  if (degree < 0 || entries == 0) throw std::invalid_argument("bad stride prefetcher geometry");
}

const StrideEntry* StridePrefetcher::entry(Addr ip) const {
  const StrideEntry& e = table_[ip % table_.size()];
  return e.valid && e.ip == ip ? &e : nullptr;
}

std::vector<Addr> StridePrefetcher::observe_and_issue(Addr ip, Addr addr) {
  StrideEntry& e = table_[ip % table_.size()];
  if (!e.valid || e.ip != ip) {
    e = StrideEntry{ip, true, addr, 0, 0};
    return {};
  }
  const auto delta = static_cast<std::int64_t>(addr - e.last_addr);
  if (delta != 0 && delta == e.last_delta) {
    if (e.confidence < 3) ++e.confidence;
  } else {
    e.last_delta = delta;
    e.confidence = delta != 0 ? 1 : 0;
  }
  e.last_addr = addr;

  std::vector<Addr> out;
  if (e.confidence >= 2)
    for (int k = 1; k <= degree_; ++k) out.push_back(addr + static_cast<Addr>(e.last_delta * k));
  return out;
}

}  // namespace sempf
