#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sempf/feedback.hpp"
#include "sempf/injector.hpp"
#include "sempf/memsys.hpp"
#include "sempf/workloads.hpp"

namespace sempf {

enum class PrefetcherKind : std::uint8_t { none, nextline, stride, semantic };

std::string_view to_string(PrefetcherKind k);
std::optional<PrefetcherKind> parse_prefetcher(std::string_view s);

struct SemanticConfig {
  int context_bits = 24;
  int walkers = 2;
  int validation_rounds = 3;
  int loop_unroll = 1;
  std::size_t history = 128;
  std::size_t pie_entries = 16;
  double usefulness_threshold = 0.10;
  int stale_resets = 25;
  Cycle timeout = 100'000;
  InjectionMode mode = InjectionMode::dedicated;
  std::uint64_t hot_window = 10'000;
};

struct RunConfig {
  WorkloadSpec workload;
  PrefetcherKind prefetcher = PrefetcherKind::semantic;
  CacheConfig cache;
  SemanticConfig semantic;
  std::size_t queue = 64;
  LookaheadPolicy policy = LookaheadPolicy::dynamic_from_1;
  int stride_degree = 3;
  std::uint64_t warmup = 0;        // retired ops before stats are cleared
  std::uint64_t measure = 5'000'000;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument describing the first bad knob.
  void check() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// `key=value` lines, `#` comments, blank lines ignored. Unknown keys are errors.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

// Applies one setting; throws std::invalid_argument on unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// Every knob as (key, value) in a fixed order; parse_config of this text round-trips.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

}  // namespace sempf
