#include "sempf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace sempf {

std::string_view to_string(PrefetcherKind k) {
  switch (k) {
    case PrefetcherKind::none: return "none";
    case PrefetcherKind::nextline: return "nextline";
    case PrefetcherKind::stride: return "stride";
    case PrefetcherKind::semantic: return "semantic";
  }
  return "?";
}

std::optional<PrefetcherKind> parse_prefetcher(std::string_view s) {
  for (auto k : {PrefetcherKind::none, PrefetcherKind::nextline, PrefetcherKind::stride, PrefetcherKind::semantic})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(std::string_view v) {
  std::string s;
  for (char c : v)
    if (c != '_') s += c;
  int base = 10;
  std::string_view body = s;
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    base = 16;
    body.remove_prefix(2);
  }
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), out, base);
  if (ec != std::errc{} || p != body.data() + body.size() || body.empty())
    throw std::invalid_argument("expected an unsigned integer, got '" + std::string(v) + "'");
  return out;
}

int to_int(std::string_view v) {
  const std::uint64_t x = to_u64(v);
  if (x > 1'000'000'000) throw std::invalid_argument("value out of range: '" + std::string(v) + "'");
  return static_cast<int>(x);
}

double to_double(std::string_view v) {
  std::size_t used = 0;
  const std::string s(v);
  double d = 0;
  try {
    d = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::invalid_argument("expected a number, got '" + s + "'");
  return d;
}

struct Knob {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

Knob u64_knob(std::string key, std::function<std::uint64_t&(RunConfig&)> ref) {
  return {std::move(key), [ref](RunConfig& c, std::string_view v) { ref(c) = to_u64(v); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Knob size_knob(std::string key, std::function<std::size_t&(RunConfig&)> ref) {
  return {std::move(key), [ref](RunConfig& c, std::string_view v) { ref(c) = static_cast<std::size_t>(to_u64(v)); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Knob int_knob(std::string key, std::function<int&(RunConfig&)> ref) {
  return {std::move(key), [ref](RunConfig& c, std::string_view v) { ref(c) = to_int(v); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Knob u32_knob(std::string key, std::function<std::uint32_t&(RunConfig&)> ref) {
  return {std::move(key), [ref](RunConfig& c, std::string_view v) { ref(c) = static_cast<std::uint32_t>(to_int(v)); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

std::string fmt_double(double d) {
  std::ostringstream os;
  os << d;
  return os.str();
}

const std::vector<Knob>& knobs() {
  static const std::vector<Knob> table = [] {
    std::vector<Knob> k;
    k.push_back({"workload.kind",
                 [](RunConfig& c, std::string_view v) {
                   auto w = parse_workload_kind(v);
                   if (!w) throw std::invalid_argument("unknown workload '" + std::string(v) + "'");
                   c.workload.kind = *w;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.workload.kind)); }});
    k.push_back(u64_knob("workload.size", [](RunConfig& c) -> auto& { return c.workload.size; }));
    k.push_back(u64_knob("workload.stride", [](RunConfig& c) -> auto& { return c.workload.stride; }));
    k.push_back(u64_knob("workload.spacing", [](RunConfig& c) -> auto& { return c.workload.spacing; }));
    k.push_back(u64_knob("workload.table", [](RunConfig& c) -> auto& { return c.workload.table; }));
    k.push_back(u64_knob("workload.passes", [](RunConfig& c) -> auto& { return c.workload.passes; }));
    k.push_back(u64_knob("workload.degree_min", [](RunConfig& c) -> auto& { return c.workload.degree_min; }));
    k.push_back(u64_knob("workload.degree_max", [](RunConfig& c) -> auto& { return c.workload.degree_max; }));
    k.push_back(u64_knob("workload.inner", [](RunConfig& c) -> auto& { return c.workload.inner; }));
    k.push_back({"workload.program",
                 [](RunConfig& c, std::string_view v) { c.workload.program_path = std::string(v); },
                 [](const RunConfig& c) { return c.workload.program_path; }});
    k.push_back({"prefetcher",
                 [](RunConfig& c, std::string_view v) {
                   auto p = parse_prefetcher(v);
                   if (!p) throw std::invalid_argument("unknown prefetcher '" + std::string(v) + "'");
                   c.prefetcher = *p;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.prefetcher)); }});
    const std::pair<const char*, LevelConfig CacheConfig::*> levels[] = {
        {"l1", &CacheConfig::l1}, {"l2", &CacheConfig::l2}, {"l3", &CacheConfig::l3}};
    for (const auto& [name, member] : levels) {
      const std::string p = std::string("cache.") + name;
      k.push_back(u64_knob(p + ".size", [m = member](RunConfig& c) -> auto& { return (c.cache.*m).size; }));
      k.push_back(u32_knob(p + ".assoc", [m = member](RunConfig& c) -> auto& { return (c.cache.*m).assoc; }));
      k.push_back(u64_knob(p + ".latency", [m = member](RunConfig& c) -> auto& { return (c.cache.*m).latency; }));
    }
    k.push_back(u64_knob("cache.mem.latency", [](RunConfig& c) -> auto& { return c.cache.mem_latency; }));
    k.push_back(int_knob("semantic.context_bits", [](RunConfig& c) -> auto& { return c.semantic.context_bits; }));
    k.push_back(int_knob("semantic.walkers", [](RunConfig& c) -> auto& { return c.semantic.walkers; }));
    k.push_back(
        int_knob("semantic.validation_rounds", [](RunConfig& c) -> auto& { return c.semantic.validation_rounds; }));
    k.push_back(int_knob("semantic.loop_unroll", [](RunConfig& c) -> auto& { return c.semantic.loop_unroll; }));
    k.push_back(size_knob("semantic.history", [](RunConfig& c) -> auto& { return c.semantic.history; }));
    k.push_back(size_knob("semantic.pie_entries", [](RunConfig& c) -> auto& { return c.semantic.pie_entries; }));
    k.push_back({"semantic.usefulness_threshold",
                 [](RunConfig& c, std::string_view v) { c.semantic.usefulness_threshold = to_double(v); },
                 [](const RunConfig& c) { return fmt_double(c.semantic.usefulness_threshold); }});
    k.push_back(int_knob("semantic.stale_resets", [](RunConfig& c) -> auto& { return c.semantic.stale_resets; }));
    k.push_back(u64_knob("semantic.timeout", [](RunConfig& c) -> auto& { return c.semantic.timeout; }));
    k.push_back({"semantic.mode",
                 [](RunConfig& c, std::string_view v) {
                   auto m = parse_injection_mode(v);
                   if (!m) throw std::invalid_argument("unknown injection mode '" + std::string(v) + "'");
                   c.semantic.mode = *m;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.semantic.mode)); }});
    k.push_back(u64_knob("semantic.hot_window", [](RunConfig& c) -> auto& { return c.semantic.hot_window; }));
    k.push_back(size_knob("feedback.queue", [](RunConfig& c) -> auto& { return c.queue; }));
    k.push_back({"feedback.policy",
                 [](RunConfig& c, std::string_view v) {
                   auto p = parse_policy(v);
                   if (!p) throw std::invalid_argument("unknown lookahead policy '" + std::string(v) + "'");
                   c.policy = *p;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.policy)); }});
    k.push_back(int_knob("baseline.stride.degree", [](RunConfig& c) -> auto& { return c.stride_degree; }));
    k.push_back(u64_knob("run.warmup", [](RunConfig& c) -> auto& { return c.warmup; }));
    k.push_back(u64_knob("run.measure", [](RunConfig& c) -> auto& { return c.measure; }));
    k.push_back({"seed",
                 [](RunConfig& c, std::string_view v) {
                   c.seed = to_u64(v);
                   c.workload.seed = c.seed;
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    return k;
  }();
  return table;
}

}  // namespace

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const Knob& k : knobs()) {
    if (k.key == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("unknown key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Knob& k : knobs()) out.emplace_back(k.key, k.get(cfg));
  return out;
}

void RunConfig::check() const {
  cache.check();
  auto fail = [](const std::string& s) { throw std::invalid_argument(s); };
  if (measure == 0) fail("run.measure must be positive");
  if (semantic.context_bits < 0 || semantic.context_bits > 24) fail("semantic.context_bits must be in 0..24");
  if (semantic.walkers < 1) fail("semantic.walkers must be at least 1");
  if (semantic.validation_rounds < 1 || semantic.validation_rounds > 7)
    fail("semantic.validation_rounds must be in 1..7");
  if (semantic.loop_unroll < 1 || semantic.loop_unroll > 4) fail("semantic.loop_unroll must be in 1..4");
  if (semantic.history < 2) fail("semantic.history must be at least 2");
  if (semantic.pie_entries == 0 || (semantic.pie_entries & (semantic.pie_entries - 1)) != 0)
    fail("semantic.pie_entries must be a power of two");
  if (semantic.usefulness_threshold < 0 || semantic.usefulness_threshold > 1)
    fail("semantic.usefulness_threshold must be in [0,1]");
  if (semantic.stale_resets < 0) fail("semantic.stale_resets must be non-negative");
  if (queue == 0) fail("feedback.queue must be positive");
  if (stride_degree < 1 || stride_degree > 16) fail("baseline.stride.degree must be in 1..16");
  if (workload.kind == WorkloadKind::file && workload.program_path.empty())
    fail("workload.kind=file needs workload.program");
}

RunConfig parse_config(std::string_view text, RunConfig cfg) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected key=value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    try {
      apply_setting(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace sempf
