#include "sempf/report.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sempf/program_text.hpp"

namespace sempf {

using nlohmann::json;

namespace {

json counters(const CounterGroup& g) { return {{"accesses", g.accesses}, {"hits", g.hits}, {"misses", g.misses}}; }

double ratio(std::uint64_t a, std::uint64_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

std::uint64_t cause(const std::array<std::uint64_t, kNumResetCauses>& h, ResetCause c) {
  return h[static_cast<std::size_t>(c)];
}

json cause_groups(const std::array<std::uint64_t, kNumResetCauses>& h) {
  using C = ResetCause;
  json detail = json::object();
  for (std::size_t i = 0; i < kNumResetCauses; ++i) detail[std::string(to_string(static_cast<C>(i)))] = h[i];
  return {
      {"hash_collision", cause(h, C::hash_collision)},
      {"code_flow_variance", cause(h, C::inconsistent)},
      {"timeout", cause(h, C::timeout)},
      {"too_many_failures", cause(h, C::low_usefulness) + cause(h, C::repeated_address)},
      {"other", cause(h, C::too_long) + cause(h, C::complex_instruction) + cause(h, C::too_many_temps)},
      {"detail", detail},
  };
}

json slice_json(const std::vector<SliceOp>& slice) {
  json a = json::array();
  for (const SliceOp& op : slice) a.push_back(format_slice_op(op));
  return a;
}

}  // namespace

json make_report(const Simulator& sim) {
  const RunConfig& cfg = sim.config();
  const SimStats& st = sim.stats();
  const CacheStats& cs = sim.caches().stats();
  const PieArray& pies = sim.pies();
  const std::uint64_t retired = sim.measured_retired();

  json config = json::object();
  for (const auto& [k, v] : config_entries(cfg)) config[k] = v;

  json cache = json::object();
  const char* level_names[] = {"l1", "l2", "l3"};
  const char* kind_names[] = {"demand_load", "demand_store", "prefetch"};
  for (int l = 0; l < 3; ++l) {
    json lv = json::object();
    for (int k = 0; k < 3; ++k) lv[kind_names[k]] = counters(cs.at(l, static_cast<AccessKind>(k)));
    cache[level_names[l]] = lv;
  }
  cache["covered"] = cs.covered;
  cache["late"] = cs.late;
  cache["prefetch_fills"] = cs.prefetch_fills;
  cache["prefetch_unused_evictions"] = cs.prefetch_unused_evictions;

  json pie_rows = json::array();
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < pies.size(); ++i) {
    const Pie& p = pies.at(i);
    if (p.valid && p.state == PieState::Armed) sizes.push_back(p.slice.size());
    pie_rows.push_back({
        {"index", i},
        {"valid", p.valid},
        {"ip", p.tag.ip},
        {"bhr", p.tag.bhr},
        {"state", p.valid ? std::string(to_string(p.state)) : std::string("Empty")},
        {"lookahead", p.lookahead},
        {"sent", p.sent},
        {"useless", p.useless},
        {"resets", p.resets},
        {"injections", p.injections},
        {"prefetches", p.prefetches},
        {"hits", p.hits},
        {"hit_depth_ewma", p.hit_depth_ewma},
        {"slice", slice_json(p.slice)},
    });
  }

  json per_ip = json::array();
  for (const auto& [ip, s] : st.per_ip) {
    per_ip.push_back({
        {"ip", ip},
        {"accesses", s.accesses},
        {"misses", s.misses},
        {"covered", s.covered},
        {"late", s.late},
        {"coverage", s.coverage()},
        {"pf_sent", s.pf_sent},
        {"pf_useful", s.pf_useful},
        {"accuracy", s.accuracy()},
    });
  }

  const Oracle& o = sim.workload().oracle;
  json critical = {{"ip", o.critical_ip}, {"accesses", 0}, {"misses", 0}, {"coverage", 0.0}};
  if (auto it = st.per_ip.find(o.critical_ip); it != st.per_ip.end()) {
    critical["accesses"] = it->second.accesses;
    critical["misses"] = it->second.misses;
    critical["coverage"] = it->second.coverage();
  }

  const double mean_size =
      sizes.empty() ? 0.0 : static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0})) /
                                static_cast<double>(sizes.size());

  json r = {
      {"schema_version", kReportSchemaVersion},
      {"config", config},
      {"workload",
       {{"kind", std::string(to_string(cfg.workload.kind))},
        {"ops", sim.program().size()},
        {"critical", critical}}},
      {"prefetcher", std::string(to_string(cfg.prefetcher))},
      {"retired", retired},
      {"cycles", sim.measured_cycles()},
      {"halted", sim.state().halted},
      {"cache", cache},
      {"mpki", mpki(cs, retired)},
      {"coverage", coverage(cs)},
      {"accuracy", st.accuracy()},
      {"prefetches",
       {{"issued", st.pf_issued},
        {"useful", st.pf_useful},
        {"useless", st.pf_useless},
        {"filtered", st.pf_filtered},
        {"repeat_drops", st.pf_repeat_drops}}},
      {"timeliness", {{"hit_depth_histogram", st.hit_depth}, {"late_hits", st.late_hits}}},
      {"injection",
       {{"injections", st.injections},
        {"injected_ops", st.injected_ops},
        {"injected_op_ratio", ratio(st.injected_ops, st.injected_ops + retired)},
        {"cycles", st.injection_cycles},
        {"mode", std::string(to_string(cfg.semantic.mode))}}},
      {"oracle",
       {{"checks", st.oracle_checks},
        {"matches", st.oracle_matches},
        {"match_rate", ratio(st.oracle_matches, st.oracle_checks)}}},
      {"walkers",
       {{"walks", st.walks},
        {"dropped", st.walks_dropped},
        {"busy_cycles", st.walk_busy_cycles},
        {"busy_fraction", ratio(st.walk_busy_cycles, sim.measured_cycles())}}},
      {"pies", pie_rows},
      {"reset_causes", cause_groups(pies.cause_histogram())},
      {"disabled_pies", pies.disabled_count()},
      {"validation_failures", st.validation_failures},
      {"starved_contexts", pies.starved_contexts()},
      {"armed_slices", {{"count", sizes.size()}, {"sizes", sizes}, {"mean_size", mean_size}}},
      {"per_ip", per_ip},
  };
  return r;
}

std::string render_report(const json& report) { return report.dump(2) + "\n"; }

std::string pie_table_csv(const Simulator& sim) {
  std::ostringstream os;
  os << "index,ip,bhr,state,lookahead,sent,useless,resets,injections,prefetches,hits,slice_ops\n";
  const PieArray& pies = sim.pies();
  for (std::size_t i = 0; i < pies.size(); ++i) {
    const Pie& p = pies.at(i);
    os << i << ',' << hex(p.tag.ip) << ',' << hex(p.tag.bhr) << ','
       << (p.valid ? to_string(p.state) : std::string_view("Empty")) << ',' << p.lookahead << ',' << p.sent << ','
       << p.useless << ',' << p.resets << ',' << p.injections << ',' << p.prefetches << ',' << p.hits << ','
       << p.slice.size() << '\n';
  }
  return os.str();
}

std::string dump_slices(const Simulator& sim) {
  std::ostringstream os;
  const PieArray& pies = sim.pies();
  std::size_t armed = 0;
  for (std::size_t i = 0; i < pies.size(); ++i) {
    const Pie& p = pies.at(i);
    if (!p.valid || p.state != PieState::Armed) continue;
    ++armed;
    os << "# pie " << i << " load " << hex(p.tag.ip) << " bhr " << hex(p.tag.bhr) << " L=" << p.lookahead << " ops "
       << p.slice.size() << "\n";
    os << "# draft:\n";
    for (const MicroOp& m : p.generation_ops) os << "#   " << format_op(m) << "\n";
    os << format_slice(p.slice);
  }
  os << "# armed slices: " << armed << "\n";
  return os.str();
}

json compare_reports(const std::vector<json>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("compare needs at least two reports");
  auto same_run = [](const json& a, const json& b) {
    for (const auto& [k, v] : a.at("config").items()) {
      const bool relevant = k.rfind("workload.", 0) == 0 || k.rfind("run.", 0) == 0 || k == "seed";
      if (relevant && b.at("config").value(k, json()) != v) return false;
    }
    return true;
  };
  const json& base = reports.front();
  json runs = json::array();
  for (const json& r : reports) {
    if (!same_run(base, r)) throw std::invalid_argument("reports were produced from different workloads");
    const double cycles = r.at("cycles").get<double>();
    const double base_cycles = base.at("cycles").get<double>();
    runs.push_back({
        {"prefetcher", r.at("prefetcher")},
        {"cycles", r.at("cycles")},
        {"cycle_ratio", base_cycles == 0 ? 0.0 : cycles / base_cycles},
        {"mpki", r.at("mpki")},
        {"coverage", r.at("coverage")},
        {"accuracy", r.at("accuracy")},
        {"injected_op_ratio", r.at("injection").at("injected_op_ratio")},
    });
  }
  return {{"schema_version", kReportSchemaVersion},
          {"workload", base.at("workload").at("kind")},
          {"baseline", base.at("prefetcher")},
          {"runs", runs}};
}

}  // namespace sempf
