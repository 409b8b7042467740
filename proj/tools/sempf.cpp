// Command-line front end: run, compare, dump-slices, dump-program.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sempf/config.hpp"
#include "sempf/program_text.hpp"
#include "sempf/report.hpp"
#include "sempf/simulator.hpp"

namespace {

using namespace sempf;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string prefetcher;
  std::string workload;
  std::vector<std::string> sets;

  void add_to(CLI::App* app, bool with_prefetcher = true) {
    app->add_option("--config,-c", config, "key=value configuration file");
    app->add_option("--seed", seed, "layout seed");
    if (with_prefetcher) app->add_option("--prefetcher", prefetcher, "none|nextline|stride|semantic");
    app->add_option("--workload", workload, "workload kind");
    app->add_option("--set", sets, "extra key=value override, repeatable");
  }

  RunConfig build(const std::string& config_path) const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) apply_setting(cfg, "seed", std::to_string(*seed));
    if (!prefetcher.empty()) apply_setting(cfg, "prefetcher", prefetcher);
    if (!workload.empty()) apply_setting(cfg, "workload.kind", workload);
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
  }
  RunConfig build() const { return build(config); }
};

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic prefetcher simulator"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string run_out, run_csv;
  CLI::App* run = app.add_subcommand("run", "simulate one configuration and print a JSON report");
  run_args.add_to(run);
  run->add_option("--out,-o", run_out, "report path (default stdout)");
  run->add_option("--pie-csv", run_csv, "write the per-PIE table as CSV");

  CommonArgs cmp_args;
  std::vector<std::string> cmp_configs;
  std::string cmp_prefetchers, cmp_out;
  CLI::App* cmp = app.add_subcommand("compare", "run several prefetchers on one workload and compare cycles");
  cmp_args.add_to(cmp, false);
  cmp->add_option("configs", cmp_configs, "config files, one run each (first is the baseline)");
  cmp->add_option("--prefetchers", cmp_prefetchers, "comma-separated prefetchers applied to --config");
  cmp->add_option("--out,-o", cmp_out, "report path (default stdout)");

  CommonArgs dump_args;
  CLI::App* dump = app.add_subcommand("dump-slices", "simulate and print the armed slices");
  dump_args.add_to(dump);

  CommonArgs prog_args;
  CLI::App* prog = app.add_subcommand("dump-program", "print the generated program and memory image");
  prog_args.add_to(prog, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      Simulator sim(run_args.build());
      sim.run();
      write_out(run_out, render_report(make_report(sim)));
      if (!run_csv.empty()) write_out(run_csv, pie_table_csv(sim));
    } else if (*cmp) {
      std::vector<RunConfig> cfgs;
      if (!cmp_prefetchers.empty()) {
        std::stringstream ss(cmp_prefetchers);
        for (std::string p; std::getline(ss, p, ',');) {
          RunConfig c = cmp_args.build();
          apply_setting(c, "prefetcher", p);
          cfgs.push_back(c);
        }
      }
      for (const std::string& path : cmp_configs) cfgs.push_back(cmp_args.build(path));
      std::vector<nlohmann::json> reports;
      for (const RunConfig& c : cfgs) {
        Simulator sim(c);
        sim.run();
        reports.push_back(make_report(sim));
      }
      write_out(cmp_out, render_report(compare_reports(reports)));
    } else if (*dump) {
      Simulator sim(dump_args.build());
      sim.run();
      std::cout << dump_slices(sim);
    } else if (*prog) {
      const RunConfig cfg = prog_args.build();
      std::cout << format_program(generate(cfg.workload).image);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "simulation fault: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
