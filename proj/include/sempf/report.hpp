#pragma once

#include <string>

#include "json.hpp"
#include "sempf/simulator.hpp"

namespace sempf {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json make_report(const Simulator& sim);
// Two-space indented JSON with sorted keys and a trailing newline.
std::string render_report(const nlohmann::json& report);
std::string pie_table_csv(const Simulator& sim);

// Text listing of armed slices with their generation drafts.
std::string dump_slices(const Simulator& sim);

// Side-by-side report; throws std::invalid_argument if the runs used
// different workloads.
nlohmann::json compare_reports(const std::vector<nlohmann::json>& reports);

}  // namespace sempf
