#pragma once

#include "bkc/cli/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bkc::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitNonConvergence = 2,
    kExitConfig = 3,
    kExitNumerical = 4,
};

// One row of the sweep / analytic schema.
struct SweepRow {
    double g = 0.0;
    int n_sites = 0;
    std::string subsystem;  // "site:j", "quarter:l" or "left:l"
    double mean = 0.0;
    double std_error = 0.0;
    int n_samples = 0;
};

inline constexpr const char* kSweepHeader = "g,N,subsystem,S_mean,stderr,n_samples";

std::string format_double(double v);
std::string format_row(const SweepRow& row);
std::vector<SweepRow> read_sweep_csv(const std::string& path);
void write_sweep_csv(const std::string& path, std::vector<SweepRow> rows);

int cmd_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_analytic(const RunConfig& cfg, std::ostream& log);
int cmd_collapse(const RunConfig& cfg, std::ostream& log);
int cmd_figures(const RunConfig& cfg, std::ostream& log);
int cmd_fourpoint(const RunConfig& cfg, std::ostream& log);

// Dispatches by name and maps library errors onto exit codes.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log);

}  // namespace bkc::cli
