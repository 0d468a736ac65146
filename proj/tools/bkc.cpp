// Command-line front end: sweep | analytic | collapse | figures | fourpoint.

#include "bkc/cli/commands.hpp"
#include "bkc/cli/config.hpp"
#include "bkc/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    using namespace bkc::cli;

    CLI::App app{"Gaussian quench simulator for the bosonic Kitaev chain"};
    app.require_subcommand(1, 1);
    // Global options may follow the subcommand.
    app.fallthrough();

    std::string config_path;
    int jobs = 0;
    std::string out_dir;
    double nu = 0.0;
    int site = 0;
    std::string cut;
    std::vector<std::string> sets;
    std::vector<std::string> inputs;
    std::vector<std::string> figures;
    bool svg = false;

    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--nu", nu, "scaling exponent for collapse")->check(CLI::PositiveNumber);
    app.add_option("--site", site, "site for single-site runs (1-based)");
    app.add_option("--cut", cut, "subsystem: site, quarter or page");
    app.add_option("--set", sets, "override a config key, e.g. --set g=0,0.3");
    app.add_flag("--svg", svg, "also render SVG plots");

    app.add_subcommand("sweep", "time-averaged entropies over the (g, N) grid");
    app.add_subcommand("analytic", "closed-form predictions on the same grid");
    app.add_subcommand("collapse", "rescale sweep CSVs and score the data collapse");
    app.add_subcommand("figures", "Page curves, profiles, eps4 and log-correction tables");
    app.add_subcommand("fourpoint", "selection sums and the four-point discrepancy");
    app.get_subcommand("collapse")->add_option("inputs", inputs, "sweep CSV files");
    app.get_subcommand("figures")->add_option("figures", figures, "page, profiles, eps4, logcorr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    RunConfig cfg = default_config();
    try {
        if (!config_path.empty())
            load_config_file(cfg, config_path);
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw bkc::ConfigError("--set expects key=value, got '" + s + "'");
            apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        if (jobs > 0)
            cfg.jobs = jobs;
        if (!out_dir.empty())
            cfg.out_dir = out_dir;
        if (nu > 0.0)
            cfg.nu = nu;
        if (site > 0)
            cfg.site = site;
        if (!cut.empty())
            cfg.cut = parse_cut(cut);
        if (!inputs.empty())
            cfg.inputs = inputs;
        if (!figures.empty())
            cfg.figures = figures;
        if (svg)
            cfg.svg = true;
        apply_environment(cfg);
    } catch (const bkc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return run_command(app.get_subcommands().front()->get_name(), cfg, std::cerr);
}
