#include "bkc/analytics.hpp"
#include "bkc/cli/commands.hpp"
#include "bkc/cli/config.hpp"
#include "bkc/cli/svg.hpp"
#include "bkc/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bkc;
using namespace bkc::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("bkc_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config(const fs::path& out) {
    RunConfig cfg = default_config();
    cfg.g_list = {0.0, 0.25, 0.3};
    cfg.n_list = {8};
    cfg.cut = CutKind::Site;
    cfg.out_dir = out.string();
    cfg.max_samples = 200000;
    return cfg;
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(BKC_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("default configuration") {
    const RunConfig cfg = default_config();
    CHECK(cfg.w == 1.0);
    CHECK(cfg.delta == 0.25);
    CHECK(cfg.g_list == std::vector<double>{0, 0.2, 0.24, 0.245, 0.249, 0.25, 0.251, 0.255, 0.26});
    CHECK(cfg.n_list == std::vector<int>{16, 32, 48, 64, 96, 128});
    CHECK(cfg.site == 1);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config text parsing") {
    RunConfig cfg = default_config();
    parse_config_text(cfg, "# comment\n w = 1.5\ndelta=0.3 # trailing\n g = 0, 0.1,0.35\nN = 8,12\n"
                           "cut = page\nsite = 2\nmax_samples = 5000\nout = results\njobs = 3\n");
    CHECK(cfg.w == 1.5);
    CHECK(cfg.delta == 0.3);
    CHECK(cfg.g_list == std::vector<double>{0, 0.1, 0.35});
    CHECK(cfg.n_list == std::vector<int>{8, 12});
    CHECK(cfg.cut == CutKind::Page);
    CHECK(cfg.site == 2);
    CHECK(cfg.max_samples == 5000);
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.jobs == 3);

    RunConfig back = default_config();
    parse_config_text(back, to_config_text(cfg));
    CHECK(to_config_text(back) == to_config_text(cfg));

    RunConfig bad = default_config();
    CHECK_THROWS_AS(parse_config_text(bad, "colour = blue\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(bad, "w = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(bad, "just words\n"), ConfigError);
    CHECK_THROWS_AS(apply_setting(bad, "N", "8,x"), ConfigError);
    CHECK_THROWS_AS(parse_cut("half"), ConfigError);
    CHECK_THROWS_AS(load_config_file(bad, "/nonexistent/bkc.cfg"), ConfigError);
}

TEST_CASE("config validation") {
    RunConfig cfg = default_config();
    cfg.g_list.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config();
    cfg.delta = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config();
    cfg.site = 17;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("environment override of the sample cap") {
    RunConfig cfg = default_config();
    ::setenv("BKC_MAX_SAMPLES", "4321", 1);
    apply_environment(cfg);
    CHECK(cfg.max_samples == 4321);
    CHECK(cfg.protocol_for(ModelParams(1.0, 0.0, 0.25, 16)).max_samples == 4321);
    ::setenv("BKC_MAX_SAMPLES", "many", 1);
    CHECK_THROWS_AS(apply_environment(cfg), ConfigError);
    ::unsetenv("BKC_MAX_SAMPLES");
    RunConfig untouched = default_config();
    apply_environment(untouched);
    CHECK_FALSE(untouched.max_samples.has_value());
}

TEST_CASE("csv formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_row({0.25, 16, "site:1", 1.5, 0.001, 1000}) ==
          "0.25,16,site:1,1.5,0.001,1000");
}

TEST_CASE("sweep output is deterministic and resumable") {
    const fs::path a = scratch("sweep_a"), b = scratch("sweep_b");
    std::ostringstream log;
    CHECK(cmd_sweep(small_config(a), log) == kExitOk);
    RunConfig cb = small_config(b);
    cb.jobs = 3;
    CHECK(cmd_sweep(cb, log) == kExitOk);
    const std::string text = slurp(a / "sweep.csv");
    CHECK(text == slurp(b / "sweep.csv"));
    CHECK(text.rfind(std::string(kSweepHeader) + "\n", 0) == 0);
    CHECK(read_sweep_csv((a / "sweep.csv").string()).size() == 3);

    // Drop a row and rerun: only the missing row is recomputed.
    std::istringstream lines(text);
    std::string header, r1, r2, r3;
    std::getline(lines, header);
    std::getline(lines, r1);
    std::getline(lines, r2);
    std::getline(lines, r3);
    {
        std::ofstream out(a / "sweep.csv", std::ios::binary);
        out << header << "\n" << r1 << "\n" << r3 << "\n";
    }
    CHECK(cmd_sweep(small_config(a), log) == kExitOk);
    CHECK(slurp(a / "sweep.csv") == text);
    const auto manifest = nlohmann::json::parse(slurp(a / "sweep.manifest.json"));
    CHECK(manifest["runs"].size() == 1);
    CHECK(manifest["version"] == kToolVersion);

    // The g = delta row is routed to the lab exponential.
    const auto full = nlohmann::json::parse(slurp(b / "sweep.manifest.json"));
    for (const auto& run : full["runs"]) {
        const bool critical = run["g"].get<double>() == 0.25;
        CHECK(run["propagation"] == (critical ? "lab-exponential" : "frame-exact"));
    }
}

TEST_CASE("sweep rows per cut kind") {
    const fs::path dir = scratch("cuts");
    std::ostringstream log;
    RunConfig cfg = small_config(dir);
    cfg.g_list = {0.3};
    cfg.cut = CutKind::Page;
    CHECK(cmd_sweep(cfg, log) == kExitOk);
    const auto rows = read_sweep_csv((dir / "sweep.csv").string());
    REQUIRE(rows.size() == 7);
    CHECK(rows.front().subsystem == "left:1");
    CHECK(rows.back().subsystem == "left:7");

    const fs::path q = scratch("quarter");
    cfg.out_dir = q.string();
    cfg.cut = CutKind::Quarter;
    CHECK(cmd_sweep(cfg, log) == kExitOk);
    const auto qrows = read_sweep_csv((q / "sweep.csv").string());
    REQUIRE(qrows.size() == 1);
    CHECK(qrows.front().subsystem == "quarter:2");
}

TEST_CASE("non-convergence keeps the partial csv and exits with 2") {
    const fs::path dir = scratch("nonconv");
    RunConfig cfg = small_config(dir);
    cfg.g_list = {0.0, 0.3};
    cfg.initial_samples = 10;
    cfg.batch = 5;
    cfg.max_samples = 20;
    cfg.rel_threshold = 1e-12;
    std::ostringstream log;
    CHECK(run_command("sweep", cfg, log) == kExitNonConvergence);
    CHECK(fs::exists(dir / "sweep.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "sweep.manifest.json"));
    for (const auto& run : manifest["runs"])
        CHECK(run["converged"] == false);
}

TEST_CASE("exit codes for configuration errors") {
    std::ostringstream log;
    RunConfig cfg = small_config(scratch("config_err"));
    cfg.n_list.clear();
    CHECK(run_command("sweep", cfg, log) == kExitConfig);
    CHECK(run_command("nonsense", small_config(scratch("config_err2")), log) == kExitConfig);

    RunConfig fig = small_config(scratch("fig_err"));
    fig.figures = {"fig99"};
    CHECK(run_command("figures", fig, log) == kExitConfig);
    RunConfig none = small_config(scratch("fig_none"));
    CHECK(run_command("figures", none, log) == kExitOk);
    CHECK_FALSE(fs::exists(fs::path(none.out_dir) / "figures.manifest.json"));
}

TEST_CASE("analytic predictions share the sweep schema") {
    const fs::path dir = scratch("analytic");
    RunConfig cfg = small_config(dir);
    cfg.n_list = {64};
    std::ostringstream log;
    CHECK(cmd_analytic(cfg, log) == kExitOk);
    const auto rows = read_sweep_csv((dir / "analytic.csv").string());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].g == 0.0);
    CHECK(rows[1].mean == doctest::Approx(std::log(64.0) + critical_s1_constant(ModelParams(1, 0.25, 0.25, 64))));
    CHECK(rows[2].mean == doctest::Approx(s1_prediction(ModelParams(1.0, 0.3, 0.25, 64))));
    const auto manifest = nlohmann::json::parse(slurp(dir / "analytic.manifest.json"));
    CHECK(manifest["rows"][1]["branch"] == "critical-expansion");
}

TEST_CASE("collapse command") {
    const fs::path dir = scratch("collapse");
    std::vector<SweepRow> rows;
    for (int n : {16, 32})
        for (double g : {0.2, 0.25, 0.3})
            rows.push_back({g, n, "site:1", std::log(n) - (g * g - 0.0625) * n * n / 15.0, 0.0, 1000});
    write_sweep_csv((dir / "in.csv").string(), rows);
    RunConfig cfg = small_config(dir);
    cfg.inputs = {(dir / "in.csv").string()};
    cfg.nu = 0.5;
    std::ostringstream log;
    CHECK(cmd_collapse(cfg, log) == kExitOk);
    const auto manifest = nlohmann::json::parse(slurp(dir / "collapse.manifest.json"));
    CHECK(manifest["quality"]["site"]["quality"].get<double>() < 1e-20);
    CHECK(manifest["quality"]["site"]["quality_nu_1"].get<double>() > 0.0);
    CHECK(slurp(dir / "collapse.csv").rfind("mode,g,N,x,y\n", 0) == 0);

    rows.erase(rows.begin() + 1);  // N = 16 reference
    write_sweep_csv((dir / "in.csv").string(), rows);
    CHECK(run_command("collapse", cfg, log) == kExitConfig);
}

TEST_CASE("figures and fourpoint outputs") {
    const fs::path dir = scratch("figures");
    RunConfig cfg = small_config(dir);
    cfg.g_list = {0.1, 0.3};
    cfg.figures = {"page", "profiles", "eps4"};
    cfg.svg = true;
    std::ostringstream log;
    CHECK(cmd_figures(cfg, log) == kExitOk);
    CHECK(fs::exists(dir / "page_N8.csv"));
    CHECK(fs::exists(dir / "page_N8.svg"));
    CHECK(fs::exists(dir / "profiles_N8_g0.1.csv"));
    CHECK(fs::exists(dir / "eps4.csv"));
    CHECK(fs::exists(dir / "figures.manifest.json"));
    // Only the non-reciprocal g enters the four-point table.
    const std::string eps = slurp(dir / "eps4.csv");
    CHECK(std::count(eps.begin(), eps.end(), '\n') == 2);

    CHECK(cmd_fourpoint(cfg, log) == kExitOk);
    CHECK(slurp(dir / "fourpoint.csv") == eps);
}

TEST_CASE("svg rendering") {
    const std::string svg =
        render_svg({"t", "x", "y", true, true, {{"a", {1, 10, 100}, {1, 2, 0}}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("command-line tool") {
    CHECK(run_tool("--help") == 0);
    CHECK(run_tool("") != 0);
    CHECK(run_tool("sweep --set colour=blue") == kExitConfig);
    CHECK(run_tool("sweep --set N=") == kExitConfig);
    const fs::path dir = scratch("tool");
    CHECK(run_tool("sweep --out " + dir.string() + " --cut site --set g=0.3 --set N=8 --set max_samples=200000") == kExitOk);
    const auto rows = read_sweep_csv((dir / "sweep.csv").string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].subsystem == "site:1");
    CHECK(run_tool("figures --out " + dir.string()) == kExitOk);
}
