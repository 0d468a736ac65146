#include "bkc/cli/commands.hpp"

#include "bkc/analytics.hpp"
#include "bkc/cli/svg.hpp"
#include "bkc/dynamics.hpp"
#include "bkc/errors.hpp"
#include "bkc/fourpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace bkc::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs fn(i) for i in [0, n) on a pool of jobs threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(jobs, n); ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++)
                fn(i);
        });
    for (auto& th : pool)
        th.join();
}

struct Task {
    double g = 0.0;
    int n_sites = 0;
    Sites sites;
    std::string label;
};

std::vector<Task> build_tasks(const RunConfig& cfg) {
    std::vector<Task> tasks;
    for (int n : cfg.n_list) {
        for (double g : cfg.g_list) {
            switch (cfg.cut) {
            case CutKind::Site:
                tasks.push_back({g, n, Sites{cfg.site}, "site:" + std::to_string(cfg.site)});
                break;
            case CutKind::Quarter:
                tasks.push_back({g, n, left_cut(n / 4), "quarter:" + std::to_string(n / 4)});
                break;
            case CutKind::Page:
                for (int l = 1; l < n; ++l)
                    tasks.push_back({g, n, left_cut(l), "left:" + std::to_string(l)});
                break;
            }
        }
    }
    return tasks;
}

int label_size(const std::string& label) {
    const auto colon = label.find(':');
    return colon == std::string::npos ? 0 : std::atoi(label.c_str() + colon + 1);
}

std::string label_kind(const std::string& label) {
    return label.substr(0, label.find(':'));
}

bool same_key(const SweepRow& a, double g, int n, const std::string& label) {
    return a.n_sites == n && a.subsystem == label && std::abs(a.g - g) <= 1e-12;
}

json config_json(const RunConfig& cfg) {
    json j;
    j["w"] = cfg.w;
    j["delta"] = cfg.delta;
    j["g"] = cfg.g_list;
    j["N"] = cfg.n_list;
    j["cut"] = to_string(cfg.cut);
    j["site"] = cfg.site;
    j["out"] = cfg.out_dir;
    j["jobs"] = cfg.jobs;
    j["nu"] = cfg.nu;
    j["figures"] = cfg.figures;
    j["inputs"] = cfg.inputs;
    j["svg"] = cfg.svg;
    if (cfg.initial_samples)
        j["initial_samples"] = *cfg.initial_samples;
    if (cfg.batch)
        j["batch"] = *cfg.batch;
    if (cfg.rel_threshold)
        j["rel_threshold"] = *cfg.rel_threshold;
    if (cfg.max_samples)
        j["max_samples"] = *cfg.max_samples;
    j["config_text"] = to_config_text(cfg);
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

void write_manifest(const RunConfig& cfg, const std::string& command, json extra,
                    double wall_seconds) {
    json m;
    m["tool"] = "bkc";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["config"] = config_json(cfg);
    m["wall_seconds"] = wall_seconds;
    for (auto it = extra.begin(); it != extra.end(); ++it)
        m[it.key()] = it.value();
    write_text(fs::path(cfg.out_dir) / (command + ".manifest.json"), m.dump(2) + "\n");
}

std::string g_tag(double g) {
    std::ostringstream os;
    os << g;
    return os.str();
}

void maybe_svg(const RunConfig& cfg, const std::string& name, const PlotSpec& plot) {
    if (cfg.svg)
        write_text(fs::path(cfg.out_dir) / (name + ".svg"), render_svg(plot));
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_row(const SweepRow& row) {
    return format_double(row.g) + "," + std::to_string(row.n_sites) + "," + row.subsystem + "," +
           format_double(row.mean) + "," + format_double(row.std_error) + "," +
           std::to_string(row.n_samples);
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::vector<SweepRow> rows;
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader)
        throw ConfigError("'" + path + "' does not have the sweep header");
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ','))
            f.push_back(item);
        if (f.size() != 6)
            throw ConfigError("malformed row in '" + path + "': " + line);
        try {
            rows.push_back({std::stod(f[0]), std::stoi(f[1]), f[2], std::stod(f[3]), std::stod(f[4]),
                            std::stoi(f[5])});
        } catch (const std::logic_error&) {
            throw ConfigError("malformed row in '" + path + "': " + line);
        }
    }
    return rows;
}

void write_sweep_csv(const std::string& path, std::vector<SweepRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.n_sites != b.n_sites)
            return a.n_sites < b.n_sites;
        if (a.g != b.g)
            return a.g < b.g;
        if (label_kind(a.subsystem) != label_kind(b.subsystem))
            return label_kind(a.subsystem) < label_kind(b.subsystem);
        return label_size(a.subsystem) < label_size(b.subsystem);
    });
    std::string text = std::string(kSweepHeader) + "\n";
    for (const SweepRow& r : rows)
        text += format_row(r) + "\n";
    write_text(path, text);
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    const std::string csv = (fs::path(cfg.out_dir) / "sweep.csv").string();

    std::vector<SweepRow> done;
    if (fs::exists(csv))
        done = read_sweep_csv(csv);
    std::vector<Task> todo;
    for (const Task& t : build_tasks(cfg)) {
        const bool present = std::any_of(done.begin(), done.end(), [&](const SweepRow& r) {
            return same_key(r, t.g, t.n_sites, t.label);
        });
        if (!present)
            todo.push_back(t);
    }
    log << "sweep: " << todo.size() << " grid points to run, " << done.size() << " already present\n";

    struct Outcome {
        std::optional<SweepRow> row;
        std::string propagation;
        std::string error;
        int code = kExitOk;
        int n_samples = 0;
        double seconds = 0.0;
    };
    std::vector<Outcome> outcomes(todo.size());
    std::mutex log_mutex;
    parallel_for(static_cast<int>(todo.size()), cfg.jobs, [&](int i) {
        const Task& t = todo[i];
        Outcome& o = outcomes[i];
        const auto start = Clock::now();
        try {
            const ModelParams p(cfg.w, t.g, cfg.delta, t.n_sites);
            o.propagation = to_string(Propagator(p).mode());
            const TimeAverageResult r = time_averaged_entropy(p, t.sites, cfg.protocol_for(p));
            o.row = SweepRow{t.g, t.n_sites, t.label, r.mean, r.std_error, r.n_samples};
            o.n_samples = r.n_samples;
        } catch (const NonConvergence& e) {
            o.error = e.what();
            o.code = kExitNonConvergence;
            o.n_samples = e.partial().n_samples;
        } catch (const Error& e) {
            o.error = e.what();
            o.code = kExitNumerical;
        }
        o.seconds = seconds_since(start);
        std::lock_guard<std::mutex> lock(log_mutex);
        log << "  g=" << t.g << " N=" << t.n_sites << " " << t.label << ": "
            << (o.row ? "S=" + format_double(o.row->mean) : "FAILED (" + o.error + ")") << "\n";
    });

    int code = kExitOk;
    json runs = json::array();
    for (std::size_t i = 0; i < todo.size(); ++i) {
        const Outcome& o = outcomes[i];
        if (o.row)
            done.push_back(*o.row);
        code = std::max(code, o.code);
        json r;
        r["g"] = todo[i].g;
        r["N"] = todo[i].n_sites;
        r["subsystem"] = todo[i].label;
        r["propagation"] = o.propagation;
        r["n_samples"] = o.n_samples;
        r["converged"] = o.row.has_value();
        r["seconds"] = o.seconds;
        if (!o.error.empty())
            r["error"] = o.error;
        runs.push_back(r);
    }
    write_sweep_csv(csv, done);
    json extra;
    extra["runs"] = runs;
    extra["output"] = csv;
    write_manifest(cfg, "sweep", extra, seconds_since(t0));
    return code;
}

int cmd_analytic(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    std::vector<SweepRow> rows;
    json branches = json::array();
    for (const Task& t : build_tasks(cfg)) {
        const ModelParams p(cfg.w, t.g, cfg.delta, t.n_sites);
        const int l = static_cast<int>(t.sites.size());
        double value;
        std::string branch;
        if (l == 1) {
            value = s1_prediction(p);
            if (in_critical_window(p))
                branch = "critical-expansion";
            else
                branch = classify_phase(p) == PhaseRegime::Reciprocal ? "reciprocal" : "non-reciprocal";
        } else if (classify_phase(p) != PhaseRegime::Critical) {
            value = gge_entropy(p, l);
            branch = "gge";
        } else {
            value = l * s1_prediction(p);
            branch = "critical-expansion-times-l";
        }
        rows.push_back({t.g, t.n_sites, t.label, value, 0.0, 0});
        branches.push_back({{"g", t.g}, {"N", t.n_sites}, {"subsystem", t.label}, {"branch", branch}});
    }
    const std::string csv = (fs::path(cfg.out_dir) / "analytic.csv").string();
    write_sweep_csv(csv, rows);
    log << "analytic: wrote " << rows.size() << " rows to " << csv << "\n";
    json extra;
    extra["rows"] = branches;
    extra["output"] = csv;
    write_manifest(cfg, "analytic", extra, seconds_since(t0));
    return kExitOk;
}

int cmd_collapse(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    if (!(cfg.nu > 0.0))
        throw ConfigError("nu must be positive");
    fs::create_directories(cfg.out_dir);
    std::vector<std::string> inputs = cfg.inputs;
    if (inputs.empty())
        inputs.push_back((fs::path(cfg.out_dir) / "sweep.csv").string());
    std::map<std::string, std::vector<CollapseRow>> by_kind;
    for (const std::string& path : inputs)
        for (const SweepRow& r : read_sweep_csv(path)) {
            const std::string kind = label_kind(r.subsystem);
            if (kind == "site" || kind == "quarter")
                by_kind[kind].push_back({r.g, r.n_sites, r.mean});
        }
    if (by_kind.empty())
        throw ConfigError("no site or quarter rows in the collapse inputs");

    std::string text = "mode,g,N,x,y\n";
    json qualities;
    for (const auto& [kind, rows] : by_kind) {
        const CollapseMode mode = kind == "site" ? CollapseMode::SingleSite : CollapseMode::QuarterCut;
        const CollapseResult res = scaling_collapse(rows, cfg.delta, cfg.nu, mode);
        const CollapseResult ref = scaling_collapse(rows, cfg.delta, 1.0, mode);
        for (const CollapsePoint& pt : res.points)
            text += kind + "," + format_double(pt.g) + "," + std::to_string(pt.n_sites) + "," +
                    format_double(pt.x) + "," + format_double(pt.y) + "\n";
        qualities[kind] = {{"nu", cfg.nu}, {"quality", res.quality}, {"quality_nu_1", ref.quality}};
        log << "collapse " << kind << ": quality(nu=" << cfg.nu << ") = " << res.quality
            << ", quality(nu=1) = " << ref.quality << "\n";

        PlotSpec plot{"collapse (" + kind + ", nu=" + g_tag(cfg.nu) + ")", "x", "y", false, false, {}};
        std::map<int, Series> curves;
        for (const CollapsePoint& pt : res.points) {
            Series& s = curves[pt.n_sites];
            s.label = "N=" + std::to_string(pt.n_sites);
            s.x.push_back(pt.x);
            s.y.push_back(pt.y);
        }
        for (auto& [n, s] : curves)
            plot.series.push_back(s);
        maybe_svg(cfg, "collapse_" + kind, plot);
    }
    write_text(fs::path(cfg.out_dir) / "collapse.csv", text);
    json extra;
    extra["quality"] = qualities;
    extra["inputs"] = inputs;
    write_manifest(cfg, "collapse", extra, seconds_since(t0));
    return kExitOk;
}

namespace {

json figure_page(const RunConfig& cfg, std::ostream& log) {
    json out = json::array();
    for (int n : cfg.n_list) {
        std::string text = "g,N,l,S_mean,stderr,S_normalized\n";
        PlotSpec plot{"Page curves N=" + std::to_string(n), "l", "S / max S", false, false, {}};
        for (double g : cfg.g_list) {
            const ModelParams p(cfg.w, g, cfg.delta, n);
            const auto curve = page_curve(p, cfg.protocol_for(p));
            double mx = 0.0;
            for (const PagePoint& pt : curve)
                mx = std::max(mx, pt.entropy.mean);
            Series s{"g=" + g_tag(g), {}, {}};
            for (const PagePoint& pt : curve) {
                const double norm = mx > 0.0 ? pt.entropy.mean / mx : 0.0;
                text += format_double(g) + "," + std::to_string(n) + "," + std::to_string(pt.l) + "," +
                        format_double(pt.entropy.mean) + "," + format_double(pt.entropy.std_error) +
                        "," + format_double(norm) + "\n";
                s.x.push_back(pt.l);
                s.y.push_back(norm);
            }
            plot.series.push_back(s);
        }
        const std::string name = "page_N" + std::to_string(n);
        write_text(fs::path(cfg.out_dir) / (name + ".csv"), text);
        maybe_svg(cfg, name, plot);
        out.push_back(name + ".csv");
        log << "figures: wrote " << name << ".csv\n";
    }
    return out;
}

json figure_profiles(const RunConfig& cfg, std::ostream& log) {
    json out = json::array();
    for (int n : cfg.n_list) {
        for (double g : cfg.g_list) {
            const ModelParams p(cfg.w, g, cfg.delta, n);
            const Profiles pr = profiles(p, cfg.protocol_for(p));
            std::string text = "j,density,entropy,entropy_stderr,thermal,z,beta,rotation_angle\n";
            Series dens{"density", {}, {}}, ent{"entropy", {}, {}}, th{"thermal proxy", {}, {}};
            for (int j = 0; j < n; ++j) {
                const LocalDecomposition& d = pr.decomposition[j];
                text += std::to_string(j + 1) + "," + format_double(pr.density(j)) + "," +
                        format_double(pr.entropy(j)) + "," + format_double(pr.entropy_stderr(j)) + "," +
                        format_double(pr.thermal(j)) + "," + format_double(d.z) + "," +
                        format_double(d.beta) + "," + format_double(d.rotation_angle) + "\n";
                dens.x.push_back(j + 1);
                dens.y.push_back(pr.density(j));
                ent.x.push_back(j + 1);
                ent.y.push_back(pr.entropy(j));
                th.x.push_back(j + 1);
                th.y.push_back(pr.thermal(j));
            }
            const std::string name = "profiles_N" + std::to_string(n) + "_g" + g_tag(g);
            write_text(fs::path(cfg.out_dir) / (name + ".csv"), text);
            maybe_svg(cfg, name + "_density",
                      {"density N=" + std::to_string(n) + " g=" + g_tag(g), "site", "n", false, true, {dens}});
            maybe_svg(cfg, name + "_entropy",
                      {"entropy N=" + std::to_string(n) + " g=" + g_tag(g), "site", "S", false, false, {ent, th}});
            out.push_back(name + ".csv");
            log << "figures: wrote " << name << ".csv\n";
        }
    }
    return out;
}

std::string fourpoint_table(const RunConfig& cfg, bool with_log, std::ostream& log, int& code) {
    std::string text = with_log ? "g,N,site,epsilon4,one_over_eps4,ib_minus_ia,ib_minus_ia_estimate,"
                                  "extra_resonances,log_correction,log_mean_nu_sq,n_samples\n"
                                : "g,N,site,log_correction,log_mean_nu_sq,ratio,n_samples\n";
    for (int n : cfg.n_list) {
        for (double g : cfg.g_list) {
            const ModelParams p(cfg.w, g, cfg.delta, n);
            if (classify_phase(p) != PhaseRegime::NonReciprocal) {
                log << "  skipping g=" << g << " (four-point analysis covers g < delta only)\n";
                continue;
            }
            LogCorrectionResult lc;
            try {
                lc = log_correction(p, cfg.site, cfg.protocol_for(p));
            } catch (const NonConvergence& e) {
                log << "  g=" << g << " N=" << n << ": " << e.what() << "\n";
                code = kExitNonConvergence;
                continue;
            }
            if (with_log) {
                const SelectionSums s = selection_sums(p, cfg.site);
                const double e4 = epsilon4(p, cfg.site);
                text += format_double(g) + "," + std::to_string(n) + "," + std::to_string(cfg.site) + "," +
                        format_double(e4) + "," + format_double(1.0 / e4) + "," +
                        format_double((s.i_b_r - s.i_a_a).real()) + "," +
                        format_double(ib_minus_ia_estimate(p)) + "," + std::to_string(s.extra_resonances) +
                        "," + format_double(lc.value) + "," + format_double(lc.log_mean_nu_sq) + "," +
                        std::to_string(lc.n_samples) + "\n";
            } else {
                text += format_double(g) + "," + std::to_string(n) + "," + std::to_string(cfg.site) + "," +
                        format_double(lc.value) + "," + format_double(lc.log_mean_nu_sq) + "," +
                        format_double(lc.value / lc.log_mean_nu_sq) + "," + std::to_string(lc.n_samples) +
                        "\n";
            }
        }
    }
    return text;
}

}  // namespace

int cmd_figures(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    if (cfg.figures.empty()) {
        log << "figures: nothing requested\n";
        return kExitOk;
    }
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    json outputs;
    int code = kExitOk;
    for (const std::string& fig : cfg.figures) {
        if (fig == "page") {
            outputs[fig] = figure_page(cfg, log);
        } else if (fig == "profiles") {
            outputs[fig] = figure_profiles(cfg, log);
        } else if (fig == "eps4") {
            write_text(fs::path(cfg.out_dir) / "eps4.csv", fourpoint_table(cfg, true, log, code));
            outputs[fig] = "eps4.csv";
        } else if (fig == "logcorr") {
            write_text(fs::path(cfg.out_dir) / "log_correction.csv", fourpoint_table(cfg, false, log, code));
            outputs[fig] = "log_correction.csv";
        } else {
            throw ConfigError("unknown figure '" + fig + "' (expected page, profiles, eps4, logcorr)");
        }
    }
    json extra;
    extra["outputs"] = outputs;
    write_manifest(cfg, "figures", extra, seconds_since(t0));
    return code;
}

int cmd_fourpoint(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    int code = kExitOk;
    const std::string path = (fs::path(cfg.out_dir) / "fourpoint.csv").string();
    write_text(path, fourpoint_table(cfg, true, log, code));
    log << "fourpoint: wrote " << path << "\n";
    json extra;
    extra["output"] = path;
    write_manifest(cfg, "fourpoint", extra, seconds_since(t0));
    return code;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log) {
    try {
        if (name == "sweep")
            return cmd_sweep(cfg, log);
        if (name == "analytic")
            return cmd_analytic(cfg, log);
        if (name == "collapse")
            return cmd_collapse(cfg, log);
        if (name == "figures")
            return cmd_figures(cfg, log);
        if (name == "fourpoint")
            return cmd_fourpoint(cfg, log);
        throw ConfigError("unknown command '" + name + "'");
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MissingReference& e) {
        log << "missing reference: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NonConvergence& e) {
        log << "convergence failure: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const Error& e) {
        log << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace bkc::cli
