#include "bkc/cli/config.hpp"

#include "bkc/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bkc::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

double to_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw ConfigError("not a number: '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("not a number: '" + s + "'");
    }
}

int to_int(const std::string& s) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size())
            throw ConfigError("not an integer: '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("not an integer: '" + s + "'");
    }
}

bool to_bool(const std::string& s) {
    if (s == "1" || s == "true" || s == "yes" || s == "on")
        return true;
    if (s == "0" || s == "false" || s == "no" || s == "off")
        return false;
    throw ConfigError("not a boolean: '" + s + "'");
}

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << v[i];
    return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << v[i];
    return os.str();
}

}  // namespace

const char* to_string(CutKind cut) {
    switch (cut) {
    case CutKind::Site: return "site";
    case CutKind::Quarter: return "quarter";
    case CutKind::Page: return "page";
    }
    return "unknown";
}

CutKind parse_cut(const std::string& text) {
    if (text == "site")
        return CutKind::Site;
    if (text == "quarter")
        return CutKind::Quarter;
    if (text == "page")
        return CutKind::Page;
    throw ConfigError("cut must be one of site, quarter, page (got '" + text + "')");
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& s : split(text))
        out.push_back(to_double(s));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const std::string& s : split(text))
        out.push_back(to_int(s));
    return out;
}

RunConfig default_config() {
    RunConfig cfg;
    cfg.g_list = {0.0, 0.2, 0.24, 0.245, 0.249, 0.25, 0.251, 0.255, 0.26};
    cfg.n_list = {16, 32, 48, 64, 96, 128};
    return cfg;
}

void RunConfig::validate() const {
    if (g_list.empty() || n_list.empty())
        throw ConfigError("parameter grid is empty");
    for (double g : g_list)
        for (int n : n_list) {
            try {
                ModelParams(w, g, delta, n);
            } catch (const InvalidParams& e) {
                throw ConfigError(e.what());
            }
            // The site also feeds the four-point figures, so check it for every cut.
            if (site < 1 || site > n)
                throw ConfigError("site " + std::to_string(site) + " outside chain of " +
                                  std::to_string(n) + " sites");
            if (cut == CutKind::Quarter && n < 4)
                throw ConfigError("quarter cut needs N >= 4");
        }
    if (jobs < 1)
        throw ConfigError("jobs must be positive");
    if (!(nu > 0.0))
        throw ConfigError("nu must be positive");
    if (initial_samples && *initial_samples < 2)
        throw ConfigError("initial_samples must be at least 2");
    if (batch && *batch < 1)
        throw ConfigError("batch must be positive");
    if (rel_threshold && !(*rel_threshold > 0.0))
        throw ConfigError("rel_threshold must be positive");
    if (max_samples && *max_samples < initial_samples.value_or(1000))
        throw ConfigError("max_samples below the initial sample count");
}

AveragingProtocol RunConfig::protocol_for(const ModelParams& params) const {
    AveragingProtocol p = AveragingProtocol::for_params(params);
    if (initial_samples)
        p.initial_samples = *initial_samples;
    if (batch)
        p.batch = *batch;
    if (rel_threshold)
        p.rel_threshold = *rel_threshold;
    if (max_samples)
        p.max_samples = *max_samples;
    return p;
}

void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key == "w")
        cfg.w = to_double(value);
    else if (key == "delta")
        cfg.delta = to_double(value);
    else if (key == "g")
        cfg.g_list = parse_double_list(value);
    else if (key == "n" || key == "N")
        cfg.n_list = parse_int_list(value);
    else if (key == "cut")
        cfg.cut = parse_cut(value);
    else if (key == "site")
        cfg.site = to_int(value);
    else if (key == "initial_samples")
        cfg.initial_samples = to_int(value);
    else if (key == "batch")
        cfg.batch = to_int(value);
    else if (key == "rel_threshold")
        cfg.rel_threshold = to_double(value);
    else if (key == "max_samples")
        cfg.max_samples = to_int(value);
    else if (key == "out")
        cfg.out_dir = value;
    else if (key == "jobs")
        cfg.jobs = to_int(value);
    else if (key == "nu")
        cfg.nu = to_double(value);
    else if (key == "figures")
        cfg.figures = split(value);
    else if (key == "inputs")
        cfg.inputs = split(value);
    else if (key == "svg")
        cfg.svg = to_bool(value);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

void parse_config_text(RunConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    parse_config_text(cfg, buf.str());
}

void apply_environment(RunConfig& cfg) {
    if (const char* cap = std::getenv("BKC_MAX_SAMPLES"); cap && *cap)
        cfg.max_samples = to_int(cap);
}

std::string to_config_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "w = " << cfg.w << "\n";
    os << "delta = " << cfg.delta << "\n";
    os << "g = " << join_doubles(cfg.g_list) << "\n";
    os << "n = " << join(cfg.n_list) << "\n";
    os << "cut = " << to_string(cfg.cut) << "\n";
    os << "site = " << cfg.site << "\n";
    if (cfg.initial_samples)
        os << "initial_samples = " << *cfg.initial_samples << "\n";
    if (cfg.batch)
        os << "batch = " << *cfg.batch << "\n";
    if (cfg.rel_threshold)
        os << "rel_threshold = " << *cfg.rel_threshold << "\n";
    if (cfg.max_samples)
        os << "max_samples = " << *cfg.max_samples << "\n";
    os << "out = " << cfg.out_dir << "\n";
    os << "jobs = " << cfg.jobs << "\n";
    os << "nu = " << cfg.nu << "\n";
    if (!cfg.figures.empty())
        os << "figures = " << join(cfg.figures) << "\n";
    if (!cfg.inputs.empty())
        os << "inputs = " << join(cfg.inputs) << "\n";
    os << "svg = " << (cfg.svg ? "true" : "false") << "\n";
    return os.str();
}

}  // namespace bkc::cli
