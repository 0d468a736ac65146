#pragma once

#include "bkc/dynamics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bkc::cli {

enum class CutKind { Site, Quarter, Page };

const char* to_string(CutKind cut);
CutKind parse_cut(const std::string& text);

struct RunConfig {
    double w = 1.0;
    double delta = 0.25;
    std::vector<double> g_list;
    std::vector<int> n_list;
    CutKind cut = CutKind::Quarter;
    int site = 1;
    // Protocol overrides; unset fields keep the defaults derived from each run.
    std::optional<int> initial_samples;
    std::optional<int> batch;
    std::optional<double> rel_threshold;
    std::optional<int> max_samples;
    std::string out_dir = "out";
    int jobs = 1;
    double nu = 0.5;
    std::vector<std::string> figures;
    std::vector<std::string> inputs;
    bool svg = false;

    void validate() const;
    AveragingProtocol protocol_for(const ModelParams& params) const;
};

// Full g list used in the numerics: both caption lists merged.
RunConfig default_config();

// Applies one key/value pair; throws ConfigError on unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
// Flat "key = value" text, '#' starts a comment, lists are comma separated.
void parse_config_text(RunConfig& cfg, const std::string& text);
void load_config_file(RunConfig& cfg, const std::string& path);
// BKC_MAX_SAMPLES, when set, replaces the sample cap.
void apply_environment(RunConfig& cfg);

// key = value text that load_config_file reads back to the same config.
std::string to_config_text(const RunConfig& cfg);

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace bkc::cli
