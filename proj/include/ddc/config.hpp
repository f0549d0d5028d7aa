#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "ddc/alignment.hpp"
#include "ddc/errors.hpp"
#include "ddc/filtering.hpp"
#include "ddc/scenegen.hpp"
#include "ddc/schedule.hpp"

namespace ddc {

// Config-file problems are usage errors (CLI exit code 1), unlike data errors.
struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

struct PriorConfig {
    double sigma_p = 0.05;
    double gmrf_lambda_s = 4.0;
    double gmrf_eps_reg = 0.05;
};

struct ScheduleConfig {
    int timesteps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    ScheduleKind kind = ScheduleKind::Linear;

    NoiseSchedule build() const { return make_schedule(timesteps, beta_start, beta_end, kind); }
};

struct FilterConfig {
    int segments = 200;
    double tau = 1.0;
    int ransac_iters = 100;
    double ransac_tol = 0.0;  // 0 means tau / 2
    double compactness = 0.5;
    int slic_iters = 10;
    int window = 7;     // window-filter baseline
    double margin = 2.0;

    RansacConfig ransac() const {
        RansacConfig cfg;
        cfg.iters = ransac_iters;
        cfg.inlier_tol = ransac_tol > 0.0 ? ransac_tol : tau / 2.0;
        return cfg;
    }
};

// Bundle of all tunables reachable from a flat `key = value` config file.
struct PipelineConfig {
    AlignmentConfig align;
    PriorConfig prior;
    ScheduleConfig schedule;
    SceneConfig scene;
    FilterConfig filter;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("config: bad numeric value for '" + key + "': " + v);
    }
}

inline int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const int i = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw UsageError("config: bad integer value for '" + key + "': " + v);
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config: bad boolean value for '" + key + "': " + v);
}

}  // namespace detail

inline void apply_config_key(PipelineConfig& cfg, const std::string& key,
                             const std::string& value) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;

    if (key == "num_steps") cfg.align.num_steps = to_int(key, value);
    else if (key == "start_fraction") cfg.align.start_fraction = to_double(key, value);
    else if (key == "interval") cfg.align.interval = to_int(key, value);
    else if (key == "inner_iters") cfg.align.inner_iters = to_int(key, value);
    else if (key == "inner_lr") cfg.align.inner_lr = to_double(key, value);
    else if (key == "momentum") cfg.align.momentum = to_double(key, value);
    else if (key == "guidance_weight") cfg.align.guidance_weight = to_double(key, value);
    else if (key == "measurement_only") cfg.align.measurement_only = to_bool(key, value);
    else if (key == "downsample_2x") cfg.align.downsample_2x = to_bool(key, value);
    else if (key == "lambda_smooth") cfg.align.loss_cfg.lambda_smooth = to_double(key, value);
    else if (key == "lambda_rssim") cfg.align.loss_cfg.lambda_rssim = to_double(key, value);
    else if (key == "rssim_window") cfg.align.loss_cfg.rssim_window = to_int(key, value);
    else if (key == "rssim_c") cfg.align.loss_cfg.rssim_c = to_double(key, value);
    else if (key == "rssim_stride") cfg.align.loss_cfg.rssim_stride = to_int(key, value);
    else if (key == "sigma_p") cfg.prior.sigma_p = to_double(key, value);
    else if (key == "gmrf_lambda_s") cfg.prior.gmrf_lambda_s = to_double(key, value);
    else if (key == "gmrf_eps_reg") cfg.prior.gmrf_eps_reg = to_double(key, value);
    else if (key == "timesteps") cfg.schedule.timesteps = to_int(key, value);
    else if (key == "beta_start") cfg.schedule.beta_start = to_double(key, value);
    else if (key == "beta_end") cfg.schedule.beta_end = to_double(key, value);
    else if (key == "schedule_kind") {
        if (value == "linear") cfg.schedule.kind = ScheduleKind::Linear;
        else if (value == "scaled-linear") cfg.schedule.kind = ScheduleKind::ScaledLinear;
        else throw UsageError("config: unknown schedule_kind: " + value);
    }
    else if (key == "width") cfg.scene.width = to_int(key, value);
    else if (key == "height") cfg.scene.height = to_int(key, value);
    else if (key == "plane_count") cfg.scene.plane_count = to_int(key, value);
    else if (key == "depth_min") cfg.scene.depth_min = to_double(key, value);
    else if (key == "depth_max") cfg.scene.depth_max = to_double(key, value);
    else if (key == "warp") cfg.scene.warp = parse_warp(value);
    else if (key == "prior_noise_std") cfg.scene.prior_noise_std = to_double(key, value);
    else if (key == "density") cfg.scene.density = to_double(key, value);
    else if (key == "pattern") cfg.scene.pattern = parse_pattern(value);
    else if (key == "outlier_mode") cfg.scene.outlier_mode = parse_outlier_mode(value);
    else if (key == "outlier_rate") cfg.scene.outlier_rate = to_double(key, value);
    else if (key == "segments") cfg.filter.segments = to_int(key, value);
    else if (key == "tau") cfg.filter.tau = to_double(key, value);
    else if (key == "ransac_iters") cfg.filter.ransac_iters = to_int(key, value);
    else if (key == "ransac_tol") cfg.filter.ransac_tol = to_double(key, value);
    else if (key == "compactness") cfg.filter.compactness = to_double(key, value);
    else if (key == "slic_iters") cfg.filter.slic_iters = to_int(key, value);
    else if (key == "filter_window") cfg.filter.window = to_int(key, value);
    else if (key == "filter_margin") cfg.filter.margin = to_double(key, value);
    else throw UsageError("config: unknown key: " + key);
}

inline void apply_config_text(PipelineConfig& cfg, const std::string& text,
                              const std::string& origin = "<config>") {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(origin + ":" + std::to_string(line_no) +
                             ": expected 'key = value', got: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw UsageError(origin + ":" + std::to_string(line_no) + ": empty key or value");
        apply_config_key(cfg, key, value);
    }
}

inline void apply_config_file(PipelineConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path);
}

}  // namespace ddc
