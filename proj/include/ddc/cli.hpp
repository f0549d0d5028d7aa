#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddc/alignment.hpp"
#include "ddc/config.hpp"
#include "ddc/diffusion.hpp"
#include "ddc/filtering.hpp"
#include "ddc/io.hpp"
#include "ddc/metrics.hpp"
#include "ddc/priors.hpp"
#include "ddc/scenegen.hpp"

namespace ddc::cli {

using nlohmann::json;

inline json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["num_steps"] = cfg.align.num_steps;
    j["start_fraction"] = cfg.align.start_fraction;
    j["interval"] = cfg.align.interval;
    j["inner_iters"] = cfg.align.inner_iters;
    j["inner_lr"] = cfg.align.inner_lr;
    j["momentum"] = cfg.align.momentum;
    j["guidance_weight"] = cfg.align.guidance_weight;
    j["measurement_only"] = cfg.align.measurement_only;
    j["downsample_2x"] = cfg.align.downsample_2x;
    j["lambda_smooth"] = cfg.align.loss_cfg.lambda_smooth;
    j["lambda_rssim"] = cfg.align.loss_cfg.lambda_rssim;
    j["rssim_window"] = cfg.align.loss_cfg.rssim_window;
    j["rssim_c"] = cfg.align.loss_cfg.rssim_c;
    j["rssim_stride"] = cfg.align.loss_cfg.rssim_stride;
    j["sigma_p"] = cfg.prior.sigma_p;
    j["gmrf_lambda_s"] = cfg.prior.gmrf_lambda_s;
    j["gmrf_eps_reg"] = cfg.prior.gmrf_eps_reg;
    j["timesteps"] = cfg.schedule.timesteps;
    j["beta_start"] = cfg.schedule.beta_start;
    j["beta_end"] = cfg.schedule.beta_end;
    j["schedule_kind"] = cfg.schedule.kind == ScheduleKind::Linear ? "linear" : "scaled-linear";
    j["scene"] = {
        {"width", cfg.scene.width},
        {"height", cfg.scene.height},
        {"plane_count", cfg.scene.plane_count},
        {"depth_min", cfg.scene.depth_min},
        {"depth_max", cfg.scene.depth_max},
        {"warp", cfg.scene.warp == RelativeWarp::Identity ? "identity" : "monotone-gamma"},
        {"prior_noise_std", cfg.scene.prior_noise_std},
        {"density", cfg.scene.density},
        {"pattern", cfg.scene.pattern == SparsePattern::Uniform ? "uniform" : "corner"},
        {"outlier_mode", cfg.scene.outlier_mode == OutlierMode::None
                             ? "none"
                             : (cfg.scene.outlier_mode == OutlierMode::Gross ? "gross"
                                                                             : "see_through")},
        {"outlier_rate", cfg.scene.outlier_rate},
    };
    j["filter"] = {
        {"segments", cfg.filter.segments},   {"tau", cfg.filter.tau},
        {"ransac_iters", cfg.filter.ransac_iters}, {"ransac_tol", cfg.filter.ransac().inlier_tol},
        {"compactness", cfg.filter.compactness},   {"slic_iters", cfg.filter.slic_iters},
        {"filter_window", cfg.filter.window},      {"filter_margin", cfg.filter.margin},
    };
    return j;
}

inline json metrics_to_json(const MetricReport& rep) {
    json j;
    j["rmse"] = rep.rmse;
    j["mae"] = rep.mae;
    j["pixel_count"] = rep.pixel_count;
    for (const auto& [k, v] : rep.extras) j[k] = v;
    return j;
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParameterError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

namespace detail {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

inline std::string scene_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%03d", index);
    return buf;
}

struct SceneFiles {
    DepthField gt;
    SparseMeasurement sparse;
    RelativeDepthField relative;
    GuidanceImage guidance;
    std::uint64_t seed = 0;
    std::vector<std::uint8_t> outlier_labels;
};

inline SparseMeasurement sparse_from_field(const DepthField& field) {
    SparseMeasurement y(field.width, field.height);
    for (std::size_t i = 0; i < field.size(); ++i)
        if (field.valid[i]) {
            y.mask[i] = 1;
            y.values[i] = field.values[i];
        }
    if (y.count() == 0) throw ParameterError("sparse depth file has no measured pixels");
    return y;
}

inline DepthField sparse_to_field(const SparseMeasurement& y) {
    DepthField f(y.width, y.height, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        f.valid[i] = y.mask[i];
        f.values[i] = y.mask[i] ? y.values[i] : 0.0;
    }
    return f;
}

inline SceneFiles load_scene(const std::filesystem::path& dir) {
    SceneFiles sf;
    sf.gt = read_depth_png16((dir / "gt.png").string());
    sf.sparse = sparse_from_field(read_depth_png16((dir / "sparse.png").string()));
    sf.relative = read_depth_pfm((dir / "relative.pfm").string());
    sf.guidance = read_guidance_png((dir / "guidance.png").string());

    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw ParameterError("missing meta.json in " + dir.string());
    json meta = json::parse(meta_in);
    sf.seed = meta.at("seed").get<std::uint64_t>();
    sf.outlier_labels.assign(sf.gt.size(), 0);
    if (meta.contains("outlier_indices"))
        for (const auto& idx : meta.at("outlier_indices"))
            sf.outlier_labels.at(idx.get<std::size_t>()) = 1;
    return sf;
}

inline void save_scene(const std::filesystem::path& dir, const Scene& scene,
                       const PipelineConfig& cfg) {
    std::filesystem::create_directories(dir);
    write_depth_png16((dir / "gt.png").string(), scene.gt);
    write_depth_png16((dir / "sparse.png").string(), sparse_to_field(scene.sparse));
    write_depth_pfm((dir / "relative.pfm").string(), scene.relative);
    write_guidance_png((dir / "guidance.png").string(), scene.guidance);

    json meta;
    meta["seed"] = scene.seed;
    meta["width"] = scene.config.width;
    meta["height"] = scene.config.height;
    meta["config"] = config_to_json(cfg)["scene"];
    json outliers = json::array();
    for (std::size_t i = 0; i < scene.outlier_labels.size(); ++i)
        if (scene.outlier_labels[i]) outliers.push_back(i);
    meta["outlier_indices"] = outliers;
    write_json((dir / "meta.json").string(), meta);
}

inline SparseMeasurement apply_filter_mask(const SparseMeasurement& y,
                                           const std::vector<std::uint8_t>& kept) {
    SparseMeasurement out(y.width, y.height);
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y.mask[i] && kept[i]) {
            out.mask[i] = 1;
            out.values[i] = y.values[i];
        }
    if (out.count() == 0) throw ParameterError("filtering removed every measurement");
    return out;
}

struct ModeRun {
    std::string name;
    MetricReport report;
};

inline std::unique_ptr<PriorModel> build_prior(const std::string& kind,
                                               const RelativeDepthField& relative,
                                               const PriorConfig& cfg) {
    if (kind == "affine")
        return std::make_unique<AffineSubspacePrior>(relative, cfg.sigma_p);
    if (kind == "gmrf") return std::make_unique<GmrfPrior>(cfg.gmrf_lambda_s, cfg.gmrf_eps_reg);
    throw ParameterError("unknown prior: " + kind);
}

inline AlignResult run_scene_mode(const std::string& mode, const SceneFiles& sf,
                                  const PipelineConfig& cfg, std::uint64_t seed,
                                  const std::string& prior_kind) {
    PipelineConfig local = cfg;
    local.align.seed = seed;
    const std::unique_ptr<PriorModel> prior = build_prior(prior_kind, sf.relative, cfg.prior);
    const NoiseSchedule schedule = cfg.schedule.build();

    if (mode == "aligned+filter") {
        const FilterResult fr =
            filter_outliers(sf.relative, sf.sparse, cfg.filter.segments, cfg.filter.tau,
                            cfg.filter.ransac(), seed, cfg.filter.compactness,
                            cfg.filter.slic_iters);
        const SparseMeasurement kept = apply_filter_mask(sf.sparse, fr.kept_mask);
        return run_mode(SamplingMode::Aligned, *prior, kept, sf.guidance, sf.relative, schedule,
                        local.align);
    }
    return run_mode(parse_mode(mode), *prior, sf.sparse, sf.guidance, sf.relative, schedule,
                    local.align);
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Zero-shot depth completion by test-time-aligned diffusion sampling"};
    app.require_subcommand(1);

    PipelineConfig cfg;
    std::string config_path;

    // -- synth ---------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scene suite");
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    int synth_num = 1;
    std::string synth_preset = "outdoor";
    std::string synth_outlier_mode;
    double synth_outlier_rate = -1.0;
    std::string synth_config;
    synth->add_option("--seed", synth_seed, "Master seed");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--num", synth_num, "Number of scenes")->required();
    synth->add_option("--preset", synth_preset, "indoor|outdoor");
    synth->add_option("--outlier-mode", synth_outlier_mode, "none|see_through|gross");
    synth->add_option("--outlier-rate", synth_outlier_rate, "Fraction of corrupted points");
    synth->add_option("--config", synth_config, "key = value config file");

    // -- complete ------------------------------------------------------------
    auto* complete = app.add_subcommand("complete", "Complete a dense depth map");
    std::string c_sparse, c_relative, c_guidance, c_prior = "affine", c_mode = "aligned";
    std::string c_config, c_out, c_manifest, c_gt;
    std::uint64_t c_seed = 0;
    bool c_filter = false;
    complete->add_option("--sparse", c_sparse, "Sparse depth (png16)")->required();
    complete->add_option("--relative", c_relative, "Relative depth prior (pfm)")->required();
    complete->add_option("--guidance", c_guidance, "Guidance image (png)")->required();
    complete->add_option("--prior", c_prior, "affine|gmrf");
    complete->add_option("--mode", c_mode, "naive|guided|aligned");
    complete->add_option("--config", c_config, "key = value config file");
    complete->add_option("--seed", c_seed, "Seed");
    complete->add_option("--out", c_out, "Output depth path (.png/.pfm)")->required();
    complete->add_option("--manifest", c_manifest, "Run manifest path (json)");
    complete->add_option("--gt", c_gt, "Optional ground truth for manifest metrics");
    complete->add_flag("--filter", c_filter, "Pre-filter measurements");

    // -- filter --------------------------------------------------------------
    auto* filter = app.add_subcommand("filter", "Prior-based outlier filtering");
    std::string f_relative, f_sparse, f_out_mask, f_out_conf, f_manifest, f_config;
    int f_segments = 200;
    double f_tau = 1.0;
    std::uint64_t f_seed = 0;
    filter->add_option("--relative", f_relative, "Relative depth prior (pfm)")->required();
    filter->add_option("--sparse", f_sparse, "Sparse depth (png16)")->required();
    filter->add_option("--segments", f_segments, "Superpixel count");
    filter->add_option("--tau", f_tau, "Outlier threshold (meters)");
    filter->add_option("--seed", f_seed, "Seed");
    filter->add_option("--out-mask", f_out_mask, "Kept-point mask output (png)")->required();
    filter->add_option("--out-confidence", f_out_conf, "Confidence output (pfm)")->required();
    filter->add_option("--manifest", f_manifest, "Run manifest path (json)");
    filter->add_option("--config", f_config, "key = value config file");

    // -- eval ----------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Evaluate a completed depth map");
    std::string e_pred, e_gt, e_conf, e_report;
    eval->add_option("--pred", e_pred, "Predicted depth")->required();
    eval->add_option("--gt", e_gt, "Ground truth depth")->required();
    eval->add_option("--confidence", e_conf, "Optional confidence (pfm) for AUC");
    eval->add_option("--report", e_report, "Report path (json)")->required();

    // -- ablate --------------------------------------------------------------
    auto* ablate = app.add_subcommand("ablate", "Run sampling-mode ablations on a suite");
    std::string a_suite, a_modes = "naive,guided,aligned", a_report, a_config, a_prior = "affine";
    ablate->add_option("--suite", a_suite, "Suite directory from `synth`")->required();
    ablate->add_option("--modes", a_modes, "Comma list: naive,guided,aligned,aligned+filter");
    ablate->add_option("--report", a_report, "Report path (json)")->required();
    ablate->add_option("--config", a_config, "key = value config file");
    ablate->add_option("--prior", a_prior, "affine|gmrf");

    // -- reconstruct ----------------------------------------------------------
    auto* recon = app.add_subcommand("reconstruct", "Noise a depth map and reverse-sample it");
    std::string r_input, r_prior = "affine", r_out, r_relative, r_config;
    int r_tinv = 0;
    std::uint64_t r_seed = 0;
    recon->add_option("--input", r_input, "Input depth (.png/.pfm)")->required();
    recon->add_option("--prior", r_prior, "affine|gmrf");
    recon->add_option("--t-inv", r_tinv, "Inversion timestep")->required();
    recon->add_option("--out", r_out, "Output depth path")->required();
    recon->add_option("--relative", r_relative, "Reference relative depth for the affine prior");
    recon->add_option("--seed", r_seed, "Seed");
    recon->add_option("--config", r_config, "key = value config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        detail::Timer timer;

        if (synth->parsed()) {
            if (synth_config.empty() == false) apply_config_file(cfg, synth_config);
            if (synth_preset == "indoor") {
                SceneConfig preset = SceneConfig::indoor();
                preset.width = cfg.scene.width;
                preset.height = cfg.scene.height;
                cfg.scene = preset;
                if (!synth_config.empty()) apply_config_file(cfg, synth_config);
            } else if (synth_preset != "outdoor") {
                throw UsageError("unknown preset: " + synth_preset);
            }
            if (!synth_outlier_mode.empty())
                cfg.scene.outlier_mode = parse_outlier_mode(synth_outlier_mode);
            if (synth_outlier_rate >= 0.0) cfg.scene.outlier_rate = synth_outlier_rate;
            if (synth_num < 1) throw UsageError("--num must be >= 1");

            const std::filesystem::path root(synth_out);
            std::filesystem::create_directories(root);
            std::vector<std::future<Scene>> jobs;
            jobs.reserve(static_cast<std::size_t>(synth_num));
            for (int i = 0; i < synth_num; ++i)
                jobs.push_back(std::async(std::launch::async, [&cfg, synth_seed, i]() {
                    return synth_scene(cfg.scene, derive_seed(synth_seed, static_cast<std::uint64_t>(i)));
                }));
            json scenes = json::array();
            for (int i = 0; i < synth_num; ++i) {
                const Scene scene = jobs[static_cast<std::size_t>(i)].get();
                const auto dir = root / detail::scene_dir_name(i);
                detail::save_scene(dir, scene, cfg);
                scenes.push_back(detail::scene_dir_name(i));
            }
            json manifest;
            manifest["version"] = kVersion;
            manifest["seed"] = synth_seed;
            manifest["config"] = config_to_json(cfg);
            manifest["scenes"] = scenes;
            manifest["timings"] = {{"total_ms", timer.elapsed_ms()}};
            write_json((root / "suite.json").string(), manifest);
            return 0;
        }

        if (complete->parsed()) {
            if (c_mode != "naive" && c_mode != "guided" && c_mode != "aligned")
                throw UsageError("--mode must be naive|guided|aligned, got " + c_mode);
            if (c_prior != "affine" && c_prior != "gmrf")
                throw UsageError("--prior must be affine|gmrf, got " + c_prior);
            if (!c_config.empty()) apply_config_file(cfg, c_config);
            cfg.align.seed = c_seed;
            detail::SceneFiles sf;
            sf.sparse = detail::sparse_from_field(read_depth_png16(c_sparse));
            sf.relative = read_depth_pfm(c_relative);
            sf.guidance = read_guidance_png(c_guidance);
            require_same_shape(sf.relative, sf.sparse, "complete");
            if (sf.guidance.width != sf.relative.width || sf.guidance.height != sf.relative.height)
                throw DimensionError("complete: guidance shape mismatch");

            SparseMeasurement measurements = sf.sparse;
            std::size_t kept_count = measurements.count();
            if (c_filter) {
                const FilterResult fr = filter_outliers(
                    sf.relative, sf.sparse, cfg.filter.segments, cfg.filter.tau,
                    cfg.filter.ransac(), c_seed, cfg.filter.compactness, cfg.filter.slic_iters);
                measurements = detail::apply_filter_mask(sf.sparse, fr.kept_mask);
                kept_count = measurements.count();
            }

            const std::unique_ptr<PriorModel> prior =
                detail::build_prior(c_prior, sf.relative, cfg.prior);
            const NoiseSchedule schedule = cfg.schedule.build();
            const AlignResult result = run_mode(parse_mode(c_mode), *prior, measurements,
                                                sf.guidance, sf.relative, schedule, cfg.align);
            write_depth(c_out, result.depth);

            if (!c_manifest.empty()) {
                json manifest;
                manifest["version"] = kVersion;
                manifest["seed"] = c_seed;
                manifest["mode"] = c_mode;
                manifest["prior"] = c_prior;
                manifest["filtered"] = c_filter;
                manifest["measurements_used"] = kept_count;
                manifest["config"] = config_to_json(cfg);
                manifest["clamped_negative"] = result.clamped_negative;
                if (!c_gt.empty()) {
                    const DepthField gt = read_depth(c_gt);
                    manifest["metrics"] = metrics_to_json(evaluate(result.depth, gt));
                }
                manifest["timings"] = {{"total_ms", timer.elapsed_ms()}};
                write_json(c_manifest, manifest);
            }
            return 0;
        }

        if (filter->parsed()) {
            if (!f_config.empty()) apply_config_file(cfg, f_config);
            cfg.filter.segments = f_segments;
            cfg.filter.tau = f_tau;
            const RelativeDepthField relative = read_depth_pfm(f_relative);
            const SparseMeasurement y = detail::sparse_from_field(read_depth_png16(f_sparse));
            require_same_shape(relative, y, "filter");

            const FilterResult fr =
                filter_outliers(relative, y, cfg.filter.segments, cfg.filter.tau,
                                cfg.filter.ransac(), f_seed, cfg.filter.compactness,
                                cfg.filter.slic_iters);

            GuidanceImage mask_img(y.width, y.height, 0.0);
            for (std::size_t i = 0; i < fr.kept_mask.size(); ++i)
                mask_img.intensity[i] = fr.kept_mask[i] ? 1.0 : 0.0;
            write_guidance_png(f_out_mask, mask_img);

            DepthField conf(y.width, y.height, 0.0);
            for (std::size_t i = 0; i < conf.size(); ++i) {
                conf.valid[i] = y.mask[i];
                conf.values[i] = y.mask[i] ? fr.confidence[i] : 0.0;
            }
            write_depth_pfm(f_out_conf, conf);

            if (!f_manifest.empty()) {
                std::size_t kept = 0;
                for (auto k : fr.kept_mask) kept += (k != 0);
                json manifest;
                manifest["version"] = kVersion;
                manifest["seed"] = f_seed;
                manifest["segments"] = cfg.filter.segments;
                manifest["tau"] = cfg.filter.tau;
                manifest["measured"] = y.count();
                manifest["kept"] = kept;
                manifest["config"] = config_to_json(cfg);
                manifest["timings"] = {{"total_ms", timer.elapsed_ms()}};
                write_json(f_manifest, manifest);
            }
            return 0;
        }

        if (eval->parsed()) {
            const DepthField pred = read_depth(e_pred);
            const DepthField gt = read_depth(e_gt);
            MetricReport rep = evaluate(pred, gt, pred.valid);
            if (!e_conf.empty()) {
                const DepthField conf = read_depth_pfm(e_conf);
                require_same_shape(conf, gt, "eval confidence");
                std::vector<double> errors, confidence;
                for (std::size_t i = 0; i < conf.size(); ++i) {
                    if (!conf.valid[i] || !gt.valid[i] || !pred.valid[i]) continue;
                    errors.push_back(std::abs(pred.values[i] - gt.values[i]));
                    confidence.push_back(conf.values[i]);
                }
                rep.extras["auc"] = sparsification_auc(errors, confidence);
            }
            json report;
            report["version"] = kVersion;
            report["metrics"] = metrics_to_json(rep);
            write_json(e_report, report);
            return 0;
        }

        if (ablate->parsed()) {
            if (a_prior != "affine" && a_prior != "gmrf")
                throw UsageError("--prior must be affine|gmrf, got " + a_prior);
            if (!a_config.empty()) apply_config_file(cfg, a_config);
            std::vector<std::string> modes;
            {
                std::string cur;
                for (char ch : a_modes + ",") {
                    if (ch == ',') {
                        if (!cur.empty()) modes.push_back(cur);
                        cur.clear();
                    } else {
                        cur.push_back(ch);
                    }
                }
            }
            if (modes.empty()) throw UsageError("ablate: no modes given");
            for (const auto& m : modes)
                if (m != "naive" && m != "guided" && m != "aligned" && m != "aligned+filter")
                    throw UsageError("ablate: unknown mode " + m);

            const std::filesystem::path root(a_suite);
            std::ifstream suite_in(root / "suite.json");
            if (!suite_in) throw ParameterError("ablate: missing suite.json in " + a_suite);
            const json suite = json::parse(suite_in);

            std::vector<std::string> scene_names;
            for (const auto& s : suite.at("scenes")) scene_names.push_back(s.get<std::string>());

            json per_mode;
            for (const std::string& mode : modes) {
                std::vector<std::future<MetricReport>> jobs;
                for (const std::string& name : scene_names) {
                    jobs.push_back(std::async(std::launch::async, [&, name]() {
                        const detail::SceneFiles sf = detail::load_scene(root / name);
                        const AlignResult res =
                            detail::run_scene_mode(mode, sf, cfg, sf.seed, a_prior);
                        return evaluate(res.depth, sf.gt);
                    }));
                }
                json scenes = json::array();
                double mean_rmse = 0.0, mean_mae = 0.0;
                for (std::size_t i = 0; i < jobs.size(); ++i) {
                    const MetricReport rep = jobs[i].get();
                    json entry = metrics_to_json(rep);
                    entry["scene"] = scene_names[i];
                    scenes.push_back(entry);
                    mean_rmse += rep.rmse;
                    mean_mae += rep.mae;
                }
                per_mode[mode] = {
                    {"scenes", scenes},
                    {"mean_rmse", mean_rmse / static_cast<double>(jobs.size())},
                    {"mean_mae", mean_mae / static_cast<double>(jobs.size())},
                };
            }

            json report;
            report["version"] = kVersion;
            report["suite"] = a_suite;
            report["prior"] = a_prior;
            report["config"] = config_to_json(cfg);
            report["modes"] = per_mode;
            report["timings"] = {{"total_ms", timer.elapsed_ms()}};
            write_json(a_report, report);
            return 0;
        }

        if (recon->parsed()) {
            if (!r_config.empty()) apply_config_file(cfg, r_config);
            const DepthField input = read_depth(r_input);
            RelativeDepthField reference;
            if (!r_relative.empty()) {
                reference = read_depth_pfm(r_relative);
            } else {
                // Affine prior falls back to the normalized input as its own
                // structural reference.
                reference = input;
                double lo = reference.values[0], hi = reference.values[0];
                for (double v : reference.values) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
                for (auto& v : reference.values) v = (v - lo) / span;
            }
            const std::unique_ptr<PriorModel> prior =
                detail::build_prior(r_prior, reference, cfg.prior);
            const NoiseSchedule schedule = cfg.schedule.build();
            DepthField out = reconstruct(*prior, input, r_tinv, schedule, r_seed, Codec{},
                                         cfg.align.num_steps);
            for (auto& v : out.values) v = std::max(0.0, v);
            write_depth(r_out, out);
            return 0;
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "numerical divergence: %s\n", e.what());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    }
    return 1;
}

}  // namespace ddc::cli
