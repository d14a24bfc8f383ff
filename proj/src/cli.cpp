#include "stripedepth/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "stripedepth/errors.hpp"
#include "stripedepth/eval.hpp"
#include "stripedepth/io.hpp"
#include "stripedepth/pgm.hpp"

namespace stripedepth::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

/// Binds a flag to a local and copies it into `dst` only when it was given.
template <typename T>
struct Override {
    T value{};
    CLI::Option* opt = nullptr;

    void add(CLI::App& app, const std::string& name, const std::string& help) {
        opt = app.add_option(name, value, help);
    }
    void apply(T& dst) const {
        if (opt && opt->count() > 0) dst = value;
    }
    bool given() const { return opt && opt->count() > 0; }
};

struct GlobalArgs {
    Override<std::uint64_t> seed;
    std::string config;
    std::string out;
};

struct SimulateArgs {
    Override<std::size_t> pixels_per_depth;
};

struct PipelineArgs {
    Override<std::size_t> stride, target_len, input_size, smooth_window, poly_degree;
    CLI::Option* no_enhance = nullptr;

    void add(CLI::App& app) {
        stride.add(app, "--stride", "Keep every n-th frame");
        target_len.add(app, "--target-len", "Frames kept after subsampling");
        input_size.add(app, "--input-size", "Side of the square model input");
        smooth_window.add(app, "--smooth-window", "Moving-average window");
        poly_degree.add(app, "--poly-degree", "Degree of the log-time polynomial fit");
        no_enhance = app.add_flag("--no-enhance", "Skip the logarithmic enhancement");
    }
    void apply(reconstruct::PipelineOptions& p) const {
        stride.apply(p.stride);
        target_len.apply(p.target_len);
        input_size.apply(p.input_size);
        smooth_window.apply(p.smooth_window);
        poly_degree.apply(p.poly_degree);
        if (no_enhance && no_enhance->count() > 0) p.enhance = false;
    }
};

struct TrainArgs {
    Override<std::size_t> epochs, batch_size, patience;
    Override<double> lr, weight_decay, lambda, clip, factor, min_improve, dropout;
    CLI::Option* no_rrh = nullptr;

    void add(CLI::App& app) {
        epochs.add(app, "--epochs", "Training epochs");
        lr.add(app, "--lr", "Initial learning rate");
        weight_decay.add(app, "--weight-decay", "Decoupled weight decay");
        batch_size.add(app, "--batch-size", "Minibatch size");
        lambda.add(app, "--lambda", "MSE weight in the hybrid loss");
        clip.add(app, "--clip-max-norm", "Global gradient norm limit");
        factor.add(app, "--sched-factor", "Learning-rate reduction factor");
        patience.add(app, "--sched-patience", "Epochs without improvement before reducing");
        min_improve.add(app, "--sched-min-improve", "Minimum validation improvement");
        dropout.add(app, "--dropout", "Head dropout probability");
        no_rrh = app.add_flag("--no-rrh", "Use a single linear head instead of the residual head");
    }
    void apply(training::TrainConfig& t, model::ModelConfig& m) const {
        epochs.apply(t.epochs);
        lr.apply(t.lr);
        weight_decay.apply(t.weight_decay);
        batch_size.apply(t.batch_size);
        lambda.apply(t.lambda);
        clip.apply(t.clip_max_norm);
        factor.apply(t.scheduler.factor);
        patience.apply(t.scheduler.patience);
        min_improve.apply(t.scheduler.min_improve);
        dropout.apply(m.dropout);
        if (no_rrh && no_rrh->count() > 0) m.use_rrh = false;
    }
};

void emit(const Json& summary) { std::cout << summary.dump() << std::endl; }

fs::path require_out(const GlobalArgs& g) {
    if (g.out.empty()) throw ConfigError("--out is required");
    const fs::path out(g.out);
    io::ensure_output_dir(out);
    return out;
}

std::optional<Json> config_doc(const GlobalArgs& g) {
    if (g.config.empty()) return std::nullopt;
    return io::read_json(g.config);
}

Json split_json(const training::Split& split, const io::PreparedDataset& ds, std::uint64_t seed) {
    auto stems = [&](const std::vector<std::size_t>& idx) {
        Json arr = Json::array();
        for (std::size_t i : idx) {
            const auto& e = ds.entries[i];
            arr.push_back(Json{{"index", i}, {"stem", io::sample_stem(e.depth_m, e.pixel_index)}});
        }
        return arr;
    };
    return Json{{"format_version", io::kFormatVersion},
                {"kind", "split"},
                {"seed", seed},
                {"train", stems(split.train)},
                {"val", stems(split.val)},
                {"test", stems(split.test)}};
}

std::vector<std::size_t> split_indices(const Json& doc, const std::string& subset, std::size_t n) {
    if (doc.value("kind", std::string()) != "split") throw ConfigError("not a split file");
    std::vector<std::size_t> out;
    try {
        for (const auto& e : doc.at(subset)) {
            const auto i = e.at("index").get<std::size_t>();
            if (i >= n) throw ConfigError("split index " + std::to_string(i) + " is out of range");
            out.push_back(i);
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed split file: ") + e.what());
    }
    return out;
}

std::vector<double> to_mm(const std::vector<double>& metres) {
    std::vector<double> mm;
    for (double d : metres) mm.push_back(d * 1000.0);
    return mm;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const GlobalArgs& g, const SimulateArgs& a) {
    io::SimConfig cfg;
    if (auto doc = config_doc(g)) cfg = io::parse_sim_config(*doc);
    g.seed.apply(cfg.generation.master_seed);
    a.pixels_per_depth.apply(cfg.generation.pixels_per_depth);
    const fs::path out = require_out(g);

    spdlog::info("simulating {} depths x {} pixels", cfg.specimen.defect_depths.size(),
                 cfg.generation.pixels_per_depth);
    const heatsim::Dataset ds =
        heatsim::generate_dataset(cfg.specimen, cfg.excitation, cfg.camera, cfg.generation);
    const Json manifest = io::write_dataset(out, ds, cfg);

    io::RunManifest run("simulate", io::to_json(cfg), cfg.generation.master_seed);
    if (!g.config.empty()) run.add_input(g.config, out);
    for (const auto& c : manifest.at("curves")) run.add_output(out / c.at("file").get<std::string>(), out);
    run.add_output(out / "manifest.json", out);
    run.write(out / "run_manifest.json");

    emit(Json{{"command", "simulate"},
              {"out", out.generic_string()},
              {"curves", ds.curves.size()},
              {"calib_min", ds.calibration.min},
              {"calib_max", ds.calibration.max}});
    return kOk;
}

int cmd_prepare(const GlobalArgs& g, const PipelineArgs& a, const std::string& data) {
    reconstruct::PipelineOptions pipeline;
    if (auto doc = config_doc(g)) pipeline = io::parse_pipeline(*doc);
    a.apply(pipeline);
    const fs::path src(data);
    const heatsim::Dataset ds = io::read_dataset(src);
    const fs::path out = require_out(g);
    io::ensure_output_dir(out / "images");

    spdlog::info("rendering {} curves at {}x{}", ds.curves.size(), pipeline.input_size,
                 pipeline.input_size);
    Json images = Json::array();
    io::RunManifest run("prepare", io::to_json(pipeline), g.seed.given() ? g.seed.value : 0);
    run.add_input(src / "manifest.json", out);
    for (const auto& lc : ds.curves) {
        const double depth = *lc.curve.label_depth;
        const std::string rel = "images/" + io::sample_stem(depth, lc.pixel_index) + ".pgm";
        try {
            pgm::write(out / rel, reconstruct::render(lc.curve, pipeline));
        } catch (const Error& e) {
            throw Error(e.kind(), rel + ": " + e.what());
        }
        images.push_back(Json{{"file", rel},
                              {"depth_m", depth},
                              {"depth_index", lc.depth_index},
                              {"pixel_index", lc.pixel_index}});
        run.add_output(out / rel, out);
    }
    const Json manifest{{"format_version", io::kFormatVersion},
                        {"kind", "stripes"},
                        {"tool_version", io::kToolVersion},
                        {"source_manifest_sha256", io::sha256_file(src / "manifest.json")},
                        {"pipeline", io::to_json(pipeline)},
                        {"depths_m", ds.depths},
                        {"images", images}};
    io::write_text(out / "manifest.json", io::dump(manifest));
    run.add_output(out / "manifest.json", out);
    run.write(out / "run_manifest.json");

    emit(Json{{"command", "prepare"}, {"out", out.generic_string()}, {"images", ds.curves.size()}});
    return kOk;
}

int cmd_train(const GlobalArgs& g, const TrainArgs& a, const std::string& data) {
    io::TrainRunConfig cfg;
    if (auto doc = config_doc(g)) cfg = io::parse_train_config(*doc);
    g.seed.apply(cfg.training.seed);
    a.apply(cfg.training, cfg.model);

    const fs::path src(data);
    const io::PreparedDataset prepared = io::read_prepared_manifest(src);
    cfg.model.input_side = prepared.pipeline.input_size;
    cfg.model.validate();
    cfg.training.validate();
    const fs::path out = require_out(g);

    const auto samples = io::load_prepared_samples(src, prepared);
    spdlog::info("training on {} samples for {} epochs", samples.size(), cfg.training.epochs);
    const model::Model model(cfg.model);
    const training::TrainOutcome outcome = training::train(model, cfg.training, samples);
    for (const auto& r : outcome.result.history) {
        spdlog::debug("epoch {} train {:.6g} val {:.6g} lr {:.3g}", r.epoch, r.train_loss, r.val_loss, r.lr);
    }

    io::Checkpoint best{cfg.model, cfg.training, prepared.pipeline, outcome.result.best_params,
                        outcome.result.best_epoch};
    io::Checkpoint last = best;
    last.params = outcome.result.final_params;
    last.best_epoch = outcome.result.history.size();

    io::write_text(out / "checkpoint.json", io::dump(io::checkpoint_json(best)));
    io::write_text(out / "checkpoint_final.json", io::dump(io::checkpoint_json(last)));
    io::write_text(out / "loss_history.csv", io::loss_history_csv(outcome.result.history));
    io::write_text(out / "split.json", io::dump(split_json(outcome.split, prepared, cfg.training.seed)));

    io::RunManifest run("train",
                        Json{{"training", io::to_json(cfg.training)}, {"model", io::to_json(cfg.model)}},
                        cfg.training.seed);
    run.add_input(src / "manifest.json", out);
    for (const char* f : {"checkpoint.json", "checkpoint_final.json", "loss_history.csv", "split.json"}) {
        run.add_output(out / f, out);
    }
    run.write(out / "run_manifest.json");

    Json summary{{"command", "train"},
                 {"out", out.generic_string()},
                 {"epochs", outcome.result.history.size()},
                 {"best_epoch", outcome.result.best_epoch}};
    if (!outcome.result.history.empty()) {
        summary["best_val_loss"] = outcome.result.history[outcome.result.best_epoch - 1].val_loss;
    }
    emit(summary);
    return kOk;
}

int cmd_eval(const GlobalArgs& g, const std::string& data, const std::string& checkpoint,
             std::string split_path, const std::string& subset) {
    const fs::path ckpt_path(checkpoint);
    const io::Checkpoint ckpt = io::parse_checkpoint(io::read_json(ckpt_path));
    const fs::path src(data);
    const io::PreparedDataset prepared = io::read_prepared_manifest(src);
    if (io::to_json(prepared.pipeline) != io::to_json(ckpt.pipeline)) {
        throw ConfigError("checkpoint was trained on a different preprocessing pipeline than " + data);
    }
    if (split_path.empty()) split_path = (ckpt_path.parent_path() / "split.json").string();
    const fs::path out = require_out(g);

    const auto samples = io::load_prepared_samples(src, prepared);
    std::vector<std::size_t> idx;
    if (subset == "all") {
        idx.resize(samples.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    } else {
        idx = split_indices(io::read_json(split_path), subset, samples.size());
    }
    const auto chosen = training::gather(samples, idx);
    const model::Model model(ckpt.model);
    const auto pred = training::predict(model, ckpt.params, chosen);
    std::vector<double> truth;
    for (const auto& s : chosen) truth.push_back(s.target);
    const eval::EvalReport report = eval::per_depth_report(pred, truth, to_mm(prepared.depths_m));

    io::write_text(out / "report_overall.csv", eval::overall_csv(report.overall));
    io::write_text(out / "report_per_depth.csv", eval::per_depth_csv(report));
    io::write_text(out / "report.txt", eval::render_text(report));

    io::RunManifest run("eval", Json{{"subset", subset}, {"checkpoint_seed", ckpt.training.seed}},
                        ckpt.training.seed);
    run.add_input(ckpt_path, out);
    run.add_input(src / "manifest.json", out);
    if (subset != "all") run.add_input(split_path, out);
    for (const char* f : {"report_overall.csv", "report_per_depth.csv", "report.txt"}) {
        run.add_output(out / f, out);
    }
    run.write(out / "run_manifest.json");

    Json summary{{"command", "eval"},
                 {"out", out.generic_string()},
                 {"count", report.overall.count},
                 {"rmse_mm", report.overall.rmse},
                 {"mae_um", report.overall.mae_um},
                 {"depth_rows", report.per_depth.size()}};
    summary["r2"] = report.overall.r2 ? Json(*report.overall.r2) : Json(nullptr);
    emit(summary);
    return kOk;
}

int cmd_ablate(const GlobalArgs& g, const PipelineArgs& p, const TrainArgs& a, const std::string& data) {
    eval::AblationConfig cfg;
    if (auto doc = config_doc(g)) {
        if (!doc->is_object()) throw ConfigError("ablation config must be a JSON object");
        for (const auto& [k, v] : doc->items()) {
            if (k == "training") {
                cfg.training = io::parse_training(v);
            } else if (k == "model") {
                cfg.model = io::parse_model(v);
            } else if (k == "pipeline") {
                cfg.pipeline = io::parse_pipeline(v);
            } else {
                throw ConfigError("unknown field " + k);
            }
        }
    }
    g.seed.apply(cfg.training.seed);
    p.apply(cfg.pipeline);
    a.apply(cfg.training, cfg.model);
    cfg.model.input_side = cfg.pipeline.input_size;
    cfg.model.validate();
    cfg.training.validate();

    const fs::path src(data);
    const heatsim::Dataset ds = io::read_dataset(src);
    const fs::path out = require_out(g);
    spdlog::info("ablation over {} curves, seed {}", ds.curves.size(), cfg.training.seed);
    const eval::AblationGrid grid = eval::run_ablation(cfg, ds);

    io::RunManifest run("ablate",
                        Json{{"training", io::to_json(cfg.training)},
                             {"model", io::to_json(cfg.model)},
                             {"pipeline", io::to_json(cfg.pipeline)}},
                        cfg.training.seed);
    run.add_input(src / "manifest.json", out);
    auto put = [&](const std::string& name, const std::string& text) {
        io::write_text(out / name, text);
        run.add_output(out / name, out);
    };
    put("ablation.csv", eval::ablation_csv(grid));
    put("ablation.txt", eval::render_text(grid.arms));
    Json arms = Json::array();
    for (const auto& arm : grid.arms) {
        const std::string stem = "arm" + std::to_string(arm.arm);
        put(stem + "_overall.csv", eval::overall_csv(arm.report.overall));
        put(stem + "_per_depth.csv", eval::per_depth_csv(arm.report));
        arms.push_back(Json{{"arm", arm.arm}, {"mae_um", arm.report.overall.mae_um}});
    }
    Json split{{"seed", cfg.training.seed},
               {"train", grid.split.train},
               {"val", grid.split.val},
               {"test", grid.split.test}};
    put("split.json", io::dump(split));
    run.write(out / "run_manifest.json");

    emit(Json{{"command", "ablate"}, {"out", out.generic_string()}, {"arms", arms}});
    return kOk;
}

int cmd_report(const std::string& dir) {
    const fs::path d(dir);
    bool found = false;
    if (fs::exists(d / "report_overall.csv") && fs::exists(d / "report_per_depth.csv")) {
        eval::EvalReport r;
        r.overall = eval::parse_overall_csv(io::read_text(d / "report_overall.csv"));
        r.per_depth = eval::parse_per_depth_csv(io::read_text(d / "report_per_depth.csv"));
        std::cout << eval::render_text(r);
        found = true;
    }
    if (fs::exists(d / "ablation.csv")) {
        if (found) std::cout << "\n";
        const auto arms = eval::parse_ablation_csv(io::read_text(d / "ablation.csv"));
        std::cout << eval::render_text(arms);
        found = true;
    }
    if (!found) throw IoError("no report CSVs found in " + d.string());
    return kOk;
}

int exit_code_for(Error::Kind kind) {
    switch (kind) {
        case Error::Kind::Config: return kConfig;
        case Error::Kind::Io: return kIo;
        case Error::Kind::Simulation: return kSimulation;
        case Error::Kind::NonFinite: return kNonFinite;
        case Error::Kind::Reconstruction:
        case Error::Kind::Model:
        case Error::Kind::Training:
        case Error::Kind::Evaluation: return kProcessing;
    }
    return kInternal;
}

void setup_logging() {
    auto logger = std::make_shared<spdlog::logger>("stripedepth", std::make_shared<spdlog::sinks::stderr_sink_st>());
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::info);
    if (const char* env = std::getenv("STRIPEDEPTH_LOG")) logger->set_level(spdlog::level::from_str(env));
    spdlog::set_default_logger(logger);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    setup_logging();

    CLI::App app{"Defect depth estimation from simulated long-pulse thermography", "stripedepth"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", io::kToolVersion);

    GlobalArgs g;
    g.seed.add(app, "--seed", "Master seed");
    app.add_option("--config", g.config, "JSON configuration file");
    app.add_option("--out", g.out, "Output directory");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate labelled pixel temperature curves");
    sim.pixels_per_depth.add(*simulate, "--pixels-per-depth", "Curves per defect depth");

    PipelineArgs prep_args;
    std::string prep_data;
    auto* prepare = app.add_subcommand("prepare", "Render curves into stripe images");
    prepare->add_option("--data", prep_data, "Curve dataset directory")->required();
    prep_args.add(*prepare);

    TrainArgs train_args;
    std::string train_data;
    auto* train = app.add_subcommand("train", "Train the depth regressor");
    train->add_option("--data", train_data, "Prepared image directory")->required();
    train_args.add(*train);

    std::string eval_data, eval_ckpt, eval_split, eval_subset = "test";
    auto* evaluate = app.add_subcommand("eval", "Evaluate a checkpoint");
    evaluate->add_option("--data", eval_data, "Prepared image directory")->required();
    evaluate->add_option("--checkpoint", eval_ckpt, "Checkpoint JSON")->required();
    evaluate->add_option("--split", eval_split, "Split file (default: split.json next to the checkpoint)");
    evaluate->add_option("--subset", eval_subset, "Split subset to evaluate")
        ->check(CLI::IsMember({"train", "val", "test", "all"}));

    PipelineArgs abl_pipeline;
    TrainArgs abl_train;
    std::string abl_data;
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate the four enhancement/head arms");
    ablate->add_option("--data", abl_data, "Curve dataset directory")->required();
    abl_pipeline.add(*ablate);
    abl_train.add(*ablate);

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Print report tables from a results directory");
    report->add_option("dir", report_dir, "Directory holding report or ablation CSVs")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*simulate) return cmd_simulate(g, sim);
        if (*prepare) return cmd_prepare(g, prep_args, prep_data);
        if (*train) return cmd_train(g, train_args, train_data);
        if (*evaluate) return cmd_eval(g, eval_data, eval_ckpt, eval_split, eval_subset);
        if (*ablate) return cmd_ablate(g, abl_pipeline, abl_train, abl_data);
        if (*report) return cmd_report(report_dir);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return kInternal;
    }
    return kInternal;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace stripedepth::cli
