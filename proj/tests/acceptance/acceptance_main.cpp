// Acceptance suite: one PASS/FAIL line per criterion.
//
//   stripedepth_acceptance            run all nine
//   stripedepth_acceptance 3 5 9      run a subset
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "stripedepth/errors.hpp"
#include "stripedepth/eval.hpp"
#include "stripedepth/heatsim.hpp"
#include "stripedepth/model.hpp"
#include "stripedepth/reconstruct.hpp"
#include "stripedepth/training.hpp"

using namespace stripedepth;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Early-time surface rise against the semi-infinite constant-flux solution.

Outcome physics_oracle() {
    const auto t0 = Clock::now();
    heatsim::SpecimenSpec spec;
    heatsim::ExcitationSpec exc;
    const auto curve = heatsim::simulate_pixel(spec, exc, std::nullopt, heatsim::default_grid(spec, exc));
    const double elapsed = seconds_since(t0);

    const double k = spec.material.conductivity;
    const double alpha = heatsim::thermal_diffusivity(spec.material);
    const double q0 = exc.absorbed_flux;
    const double h = exc.convection_coeff;

    double worst_flux = 0.0, worst_conv = 0.0, worst_t = 0.0;
    for (std::size_t n = 0; n < curve.samples.size(); ++n) {
        const double t = static_cast<double>(n) / exc.frame_rate;
        if (t < 0.5 - 1e-9 || t > 5.0 + 1e-9) continue;
        const double rise = curve.samples[n] - exc.ambient_temp;
        const double pure = 2.0 * q0 / k * std::sqrt(alpha * t / std::numbers::pi);
        // Same solid with the front-face convective loss kept.
        const double beta = h * std::sqrt(alpha * t) / k;
        const double conv = q0 / h * (1.0 - std::exp(beta * beta) * std::erfc(beta));
        const double e = std::abs(rise - pure) / pure;
        if (e > worst_flux) {
            worst_flux = e;
            worst_t = t;
        }
        worst_conv = std::max(worst_conv, std::abs(rise - conv) / conv);
    }
    Outcome o;
    o.pass = worst_flux <= 0.02 && elapsed < 10.0;
    o.detail = fmt::format(
        "max rel. error vs constant-flux solution {:.2f}% at t={:.2f} s (limit 2%); "
        "vs solution including front-face convection {:.3f}%; {:.1f} s",
        100.0 * worst_flux, worst_t, 100.0 * worst_conv, elapsed);
    return o;
}

// ---------------------------------------------------------------------------
// 2. Peak contrast falls and peak time grows with depth.

Outcome physics_monotonicity() {
    const auto t0 = Clock::now();
    heatsim::SpecimenSpec spec;
    heatsim::ExcitationSpec exc;
    const auto grid = heatsim::default_grid(spec, exc);
    const auto sound = heatsim::simulate_pixel(spec, exc, std::nullopt, grid);
    std::vector<heatsim::PeakContrast> peaks;
    for (double d : spec.defect_depths) {
        peaks.push_back(heatsim::peak_contrast(heatsim::simulate_pixel(spec, exc, d, grid), sound));
    }
    const double elapsed = seconds_since(t0);
    bool ok = peaks.size() == 9;
    for (std::size_t i = 1; i < peaks.size(); ++i) {
        ok = ok && peaks[i].value < peaks[i - 1].value && peaks[i].time > peaks[i - 1].time;
    }
    Outcome o;
    o.pass = ok && elapsed < 60.0;
    o.detail = fmt::format("contrast {:.2f} K -> {:.2f} K, peak time {:.1f} s -> {:.1f} s; {:.1f} s",
                           peaks.front().value, peaks.back().value, peaks.front().time, peaks.back().time,
                           elapsed);
    return o;
}

// ---------------------------------------------------------------------------
// 3. Stripe round trip, enhancement range and ordering, reproducibility.

Outcome reconstruction_exactness() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> level(0.0, 255.0);
    std::uniform_int_distribution<std::size_t> length(2, 300);
    std::size_t failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = trial < 5 ? 1024 : length(rng);
        reconstruct::PixelCurve c;
        for (std::size_t i = 0; i < n; ++i) c.values.push_back(level(rng));
        const auto img = reconstruct::curve_to_stripe(c);
        for (std::size_t col = 0; col < n; ++col) {
            for (std::size_t row = 0; row < n; ++row) {
                if (img.at(row, col) != c.values[row]) {
                    ++failures;
                    col = n;
                    break;
                }
            }
        }
        const auto enh = reconstruct::log_enhance(img);
        const auto [lo, hi] = std::minmax_element(enh.pixels.begin(), enh.pixels.end());
        if (*lo != 0.0 || *hi != 255.0) ++failures;
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.values[a] < c.values[b]; });
        for (std::size_t i = 1; i < n; ++i) {
            if (enh.at(order[i], 0) < enh.at(order[i - 1], 0)) {
                ++failures;
                break;
            }
        }
        if (reconstruct::log_enhance(img).pixels != enh.pixels) ++failures;
    }

    // Whole pipeline on a realistic-length record, twice per setting.
    reconstruct::PixelCurve raw;
    for (std::size_t i = 0; i < 11000; ++i) {
        const double t = static_cast<double>(i) / 50.0;
        raw.values.push_back(std::round(t < 30 ? 30 + 150 * std::sqrt(t / 30) : 30 + 150 * std::sqrt(30 / t)));
    }
    for (bool enhance : {true, false}) {
        reconstruct::PipelineOptions opts;
        opts.enhance = enhance;
        if (reconstruct::prepare(raw, opts).values != reconstruct::prepare(raw, opts).values) ++failures;
        if (reconstruct::render(raw, opts).pixels != reconstruct::render(raw, opts).pixels) ++failures;
    }
    Outcome o;
    o.pass = failures == 0;
    o.detail = fmt::format("100 random curves, {} violation(s)", failures);
    return o;
}

// ---------------------------------------------------------------------------
// 4. Analytic gradients against central differences with frozen dropout.

Outcome gradient_suite() {
    const auto t0 = Clock::now();
    std::mt19937_64 data_rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::map<std::string, double> worst;
    std::size_t checked = 0;

    for (bool rrh : {true, false}) {
        model::ModelConfig cfg;
        cfg.input_side = 16;
        cfg.use_rrh = rrh;
        const model::Model m(cfg);
        ParamSet params = m.init_params(21, 0.8);
        std::vector<model::Sample> samples(2);
        for (std::size_t s = 0; s < samples.size(); ++s) {
            samples[s].input.side = 16;
            for (int i = 0; i < 256; ++i) samples[s].input.values.push_back(u(data_rng));
            samples[s].target = 0.4 + 0.7 * static_cast<double>(s);
        }
        const model::Batch batch{&samples[0], &samples[1]};

        for (double lambda : {0.0, 0.5, 1.0}) {
            std::mt19937_64 rng(5);
            std::vector<model::DropoutMask> masks;
            const auto lg = m.gradients(params, batch, lambda, rng, &masks);
            std::mt19937_64 pick(17);
            for (const auto& e : params.entries()) {
                const std::size_t size = e.tensor.size();
                std::vector<std::size_t> idx;
                if (size <= 48) {
                    for (std::size_t i = 0; i < size; ++i) idx.push_back(i);
                } else {
                    std::uniform_int_distribution<std::size_t> any(0, size - 1);
                    for (int i = 0; i < 48; ++i) idx.push_back(any(pick));
                }
                for (std::size_t i : idx) {
                    const double h = 1e-4;
                    ParamSet plus = params, minus = params;
                    plus.at(e.name).data[i] += h;
                    minus.at(e.name).data[i] -= h;
                    const double fd =
                        (m.batch_loss(plus, batch, lambda, &masks) - m.batch_loss(minus, batch, lambda, &masks)) /
                        (2 * h);
                    const double an = lg.grads.at(e.name).data[i];
                    const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
                    const std::string key = (rrh ? "" : "plain:") + e.name;
                    worst[key] = std::max(worst[key], err);
                    ++checked;
                }
            }
        }
    }
    const double elapsed = seconds_since(t0);
    double overall = 0.0;
    std::string worst_group;
    for (const auto& [name, err] : worst) {
        if (err >= overall) {
            overall = err;
            worst_group = name;
        }
    }
    Outcome o;
    o.pass = overall < 1e-4 && elapsed < 60.0;
    o.detail = fmt::format("{} groups, {} coordinates, worst rel. error {:.2e} ({}); {:.1f} s", worst.size(),
                           checked, overall, worst_group, elapsed);
    return o;
}

// ---------------------------------------------------------------------------
// 5. Scheduler traces, zero-gradient AdamW, clipping bound.

Outcome optimizer_traces() {
    auto run = [](const std::vector<double>& losses) {
        training::SchedulerState s;
        for (double l : losses) s = training::scheduler_step(s, l, training::SchedulerConfig{});
        return s.lr;
    };
    std::vector<std::string> broken;
    if (run({1.0, 0.9, 0.8}) != 1e-3) broken.push_back("monotone trace");
    if (run({1.0, 1.0, 1.0, 1.0, 1.0, 1.0}) != 5e-4) broken.push_back("stagnant trace");
    if (run({1.0, 0.99, 0.99, 0.99, 0.99, 0.99, 0.99}) != 5e-4) broken.push_back("reset trace");
    if (run({1.0, 0.99, 0.99, 0.99, 0.99, 0.99}) != 1e-3) broken.push_back("reset trace (early)");

    ParamSet p;
    p.add("w", {3}).data = {1.0, -0.25, 3.5};
    const ParamSet start = p;
    training::OptimizerState state = training::OptimizerState::zeros_like(p);
    training::adamw_step(p, p.zeros_like(), state, 1e-3, 1e-4);
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = start.at("w").data[i] * 0.9999999;
        if (std::abs(p.at("w").data[i] - expected) > 1e-15 * std::abs(expected)) broken.push_back("adamw closed form");
    }

    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 5.0);
    double max_norm = 0.0;
    for (int t = 0; t < 1000; ++t) {
        ParamSet g;
        for (double& v : g.add("a", {40}).data) v = n(rng);
        for (double& v : g.add("b", {3, 3}).data) v = n(rng) * (t % 3);
        training::clip_gradients(g, 1.0);
        max_norm = std::max(max_norm, g.global_norm());
    }
    if (max_norm > 1.0 + 1e-12) broken.push_back("clip bound");

    Outcome o;
    o.pass = broken.empty();
    o.detail = broken.empty() ? fmt::format("traces exact, max clipped norm {:.15f}", max_norm)
                              : fmt::format("failed: {}", fmt::join(broken, ", "));
    return o;
}

// ---------------------------------------------------------------------------
// 6. Metrics against a brute-force oracle.

Outcome metric_oracle() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> depth(0.2, 1.6);
    std::normal_distribution<double> noise(0.0, 0.04);
    std::uniform_int_distribution<std::size_t> len(2, 400);
    const std::vector<double> depths{0.24, 0.40, 0.56, 0.72, 0.88, 1.04, 1.20, 1.36, 1.52};
    std::uniform_int_distribution<std::size_t> which(0, 8);

    double worst = 0.0, worst_recombine = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = len(rng);
        std::vector<double> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = trial % 2 ? depths[which(rng)] : depth(rng);
            p[i] = y[i] + noise(rng);
        }
        long double sq = 0, ab = 0, pct = 0, mean = 0, tot = 0;
        for (double v : y) mean += v;
        mean /= n;
        for (std::size_t i = 0; i < n; ++i) {
            const long double r = static_cast<long double>(p[i]) - y[i];
            sq += r * r;
            ab += std::fabs(r);
            pct += std::fabs(r) / std::fabs(static_cast<long double>(y[i]));
            tot += (y[i] - mean) * (y[i] - mean);
        }
        const auto m = eval::metrics(p, y);
        worst = std::max({worst, rel(m.rmse, static_cast<double>(std::sqrt(sq / n))),
                          rel(m.mae_um, static_cast<double>(1000.0L * ab / n)),
                          rel(*m.mape_pct, static_cast<double>(100.0L * pct / n)),
                          rel(*m.r2, static_cast<double>(1.0L - sq / tot))});
        if (trial % 2) {
            const auto report = eval::per_depth_report(p, y, depths);
            double weighted = 0.0;
            std::size_t count = 0;
            for (const auto& row : report.per_depth) {
                weighted += row.mae_um * static_cast<double>(row.count);
                count += row.count;
            }
            worst_recombine =
                std::max(worst_recombine, std::abs(weighted / static_cast<double>(count) - report.overall.mae_um));
        }
    }
    Outcome o;
    o.pass = worst <= 1e-12 && worst_recombine <= 1e-9;
    o.detail = fmt::format("worst rel. deviation {:.2e} (limit 1e-12); recombination gap {:.2e} um (limit 1e-9)",
                           worst, worst_recombine);
    return o;
}

// ---------------------------------------------------------------------------
// 7. Desk-scale end-to-end run.

heatsim::Dataset desk_dataset(std::uint64_t seed) {
    heatsim::GenerationOptions gen;
    gen.pixels_per_depth = 45;
    gen.master_seed = seed;
    return heatsim::generate_dataset(heatsim::SpecimenSpec{}, heatsim::ExcitationSpec{}, heatsim::CameraSpec{}, gen);
}

Outcome end_to_end() {
    const auto t0 = Clock::now();
    const heatsim::Dataset ds = desk_dataset(0);
    reconstruct::PipelineOptions pipeline;  // 64x64, enhancement on
    const auto samples = eval::build_samples(ds, pipeline);
    const model::Model m(model::ModelConfig{});
    training::TrainConfig cfg;  // lr 1e-3, wd 1e-4, batch 8, 100 epochs, clip 1.0
    const auto outcome = training::train(m, cfg, samples);
    const auto test = training::gather(samples, outcome.split.test);
    const auto pred = training::predict(m, outcome.result.best_params, test);
    std::vector<double> truth;
    for (const auto& s : test) truth.push_back(s.target);
    std::vector<double> depths_mm;
    for (double d : ds.depths) depths_mm.push_back(d * 1000.0);
    const auto report = eval::per_depth_report(pred, truth, depths_mm);
    const double elapsed = seconds_since(t0);

    const double r2 = report.overall.r2.value_or(-1.0);
    Outcome o;
    o.pass = r2 >= 0.95 && report.overall.mae_um <= 30.0 && elapsed <= 900.0;
    o.detail = fmt::format("test n={} R2={:.4f} (>=0.95) MAE={:.2f} um (<=30) best epoch {}; {:.0f} s",
                           report.overall.count, r2, report.overall.mae_um, outcome.result.best_epoch, elapsed);
    return o;
}

// ---------------------------------------------------------------------------
// 8. Ablation direction over five seeds.

Outcome ablation_grid() {
    const auto t0 = Clock::now();
    int wins = 0;
    bool structure_ok = true;
    std::vector<std::string> per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const heatsim::Dataset ds = desk_dataset(seed);
        eval::AblationConfig cfg;
        cfg.training.seed = seed;
        const eval::AblationGrid grid = eval::run_ablation(cfg, ds);
        for (int i = 0; i < 4; ++i) {
            const auto& arm = grid.arms[static_cast<std::size_t>(i)];
            structure_ok = structure_ok && arm.arm == i + 1 && arm.report.overall.count == grid.split.test.size();
        }
        const double mae1 = grid.arms[0].report.overall.mae_um;
        const double mae4 = grid.arms[3].report.overall.mae_um;
        wins += mae4 <= mae1 ? 1 : 0;
        per_seed.push_back(fmt::format("s{}: {:.1f}/{:.1f}/{:.1f}/{:.1f}", seed, mae1,
                                       grid.arms[1].report.overall.mae_um, grid.arms[2].report.overall.mae_um, mae4));
        std::fprintf(stderr, "  ablation seed %llu done (%.0f s)\n", static_cast<unsigned long long>(seed),
                     seconds_since(t0));
    }
    Outcome o;
    o.pass = structure_ok && wins >= 4;
    o.detail = fmt::format("arm 4 <= arm 1 in {}/5 seeds (need 4); test MAE um arms 1/2/3/4 {}; {:.0f} s", wins,
                           fmt::join(per_seed, "; "), seconds_since(t0));
    return o;
}

// ---------------------------------------------------------------------------
// 9. Split sizes, stratification and determinism.

Outcome split_determinism() {
    std::vector<std::size_t> cls;
    for (std::size_t d = 0; d < 9; ++d) cls.insert(cls.end(), 197, d);
    const auto a = training::split_dataset(cls, training::SplitRatios{}, 42);
    const auto b = training::split_dataset(cls, training::SplitRatios{}, 42);
    bool stratified = true;
    for (const auto* part : {&a.train, &a.val, &a.test}) {
        std::set<std::size_t> seen;
        for (std::size_t i : *part) seen.insert(cls[i]);
        stratified = stratified && seen.size() == 9;
    }
    const bool sizes = a.train.size() == 1241 && a.val.size() == 265 && a.test.size() == 267;
    const bool same = a.train == b.train && a.val == b.val && a.test == b.test;
    Outcome o;
    o.pass = sizes && stratified && same;
    o.detail = fmt::format("{}/{}/{}, all nine depths in every split: {}, identical reruns: {}", a.train.size(),
                           a.val.size(), a.test.size(), stratified ? "yes" : "no", same ? "yes" : "no");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"physics oracle", physics_oracle},
        {"physics monotonicity", physics_monotonicity},
        {"reconstruction exactness", reconstruction_exactness},
        {"gradient suite", gradient_suite},
        {"optimizer/scheduler traces", optimizer_traces},
        {"metric oracle", metric_oracle},
        {"end-to-end desk scale", end_to_end},
        {"ablation grid", ablation_grid},
        {"split determinism", split_determinism},
    };

    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = Outcome{false, std::string("error: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %d [%s] %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
