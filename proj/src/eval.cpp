#include "stripedepth/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stripedepth/errors.hpp"

namespace stripedepth::eval {
namespace {

constexpr double kDepthTolerance = 1e-6;  // mm

void check_pair(std::span<const double> pred, std::span<const double> truth) {
    if (pred.empty() || pred.size() != truth.size()) {
        throw EmptyBatch("metrics need equal, non-zero lengths (got " + std::to_string(pred.size()) +
                         " and " + std::to_string(truth.size()) + ")");
    }
}

std::string opt_number(const std::optional<double>& v) {
    return v ? fmt::format("{:.10g}", *v) : std::string("undefined");
}

std::optional<double> parse_opt(const std::string& s) {
    if (s == "undefined" || s.empty()) return std::nullopt;
    return std::stod(s);
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::vector<std::vector<std::string>> csv_body(const std::string& text, std::size_t columns,
                                               const char* what) {
    auto rows = split_csv(text);
    if (rows.empty()) throw IoError(std::string(what) + ": empty CSV");
    rows.erase(rows.begin());
    for (const auto& r : rows) {
        if (r.size() != columns) throw IoError(std::string(what) + ": wrong column count");
    }
    return rows;
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth);
    double ss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - truth[i];
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

double mape(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 0.0) throw ZeroTarget("MAPE undefined: target " + std::to_string(i) + " is zero");
        s += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
    }
    return 100.0 * s / static_cast<double>(pred.size());
}

double r_squared(std::span<const double> pred, std::span<const double> truth) {
    check_pair(pred, truth);
    double mean = 0.0;
    for (double y : truth) mean += y;
    mean /= static_cast<double>(truth.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - truth[i];
        const double d = truth[i] - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) throw ZeroVariance("R^2 undefined: all targets are equal");
    return 1.0 - ss_res / ss_tot;
}

OverallMetrics metrics(std::span<const double> pred, std::span<const double> truth) {
    OverallMetrics m;
    m.rmse = rmse(pred, truth);
    m.mae_um = mae(pred, truth) * 1000.0;
    m.count = pred.size();
    try {
        m.mape_pct = mape(pred, truth);
    } catch (const ZeroTarget&) {
        m.mape_pct.reset();
    }
    try {
        m.r2 = r_squared(pred, truth);
    } catch (const ZeroVariance&) {
        m.r2.reset();
    }
    return m;
}

EvalReport per_depth_report(std::span<const double> pred, std::span<const double> truth,
                            std::span<const double> depths_mm) {
    check_pair(pred, truth);
    std::vector<double> depths(depths_mm.begin(), depths_mm.end());
    std::sort(depths.begin(), depths.end());

    std::vector<std::vector<std::size_t>> groups(depths.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto it = std::find_if(depths.begin(), depths.end(), [&](double d) {
            return std::abs(d - truth[i]) <= kDepthTolerance;
        });
        if (it == depths.end()) {
            throw UnknownDepth(fmt::format("target depth {} mm is not a configured depth", truth[i]));
        }
        groups[static_cast<std::size_t>(it - depths.begin())].push_back(i);
    }

    EvalReport report;
    report.overall = metrics(pred, truth);
    for (std::size_t g = 0; g < depths.size(); ++g) {
        if (groups[g].empty()) continue;
        std::vector<double> p;
        std::vector<double> t;
        for (std::size_t i : groups[g]) {
            p.push_back(pred[i]);
            t.push_back(truth[i]);
        }
        DepthRow row;
        row.depth_mm = depths[g];
        row.mae_um = mae(p, t) * 1000.0;
        row.mape_pct = mape(p, t);
        double sum = 0.0;
        for (double v : p) sum += v;
        row.mean_pred_mm = sum / static_cast<double>(p.size());
        row.count = p.size();
        report.per_depth.push_back(row);
    }
    return report;
}

std::vector<model::Sample> build_samples(const heatsim::Dataset& dataset,
                                         const reconstruct::PipelineOptions& pipeline) {
    std::vector<model::Sample> out;
    out.reserve(dataset.curves.size());
    for (const auto& lc : dataset.curves) {
        if (!lc.curve.label_depth) throw ConfigError("dataset curve without a depth label");
        model::Sample s;
        s.input = reconstruct::prepare(lc.curve, pipeline);
        s.target = *lc.curve.label_depth * 1000.0;
        s.depth_index = lc.depth_index;
        out.push_back(std::move(s));
    }
    return out;
}

AblationGrid run_ablation(const AblationConfig& base, const heatsim::Dataset& dataset) {
    std::vector<double> depths_mm;
    for (double d : dataset.depths) depths_mm.push_back(d * 1000.0);

    AblationGrid grid;
    std::vector<model::Sample> samples_by_enhance[2];
    for (int arm = 1; arm <= 4; ++arm) {
        const bool enhance = arm == 2 || arm == 4;
        const bool rrh = arm >= 3;
        auto& samples = samples_by_enhance[enhance ? 1 : 0];
        if (samples.empty()) {
            reconstruct::PipelineOptions pipeline = base.pipeline;
            pipeline.enhance = enhance;
            samples = build_samples(dataset, pipeline);
        }
        model::ModelConfig mc = base.model;
        mc.use_rrh = rrh;
        const model::Model model(mc);
        const training::TrainOutcome outcome = training::train(model, base.training, samples);
        if (arm == 1) {
            grid.split = outcome.split;
        } else if (outcome.split.test != grid.split.test) {
            throw TooSmall("ablation arms disagree on the test split");
        }

        const auto test = training::gather(samples, outcome.split.test);
        const auto pred = training::predict(model, outcome.result.best_params, test);
        std::vector<double> truth;
        for (const auto& s : test) truth.push_back(s.target);

        AblationArm& a = grid.arms[static_cast<std::size_t>(arm - 1)];
        a.arm = arm;
        a.enhance = enhance;
        a.rrh = rrh;
        a.report = per_depth_report(pred, truth, depths_mm);
        a.best_epoch = outcome.result.best_epoch;
    }
    return grid;
}

// ---------------------------------------------------------------------------

std::string overall_csv(const OverallMetrics& m) {
    std::string out = "rmse,mae_um,mape_pct,r2,count\n";
    out += fmt::format("{:.10g},{:.10g},{},{},{}\n", m.rmse, m.mae_um, opt_number(m.mape_pct),
                       opt_number(m.r2), m.count);
    return out;
}

std::string per_depth_csv(const EvalReport& r) {
    std::string out = "depth_mm,mae_um,mape_pct,mean_pred_mm,count\n";
    for (const auto& row : r.per_depth) {
        out += fmt::format("{:.2f},{:.10g},{:.10g},{:.10g},{}\n", row.depth_mm, row.mae_um,
                           row.mape_pct, row.mean_pred_mm, row.count);
    }
    return out;
}

std::string ablation_csv(const AblationGrid& g) {
    std::string out = "arm,enhance,rrh,rmse,mae_um,mape_pct,r2\n";
    for (const auto& a : g.arms) {
        const auto& m = a.report.overall;
        out += fmt::format("{},{},{},{:.10g},{:.10g},{},{}\n", a.arm, a.enhance ? 1 : 0, a.rrh ? 1 : 0,
                           m.rmse, m.mae_um, opt_number(m.mape_pct), opt_number(m.r2));
    }
    return out;
}

std::string render_text(const EvalReport& r) {
    const auto& m = r.overall;
    std::string out;
    out += fmt::format("{:>16} {:>10} {:>10} {:>8} {:>6}\n", "RMSE (x1e-2 mm)", "MAE (um)",
                       "MAPE (%)", "R2", "n");
    out += fmt::format("{:>16.2f} {:>10.2f} {:>10} {:>8} {:>6}\n\n", m.rmse * 100.0, m.mae_um,
                       m.mape_pct ? fmt::format("{:.2f}", *m.mape_pct) : "undefined",
                       m.r2 ? fmt::format("{:.4f}", *m.r2) : "undefined", m.count);
    out += fmt::format("{:>10} {:>10} {:>10} {:>14} {:>6}\n", "depth (mm)", "MAE (um)", "MAPE (%)",
                       "mean pred (mm)", "n");
    for (const auto& row : r.per_depth) {
        out += fmt::format("{:>10.2f} {:>10.2f} {:>10.2f} {:>14.3f} {:>6}\n", row.depth_mm,
                           row.mae_um, row.mape_pct, row.mean_pred_mm, row.count);
    }
    return out;
}

std::string render_text(std::span<const AblationArm> arms) {
    std::string out = fmt::format("{:>4} {:>8} {:>4} {:>16} {:>10} {:>10} {:>8}\n", "arm", "enhance",
                                  "RRH", "RMSE (x1e-2 mm)", "MAE (um)", "MAPE (%)", "R2");
    for (const auto& a : arms) {
        const auto& m = a.report.overall;
        out += fmt::format("{:>4} {:>8} {:>4} {:>16.2f} {:>10.2f} {:>10} {:>8}\n", a.arm,
                           a.enhance ? "yes" : "no", a.rrh ? "yes" : "no", m.rmse * 100.0, m.mae_um,
                           m.mape_pct ? fmt::format("{:.2f}", *m.mape_pct) : "undefined",
                           m.r2 ? fmt::format("{:.4f}", *m.r2) : "undefined");
    }
    return out;
}

OverallMetrics parse_overall_csv(const std::string& text) {
    const auto rows = csv_body(text, 5, "overall report");
    if (rows.size() != 1) throw IoError("overall report: expected one data row");
    const auto& r = rows.front();
    OverallMetrics m;
    m.rmse = std::stod(r[0]);
    m.mae_um = std::stod(r[1]);
    m.mape_pct = parse_opt(r[2]);
    m.r2 = parse_opt(r[3]);
    m.count = std::stoul(r[4]);
    return m;
}

std::vector<DepthRow> parse_per_depth_csv(const std::string& text) {
    std::vector<DepthRow> out;
    for (const auto& r : csv_body(text, 5, "per-depth report")) {
        out.push_back(DepthRow{std::stod(r[0]), std::stod(r[1]), std::stod(r[2]), std::stod(r[3]),
                               std::stoul(r[4])});
    }
    return out;
}

std::vector<AblationArm> parse_ablation_csv(const std::string& text) {
    std::vector<AblationArm> out;
    for (const auto& r : csv_body(text, 7, "ablation grid")) {
        AblationArm a;
        a.arm = std::stoi(r[0]);
        a.enhance = r[1] == "1";
        a.rrh = r[2] == "1";
        a.report.overall.rmse = std::stod(r[3]);
        a.report.overall.mae_um = std::stod(r[4]);
        a.report.overall.mape_pct = parse_opt(r[5]);
        a.report.overall.r2 = parse_opt(r[6]);
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace stripedepth::eval
