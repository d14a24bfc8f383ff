#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stripedepth/heatsim.hpp"
#include "stripedepth/model.hpp"
#include "stripedepth/reconstruct.hpp"
#include "stripedepth/training.hpp"

namespace stripedepth::eval {

/// Overall regression metrics. Inputs are depths in mm; RMSE stays in mm and
/// is only rescaled when rendered.
struct OverallMetrics {
    double rmse = 0.0;    // mm
    double mae_um = 0.0;  // micrometres
    std::optional<double> mape_pct;  // undefined when a target is zero
    std::optional<double> r2;        // undefined when targets have no variance
    std::size_t count = 0;
};

struct DepthRow {
    double depth_mm = 0.0;
    double mae_um = 0.0;
    double mape_pct = 0.0;
    double mean_pred_mm = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    OverallMetrics overall;
    std::vector<DepthRow> per_depth;  // ascending depth
};

double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);
/// Throws ZeroTarget when any truth value is 0.
double mape(std::span<const double> pred, std::span<const double> truth);
/// 1 - SS_res / SS_tot around the mean of `truth`. Throws ZeroVariance.
double r_squared(std::span<const double> pred, std::span<const double> truth);

/// All four metrics; MAPE / R^2 are left empty where undefined. Throws
/// EmptyBatch on empty or mismatched inputs.
OverallMetrics metrics(std::span<const double> pred, std::span<const double> truth);

/// Groups by true depth. Every truth value must match one of `depths_mm`
/// (within 1e-6 mm), otherwise UnknownDepth. Depths without samples produce
/// no row.
EvalReport per_depth_report(std::span<const double> pred, std::span<const double> truth,
                            std::span<const double> depths_mm);

// ---------------------------------------------------------------------------
// Ablation

struct AblationArm {
    int arm = 0;  // 1..4
    bool enhance = false;
    bool rrh = false;
    EvalReport report;
    std::size_t best_epoch = 0;
};

struct AblationGrid {
    std::array<AblationArm, 4> arms;
    training::Split split;  // shared by every arm
};

struct AblationConfig {
    reconstruct::PipelineOptions pipeline{};
    model::ModelConfig model{};
    training::TrainConfig training{};
};

/// Arm 1: no enhancement, no RRH; 2: enhancement only; 3: RRH only; 4: both.
/// Every arm trains from the same seed on the same split.
AblationGrid run_ablation(const AblationConfig& base, const heatsim::Dataset& dataset);

/// Depth-labelled model samples from a simulated dataset (targets in mm).
std::vector<model::Sample> build_samples(const heatsim::Dataset& dataset,
                                         const reconstruct::PipelineOptions& pipeline);

// ---------------------------------------------------------------------------
// Rendering

std::string overall_csv(const OverallMetrics& m);
std::string per_depth_csv(const EvalReport& r);
std::string ablation_csv(const AblationGrid& g);
/// Aligned text tables; RMSE shown in units of 1e-2 mm.
std::string render_text(const EvalReport& r);
std::string render_text(std::span<const AblationArm> arms);

/// Parsers for the CSV files above (used by the `report` command).
OverallMetrics parse_overall_csv(const std::string& text);
std::vector<DepthRow> parse_per_depth_csv(const std::string& text);
std::vector<AblationArm> parse_ablation_csv(const std::string& text);

}  // namespace stripedepth::eval
