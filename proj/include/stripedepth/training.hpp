#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stripedepth/loss.hpp"
#include "stripedepth/model.hpp"
#include "stripedepth/tensor.hpp"

namespace stripedepth::training {

struct SchedulerConfig {
    double factor = 0.5;
    std::size_t patience = 5;
    double min_improve = 1e-6;  // absolute
};

struct SplitRatios {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

struct TrainConfig {
    double lambda = 0.5;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::size_t batch_size = 8;
    std::size_t epochs = 100;
    double clip_max_norm = 1.0;
    SchedulerConfig scheduler{};
    SplitRatios split{};
    std::uint64_t seed = 0;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Optimizer

struct AdamWConstants {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    ParamSet m;
    ParamSet v;
    std::uint64_t step = 0;

    static OptimizerState zeros_like(const ParamSet& params);
};

/// Scales every gradient by max_norm / ||g|| when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping. Throws NonFiniteError.
double clip_gradients(ParamSet& grads, double max_norm);

/// One AdamW update with bias correction and decoupled weight decay:
/// p <- p - lr (m_hat / (sqrt(v_hat) + eps) + wd p).
void adamw_step(ParamSet& params, const ParamSet& grads, OptimizerState& state, double lr,
                double weight_decay, const AdamWConstants& k = {});

// ---------------------------------------------------------------------------
// Plateau scheduler

struct SchedulerState {
    double lr = 1e-3;
    double best = 0.0;
    bool has_best = false;
    std::size_t bad_epochs = 0;
};

/// An epoch improves when val_loss < best - min_improve. After `patience`
/// consecutive non-improving epochs the rate is multiplied by `factor` and the
/// counter restarts; `best` survives reductions.
SchedulerState scheduler_step(SchedulerState state, double val_loss, const SchedulerConfig& cfg);

// ---------------------------------------------------------------------------
// Splits and training

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Seeded, stratified split. Sizes are floor(train * n) and floor(val * n);
/// the remainder goes to test. Within each class the order is shuffled, and
/// classes are interleaved proportionally so every prefix of the combined
/// order is close to the class mix. Throws TooSmall if a split is empty.
Split split_dataset(std::span<const std::size_t> class_of, const SplitRatios& ratios,
                    std::uint64_t seed);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

using LossHistory = std::vector<EpochRecord>;

struct TrainResult {
    ParamSet best_params;   // lowest validation loss
    ParamSet final_params;  // after the last epoch
    LossHistory history;
    std::size_t best_epoch = 0;  // 0 means the initial parameters
};

/// Minibatch AdamW training on `train_set`, validated on `val_set` each epoch.
TrainResult fit(const model::Model& model, const TrainConfig& cfg,
                std::span<const model::Sample> train_set, std::span<const model::Sample> val_set);

struct TrainOutcome {
    TrainResult result;
    Split split;
};

/// Splits `samples` by depth class with cfg.split / cfg.seed, then fits.
TrainOutcome train(const model::Model& model, const TrainConfig& cfg,
                   std::span<const model::Sample> samples);

/// Eval-mode predictions, one per sample.
std::vector<double> predict(const model::Model& model, const ParamSet& params,
                            std::span<const model::Sample> samples);

/// Eval-mode hybrid loss over a whole set.
double evaluate_loss(const model::Model& model, const ParamSet& params,
                     std::span<const model::Sample> samples, double lambda);

std::vector<model::Sample> gather(std::span<const model::Sample> samples,
                                  std::span<const std::size_t> indices);

}  // namespace stripedepth::training
