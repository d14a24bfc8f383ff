#include "stripedepth/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "stripedepth/errors.hpp"
#include "stripedepth/seeding.hpp"

namespace stripedepth::training {

void TrainConfig::validate() const {
    check_lambda(lambda);
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(lr, "training.lr");
    if (!(weight_decay >= 0.0)) throw ConfigError("training.weight_decay must be >= 0");
    if (batch_size == 0) throw ConfigError("training.batch_size must be >= 1");
    positive(clip_max_norm, "training.clip_max_norm");
    if (!(scheduler.factor > 0.0 && scheduler.factor < 1.0)) {
        throw ConfigError("training.scheduler.factor must be in (0, 1)");
    }
    if (scheduler.patience == 0) throw ConfigError("training.scheduler.patience must be >= 1");
    if (!(scheduler.min_improve >= 0.0)) throw ConfigError("training.scheduler.min_improve must be >= 0");
    positive(split.train, "training.split.train");
    positive(split.val, "training.split.val");
    positive(split.test, "training.split.test");
    if (std::abs(split.train + split.val + split.test - 1.0) > 1e-9) {
        throw ConfigError("training.split ratios must sum to 1");
    }
}

OptimizerState OptimizerState::zeros_like(const ParamSet& params) {
    return OptimizerState{params.zeros_like(), params.zeros_like(), 0};
}

double clip_gradients(ParamSet& grads, double max_norm) {
    if (!grads.all_finite()) throw NonFiniteError("non-finite gradient");
    const double norm = grads.global_norm();
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& e : grads.entries()) {
            for (double& g : e.tensor.data) g *= scale;
        }
    }
    return norm;
}

void adamw_step(ParamSet& params, const ParamSet& grads, OptimizerState& state, double lr,
                double weight_decay, const AdamWConstants& k) {
    if (!params.same_layout(grads)) throw ShapeMismatch("adamw_step: gradient layout mismatch");
    if (state.step == 0 && state.m.entries().empty()) state = OptimizerState::zeros_like(params);
    if (!params.same_layout(state.m) || !params.same_layout(state.v)) {
        throw ShapeMismatch("adamw_step: optimizer state layout mismatch");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(k.beta1, t);
    const double bc2 = 1.0 - std::pow(k.beta2, t);

    auto& pe = params.entries();
    const auto& ge = grads.entries();
    auto& me = state.m.entries();
    auto& ve = state.v.entries();
    for (std::size_t e = 0; e < pe.size(); ++e) {
        double* p = pe[e].tensor.ptr();
        const double* g = ge[e].tensor.ptr();
        double* m = me[e].tensor.ptr();
        double* v = ve[e].tensor.ptr();
        for (std::size_t i = 0; i < pe[e].tensor.size(); ++i) {
            m[i] = k.beta1 * m[i] + (1.0 - k.beta1) * g[i];
            v[i] = k.beta2 * v[i] + (1.0 - k.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= lr * (m_hat / (std::sqrt(v_hat) + k.eps) + weight_decay * p[i]);
        }
    }
    if (!params.all_finite()) throw NonFiniteError("non-finite parameter after AdamW step");
}

SchedulerState scheduler_step(SchedulerState state, double val_loss, const SchedulerConfig& cfg) {
    if (!std::isfinite(val_loss)) throw NonFiniteError("non-finite validation loss");
    if (!state.has_best || val_loss < state.best - cfg.min_improve) {
        state.best = val_loss;
        state.has_best = true;
        state.bad_epochs = 0;
        return state;
    }
    if (++state.bad_epochs >= cfg.patience) {
        state.lr *= cfg.factor;
        state.bad_epochs = 0;
    }
    return state;
}

Split split_dataset(std::span<const std::size_t> class_of, const SplitRatios& ratios,
                    std::uint64_t seed) {
    const std::size_t n = class_of.size();
    if (n == 0) throw TooSmall("cannot split an empty dataset");

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[class_of[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> class_rank(groups.size());
    std::iota(class_rank.begin(), class_rank.end(), std::size_t{0});
    std::shuffle(class_rank.begin(), class_rank.end(), rng);

    struct Keyed {
        double position;
        std::size_t rank;
        std::size_t index;
    };
    std::vector<Keyed> order;
    order.reserve(n);
    std::size_t g = 0;
    for (auto& [cls, members] : groups) {
        std::shuffle(members.begin(), members.end(), rng);
        const double count = static_cast<double>(members.size());
        for (std::size_t j = 0; j < members.size(); ++j) {
            order.push_back({(static_cast<double>(j) + 0.5) / count, class_rank[g], members[j]});
        }
        ++g;
    }
    std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
        return a.position != b.position ? a.position < b.position : a.rank < b.rank;
    });

    const double total = static_cast<double>(n);
    const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * total + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * total + 1e-9));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw TooSmall("dataset of " + std::to_string(n) + " samples leaves an empty split");
    }

    Split s;
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < n_train ? s.train : (i < n_train + n_val ? s.val : s.test);
        dst.push_back(order[i].index);
    }
    return s;
}

std::vector<model::Sample> gather(std::span<const model::Sample> samples,
                                  std::span<const std::size_t> indices) {
    std::vector<model::Sample> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(samples[i]);
    return out;
}

std::vector<double> predict(const model::Model& model, const ParamSet& params,
                            std::span<const model::Sample> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(model.forward(params, s.input, model::Mode::Eval));
    return out;
}

double evaluate_loss(const model::Model& model, const ParamSet& params,
                     std::span<const model::Sample> samples, double lambda) {
    std::vector<double> targets;
    targets.reserve(samples.size());
    for (const auto& s : samples) targets.push_back(s.target);
    return hybrid_loss(predict(model, params, samples), targets, lambda);
}

TrainResult fit(const model::Model& model, const TrainConfig& cfg,
                std::span<const model::Sample> train_set, std::span<const model::Sample> val_set) {
    cfg.validate();
    if (train_set.empty() || val_set.empty()) {
        throw TooSmall("training needs non-empty train and validation sets");
    }

    double label_mean = 0.0;
    for (const auto& s : train_set) label_mean += s.target;
    label_mean /= static_cast<double>(train_set.size());

    TrainResult result;
    result.final_params = model.init_params(derive_seed(cfg.seed, {0}), label_mean);
    result.best_params = result.final_params;
    if (cfg.epochs == 0) return result;

    ParamSet& params = result.final_params;
    OptimizerState opt = OptimizerState::zeros_like(params);
    SchedulerState sched{cfg.lr, 0.0, false, 0};
    std::mt19937_64 rng(derive_seed(cfg.seed, {1}));
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        const double lr = sched.lr;
        double weighted_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            model::Batch batch;
            for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_set[order[i]]);
            try {
                model::LossAndGrads lg = model.gradients(params, batch, cfg.lambda, rng);
                clip_gradients(lg.grads, cfg.clip_max_norm);
                adamw_step(params, lg.grads, opt, lr, cfg.weight_decay);
                weighted_loss += lg.loss * static_cast<double>(batch.size());
            } catch (const NonFiniteError& e) {
                throw NonFiniteError("epoch " + std::to_string(epoch) + " batch " +
                                     std::to_string(batch_index) + ": " + e.what());
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = weighted_loss / static_cast<double>(order.size());
        rec.lr = lr;
        try {
            rec.val_loss = evaluate_loss(model, params, val_set, cfg.lambda);
        } catch (const NonFiniteError& e) {
            throw NonFiniteError("epoch " + std::to_string(epoch) + " validation: " + e.what());
        }
        result.history.push_back(rec);

        if (rec.val_loss < best_val) {
            best_val = rec.val_loss;
            result.best_params = params;
            result.best_epoch = epoch;
        }
        sched = scheduler_step(sched, rec.val_loss, cfg.scheduler);
    }
    return result;
}

TrainOutcome train(const model::Model& model, const TrainConfig& cfg,
                   std::span<const model::Sample> samples) {
    cfg.validate();
    std::vector<std::size_t> classes;
    classes.reserve(samples.size());
    for (const auto& s : samples) classes.push_back(s.depth_index);

    TrainOutcome out;
    out.split = split_dataset(classes, cfg.split, cfg.seed);
    const auto train_set = gather(samples, out.split.train);
    const auto val_set = gather(samples, out.split.val);
    out.result = fit(model, cfg, train_set, val_set);
    return out;
}

}  // namespace stripedepth::training
