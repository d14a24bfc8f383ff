#include "stripedepth/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "stripedepth/errors.hpp"
#include "stripedepth/loss.hpp"

namespace stripedepth::model {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

constexpr std::size_t kKernel = 3;
constexpr std::size_t kTaps = kKernel * kKernel;

std::size_t conv_out(std::size_t n) { return (n + 1) / 2; }  // 3x3, stride 2, pad 1

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_he(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (double& v : t.data) v = dist(rng);
}

void check_shape(const Tensor& t, std::vector<std::size_t> expected, const char* what) {
    if (t.shape != expected) throw ShapeMismatch(std::string("unexpected shape for ") + what);
}

// Column k = (ci, ky, kx), column p = (oy, ox); out-of-image taps are zero.
void im2col(const double* x, std::size_t c, std::size_t h, std::size_t w, RowMat& cols) {
    const std::size_t ho = conv_out(h);
    const std::size_t wo = conv_out(w);
    cols.setZero(static_cast<Eigen::Index>(c * kTaps), static_cast<Eigen::Index>(ho * wo));
    for (std::size_t ci = 0; ci < c; ++ci) {
        const double* plane = x + ci * h * w;
        for (std::size_t ky = 0; ky < kKernel; ++ky) {
            for (std::size_t kx = 0; kx < kKernel; ++kx) {
                double* row = cols.row(static_cast<Eigen::Index>(ci * kTaps + ky * kKernel + kx)).data();
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(2 * oy + ky) - 1;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    const double* src = plane + static_cast<std::size_t>(iy) * w;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(2 * ox + kx) - 1;
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        row[oy * wo + ox] = src[ix];
                    }
                }
            }
        }
    }
}

void col2im(const RowMat& cols, std::size_t c, std::size_t h, std::size_t w, double* dx) {
    const std::size_t ho = conv_out(h);
    const std::size_t wo = conv_out(w);
    std::fill(dx, dx + c * h * w, 0.0);
    for (std::size_t ci = 0; ci < c; ++ci) {
        double* plane = dx + ci * h * w;
        for (std::size_t ky = 0; ky < kKernel; ++ky) {
            for (std::size_t kx = 0; kx < kKernel; ++kx) {
                const double* row =
                    cols.row(static_cast<Eigen::Index>(ci * kTaps + ky * kKernel + kx)).data();
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(2 * oy + ky) - 1;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    double* dst = plane + static_cast<std::size_t>(iy) * w;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(2 * ox + kx) - 1;
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        dst[ix] += row[oy * wo + ox];
                    }
                }
            }
        }
    }
}

struct SeConvCache final : EncoderCache {
    std::array<RowMat, 3> cols;        // im2col of each stage input
    std::array<FeatureMap, 3> act;     // post-relu stage outputs (pre-SE)
    std::array<std::size_t, 3> in_c{}, in_h{}, in_w{};
    SeCache se2;
    SeCache se3;
};

std::string conv_name(std::size_t stage, const char* part) {
    return "encoder.conv" + std::to_string(stage + 1) + "." + part;
}

}  // namespace

void ModelConfig::validate() const {
    if (input_side < 1) throw ConfigError("model.input_side must be >= 1");
    for (std::size_t c : channels) {
        if (c == 0) throw ConfigError("model.channels must be positive");
    }
    if (se_reduction == 0 || channels[1] % se_reduction != 0 || channels[2] % se_reduction != 0) {
        throw ConfigError("model.se_reduction must divide the SE channel counts");
    }
    if (head_hidden == 0) throw ConfigError("model.head_hidden must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
}

// ---------------------------------------------------------------------------

FeatureMap se_block(const FeatureMap& x, const Tensor& w1, const Tensor& w2, SeCache* cache) {
    const std::size_t c = x.channels;
    if (w1.shape.size() != 2 || w2.shape.size() != 2 || w1.shape[1] != c || w2.shape[0] != c ||
        w2.shape[1] != w1.shape[0] || x.data.size() != c * x.plane()) {
        throw ShapeMismatch("se_block: weights do not match a " + std::to_string(c) +
                            "-channel input");
    }
    const std::size_t r = w1.shape[0];
    const std::size_t p = x.plane();

    std::vector<double> pooled(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += x.data[ch * p + i];
        pooled[ch] = p > 0 ? s / static_cast<double>(p) : 0.0;
    }
    std::vector<double> hidden_pre(r, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        double s = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) s += w1.data[j * c + ch] * pooled[ch];
        hidden_pre[j] = s;
    }
    std::vector<double> gate(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t j = 0; j < r; ++j) s += w2.data[ch * r + j] * std::max(hidden_pre[j], 0.0);
        gate[ch] = sigmoid(s);
    }

    FeatureMap out = x;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t i = 0; i < p; ++i) out.data[ch * p + i] *= gate[ch];
    }
    if (cache) {
        cache->pooled = std::move(pooled);
        cache->hidden_pre = std::move(hidden_pre);
        cache->gate = std::move(gate);
    }
    return out;
}

FeatureMap se_block_backward(const FeatureMap& x, const Tensor& w1, const Tensor& w2,
                             const SeCache& cache, const FeatureMap& d_out, Tensor& dw1,
                             Tensor& dw2) {
    const std::size_t c = x.channels;
    const std::size_t r = w1.shape[0];
    const std::size_t p = x.plane();

    // d gate and d pre-sigmoid
    std::vector<double> d_act(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += d_out.data[ch * p + i] * x.data[ch * p + i];
        const double g = cache.gate[ch];
        d_act[ch] = s * g * (1.0 - g);
    }
    std::vector<double> d_hidden(r, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t j = 0; j < r; ++j) {
            dw2.data[ch * r + j] += d_act[ch] * std::max(cache.hidden_pre[j], 0.0);
            d_hidden[j] += w2.data[ch * r + j] * d_act[ch];
        }
    }
    std::vector<double> d_pooled(c, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        if (!(cache.hidden_pre[j] > 0.0)) continue;
        for (std::size_t ch = 0; ch < c; ++ch) {
            dw1.data[j * c + ch] += d_hidden[j] * cache.pooled[ch];
            d_pooled[ch] += w1.data[j * c + ch] * d_hidden[j];
        }
    }

    FeatureMap dx = x;
    const double inv_p = p > 0 ? 1.0 / static_cast<double>(p) : 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double g = cache.gate[ch];
        const double spread = d_pooled[ch] * inv_p;
        for (std::size_t i = 0; i < p; ++i) dx.data[ch * p + i] = g * d_out.data[ch * p + i] + spread;
    }
    return dx;
}

// ---------------------------------------------------------------------------

SeConvEncoder::SeConvEncoder(const ModelConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

void SeConvEncoder::add_params(ParamSet& params, std::mt19937_64& rng) const {
    std::size_t in_c = 1;
    for (std::size_t s = 0; s < 3; ++s) {
        const std::size_t out_c = cfg_.channels[s];
        Tensor& w = params.add(conv_name(s, "weight"), {out_c, in_c, kKernel, kKernel});
        fill_he(w, in_c * kTaps, rng);
        params.add(conv_name(s, "bias"), {out_c});
        in_c = out_c;
    }
    for (std::size_t s : {1, 2}) {
        const std::size_t c = cfg_.channels[s];
        const std::size_t r = c / cfg_.se_reduction;
        const std::string prefix = "encoder.se" + std::to_string(s + 1) + ".";
        fill_he(params.add(prefix + "w1", {r, c}), c, rng);
        fill_he(params.add(prefix + "w2", {c, r}), r, rng);
    }
}

std::vector<double> SeConvEncoder::forward(const ParamSet& params, const ModelInput& input,
                                           std::unique_ptr<EncoderCache>* cache) const {
    if (input.side != cfg_.input_side || input.values.size() != input.side * input.side) {
        throw ShapeMismatch("model input side " + std::to_string(input.side) +
                            " does not match configured " + std::to_string(cfg_.input_side));
    }
    auto state = std::make_unique<SeConvCache>();

    FeatureMap current{1, input.side, input.side, input.values};
    for (std::size_t s = 0; s < 3; ++s) {
        const Tensor& w = params.at(conv_name(s, "weight"));
        const Tensor& b = params.at(conv_name(s, "bias"));
        const std::size_t out_c = cfg_.channels[s];
        check_shape(w, {out_c, current.channels, kKernel, kKernel}, "conv weight");

        state->in_c[s] = current.channels;
        state->in_h[s] = current.height;
        state->in_w[s] = current.width;
        RowMat& cols = state->cols[s];
        im2col(current.data.data(), current.channels, current.height, current.width, cols);

        FeatureMap act{out_c, conv_out(current.height), conv_out(current.width), {}};
        act.data.resize(out_c * act.plane());
        MapMat y(act.data.data(), static_cast<Eigen::Index>(out_c),
                 static_cast<Eigen::Index>(act.plane()));
        y.noalias() = ConstMapMat(w.ptr(), static_cast<Eigen::Index>(out_c), cols.rows()) * cols;
        y.colwise() += ConstMapVec(b.ptr(), static_cast<Eigen::Index>(out_c));
        y = y.cwiseMax(0.0);

        if (s == 0) {
            current = act;
        } else {
            const std::string prefix = "encoder.se" + std::to_string(s + 1) + ".";
            SeCache& se = s == 1 ? state->se2 : state->se3;
            current = se_block(act, params.at(prefix + "w1"), params.at(prefix + "w2"), &se);
        }
        state->act[s] = std::move(act);
    }

    std::vector<double> features(current.channels, 0.0);
    const std::size_t p = current.plane();
    for (std::size_t ch = 0; ch < current.channels; ++ch) {
        double sum = 0.0;
        for (std::size_t i = 0; i < p; ++i) sum += current.data[ch * p + i];
        features[ch] = sum / static_cast<double>(p);
    }
    if (cache) *cache = std::move(state);
    return features;
}

void SeConvEncoder::backward(const ParamSet& params, const EncoderCache& cache_base,
                             std::span<const double> d_features, ParamSet& grads) const {
    const auto& cache = dynamic_cast<const SeConvCache&>(cache_base);

    // Global average pool.
    const FeatureMap& last = cache.act[2];
    FeatureMap d_cur{last.channels, last.height, last.width, std::vector<double>(last.data.size())};
    const double inv_p = 1.0 / static_cast<double>(last.plane());
    for (std::size_t ch = 0; ch < last.channels; ++ch) {
        std::fill_n(d_cur.data.begin() + static_cast<std::ptrdiff_t>(ch * last.plane()), last.plane(),
                    d_features[ch] * inv_p);
    }

    for (std::size_t si = 3; si-- > 0;) {
        const FeatureMap& act = cache.act[si];
        FeatureMap d_act;
        if (si == 0) {
            d_act = std::move(d_cur);
        } else {
            const std::string prefix = "encoder.se" + std::to_string(si + 1) + ".";
            d_act = se_block_backward(act, params.at(prefix + "w1"), params.at(prefix + "w2"),
                                      si == 1 ? cache.se2 : cache.se3, d_cur,
                                      grads.at(prefix + "w1"), grads.at(prefix + "w2"));
        }
        for (std::size_t i = 0; i < act.data.size(); ++i) {
            if (!(act.data[i] > 0.0)) d_act.data[i] = 0.0;
        }

        const std::size_t out_c = act.channels;
        const RowMat& cols = cache.cols[si];
        ConstMapMat dy(d_act.data.data(), static_cast<Eigen::Index>(out_c),
                       static_cast<Eigen::Index>(act.plane()));
        Tensor& dw = grads.at(conv_name(si, "weight"));
        Tensor& db = grads.at(conv_name(si, "bias"));
        MapMat(dw.ptr(), static_cast<Eigen::Index>(out_c), cols.rows()).noalias() +=
            dy * cols.transpose();
        // Plain loop: Eigen's vectorized reductions peel by pointer alignment,
        // which makes the summation order depend on the heap address.
        for (std::size_t ch = 0; ch < out_c; ++ch) {
            double sum = 0.0;
            for (std::size_t i = 0; i < act.plane(); ++i) sum += d_act.data[ch * act.plane() + i];
            db.data[ch] += sum;
        }

        if (si == 0) break;
        const Tensor& w = params.at(conv_name(si, "weight"));
        RowMat d_cols =
            ConstMapMat(w.ptr(), static_cast<Eigen::Index>(out_c), cols.rows()).transpose() * dy;
        d_cur = FeatureMap{cache.in_c[si], cache.in_h[si], cache.in_w[si],
                           std::vector<double>(cache.in_c[si] * cache.in_h[si] * cache.in_w[si])};
        col2im(d_cols, cache.in_c[si], cache.in_h[si], cache.in_w[si], d_cur.data.data());
    }
}

// ---------------------------------------------------------------------------

Model::Model(ModelConfig cfg, std::shared_ptr<const Encoder> encoder)
    : cfg_(cfg), encoder_(std::move(encoder)) {
    cfg_.validate();
    if (!encoder_) encoder_ = std::make_shared<SeConvEncoder>(cfg_);
}

ParamSet Model::init_params(std::uint64_t seed, std::optional<double> label_mean) const {
    std::mt19937_64 rng(seed);
    ParamSet p;
    encoder_->add_params(p, rng);
    const std::size_t f = encoder_->feature_dim();
    if (cfg_.use_rrh) {
        fill_he(p.add("head.fc1.weight", {f, f}), f, rng);
        p.add("head.fc1.bias", {f});
        fill_he(p.add("head.fc2.weight", {cfg_.head_hidden, f}), f, rng);
        p.add("head.fc2.bias", {cfg_.head_hidden});
        fill_he(p.add("head.fc3.weight", {1, cfg_.head_hidden}), cfg_.head_hidden, rng);
        p.add("head.fc3.bias", {1});
        p.add("head.scale", {1}).data[0] = 1.0;
        p.add("head.shift", {1}).data[0] = label_mean.value_or(0.0);
    } else {
        fill_he(p.add("head.fc.weight", {1, f}), f, rng);
        p.add("head.fc.bias", {1}).data[0] = label_mean.value_or(0.0);
    }
    return p;
}

void Model::check_layout(const ParamSet& params) const {
    const ParamSet expected = init_params(0);
    if (!params.same_layout(expected)) {
        throw ShapeMismatch("parameter set does not match the model configuration");
    }
}

double Model::forward(const ParamSet& params, const ModelInput& input, Mode mode,
                      std::mt19937_64* rng, ForwardTrace* trace, const DropoutMask* replay) const {
    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;
    t.features = encoder_->forward(params, input, trace ? &t.encoder : nullptr);
    const std::vector<double>& f = t.features;
    for (double v : f) {
        if (!std::isfinite(v)) throw NonFiniteError("non-finite encoder activation");
    }
    const std::size_t fd = f.size();

    if (!cfg_.use_rrh) {
        const Tensor& w = params.at("head.fc.weight");
        double z = params.at("head.fc.bias").data[0];
        for (std::size_t i = 0; i < fd; ++i) z += w.data[i] * f[i];
        t.z = z;
        t.y_hat = z;
        if (!std::isfinite(z)) throw NonFiniteError("non-finite model output");
        return z;
    }

    const std::size_t hd = cfg_.head_hidden;
    DropoutMask mask;
    if (mode == Mode::Train) {
        if (replay) {
            if (replay->stage1.size() != fd || replay->stage2.size() != hd) {
                throw ShapeMismatch("replayed dropout mask has the wrong size");
            }
            mask = *replay;
        } else {
            if (!rng) throw ConfigError("train-mode forward needs an rng or a replay mask");
            const double keep = 1.0 - cfg_.dropout;
            std::bernoulli_distribution draw(keep);
            auto fill = [&](std::vector<double>& m, std::size_t n) {
                m.resize(n);
                for (double& v : m) v = cfg_.dropout > 0.0 ? (draw(*rng) ? 1.0 / keep : 0.0) : 1.0;
            };
            fill(mask.stage1, fd);
            fill(mask.stage2, hd);
        }
    }

    // Stage 1: FC + relu + dropout, residual skip from the pooled features.
    const Tensor& w1 = params.at("head.fc1.weight");
    const Tensor& b1 = params.at("head.fc1.bias");
    t.stage1_pre.assign(fd, 0.0);
    t.stage1_out.assign(fd, 0.0);
    for (std::size_t j = 0; j < fd; ++j) {
        double s = b1.data[j];
        for (std::size_t i = 0; i < fd; ++i) s += w1.data[j * fd + i] * f[i];
        t.stage1_pre[j] = s;
        double a = std::max(s, 0.0);
        if (mode == Mode::Train) a *= mask.stage1[j];
        t.stage1_out[j] = a + f[j];
    }

    // Stage 2: FC + relu + dropout.
    const Tensor& w2 = params.at("head.fc2.weight");
    const Tensor& b2 = params.at("head.fc2.bias");
    t.stage2_pre.assign(hd, 0.0);
    t.stage2_out.assign(hd, 0.0);
    for (std::size_t j = 0; j < hd; ++j) {
        double s = b2.data[j];
        for (std::size_t i = 0; i < fd; ++i) s += w2.data[j * fd + i] * t.stage1_out[i];
        t.stage2_pre[j] = s;
        double a = std::max(s, 0.0);
        if (mode == Mode::Train) a *= mask.stage2[j];
        t.stage2_out[j] = a;
    }

    // Stage 3: FC to a scalar, then the learnable affine.
    const Tensor& w3 = params.at("head.fc3.weight");
    double z = params.at("head.fc3.bias").data[0];
    for (std::size_t i = 0; i < hd; ++i) z += w3.data[i] * t.stage2_out[i];
    t.z = z;
    t.y_hat = params.at("head.scale").data[0] * z + params.at("head.shift").data[0];
    if (mode == Mode::Train) {
        t.mask = std::move(mask);
    } else {
        t.mask.reset();
    }
    if (!std::isfinite(t.y_hat)) throw NonFiniteError("non-finite model output");
    return t.y_hat;
}

void Model::head_backward(const ParamSet& params, const ForwardTrace& t, double d_yhat,
                          ParamSet& grads, std::vector<double>& d_features) const {
    const std::vector<double>& f = t.features;
    const std::size_t fd = f.size();
    d_features.assign(fd, 0.0);

    if (!cfg_.use_rrh) {
        const Tensor& w = params.at("head.fc.weight");
        Tensor& dw = grads.at("head.fc.weight");
        for (std::size_t i = 0; i < fd; ++i) {
            dw.data[i] += d_yhat * f[i];
            d_features[i] = d_yhat * w.data[i];
        }
        grads.at("head.fc.bias").data[0] += d_yhat;
        return;
    }

    const std::size_t hd = cfg_.head_hidden;
    const bool train = t.mask.has_value();
    const double gamma = params.at("head.scale").data[0];
    grads.at("head.scale").data[0] += d_yhat * t.z;
    grads.at("head.shift").data[0] += d_yhat;
    const double dz = d_yhat * gamma;

    const Tensor& w3 = params.at("head.fc3.weight");
    Tensor& dw3 = grads.at("head.fc3.weight");
    grads.at("head.fc3.bias").data[0] += dz;
    std::vector<double> d_pre2(hd, 0.0);
    for (std::size_t j = 0; j < hd; ++j) {
        dw3.data[j] += dz * t.stage2_out[j];
        double d = dz * w3.data[j];
        if (train) d *= t.mask->stage2[j];
        d_pre2[j] = t.stage2_pre[j] > 0.0 ? d : 0.0;
    }

    const Tensor& w2 = params.at("head.fc2.weight");
    Tensor& dw2 = grads.at("head.fc2.weight");
    Tensor& db2 = grads.at("head.fc2.bias");
    std::vector<double> d_stage1(fd, 0.0);
    for (std::size_t j = 0; j < hd; ++j) {
        db2.data[j] += d_pre2[j];
        if (d_pre2[j] == 0.0) continue;
        for (std::size_t i = 0; i < fd; ++i) {
            dw2.data[j * fd + i] += d_pre2[j] * t.stage1_out[i];
            d_stage1[i] += w2.data[j * fd + i] * d_pre2[j];
        }
    }

    const Tensor& w1 = params.at("head.fc1.weight");
    Tensor& dw1 = grads.at("head.fc1.weight");
    Tensor& db1 = grads.at("head.fc1.bias");
    for (std::size_t j = 0; j < fd; ++j) {
        d_features[j] += d_stage1[j];  // residual skip
        double d = d_stage1[j];
        if (train) d *= t.mask->stage1[j];
        if (!(t.stage1_pre[j] > 0.0)) continue;
        db1.data[j] += d;
        for (std::size_t i = 0; i < fd; ++i) {
            dw1.data[j * fd + i] += d * f[i];
            d_features[i] += w1.data[j * fd + i] * d;
        }
    }
}

LossAndGrads Model::gradients(const ParamSet& params, const Batch& batch, double lambda,
                              std::mt19937_64& rng, std::vector<DropoutMask>* masks) const {
    if (batch.empty()) throw EmptyBatch("gradients called with an empty batch");
    training::check_lambda(lambda);
    const bool replay = masks && masks->size() == batch.size();
    if (masks && !replay) masks->clear();

    LossAndGrads out;
    out.grads = params.zeros_like();
    out.predictions.reserve(batch.size());
    std::vector<double> targets;
    targets.reserve(batch.size());
    std::vector<double> d_features;

    // Each sample's loss derivative depends only on its own residual, so the
    // backward pass runs right after that sample's forward.
    for (std::size_t i = 0; i < batch.size(); ++i) {
        ForwardTrace trace;
        const double y_hat = forward(params, batch[i]->input, Mode::Train, &rng, &trace,
                                     replay ? &(*masks)[i] : nullptr);
        if (masks && !replay && trace.mask) masks->push_back(*trace.mask);
        out.predictions.push_back(y_hat);
        targets.push_back(batch[i]->target);

        const double d_yhat =
            training::hybrid_loss_derivative(y_hat - batch[i]->target, lambda, batch.size());
        head_backward(params, trace, d_yhat, out.grads, d_features);
        encoder_->backward(params, *trace.encoder, d_features, out.grads);
    }
    out.loss = training::hybrid_loss(out.predictions, targets, lambda);
    if (!std::isfinite(out.loss)) throw NonFiniteError("non-finite loss");
    return out;
}

double Model::batch_loss(const ParamSet& params, const Batch& batch, double lambda,
                         const std::vector<DropoutMask>* masks) const {
    if (batch.empty()) throw EmptyBatch("batch_loss called with an empty batch");
    std::vector<double> preds;
    std::vector<double> targets;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const bool train = masks && masks->size() == batch.size();
        preds.push_back(forward(params, batch[i]->input, train ? Mode::Train : Mode::Eval, nullptr,
                                nullptr, train ? &(*masks)[i] : nullptr));
        targets.push_back(batch[i]->target);
    }
    return training::hybrid_loss(preds, targets, lambda);
}

}  // namespace stripedepth::model
