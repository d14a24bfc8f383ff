#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "stripedepth/reconstruct.hpp"
#include "stripedepth/tensor.hpp"

namespace stripedepth::model {

using reconstruct::ModelInput;

/// C x (H*W) activation map, channel-major.
struct FeatureMap {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    std::size_t plane() const noexcept { return height * width; }
};

struct ModelConfig {
    std::size_t input_side = 64;
    std::array<std::size_t, 3> channels{16, 32, 64};
    std::size_t se_reduction = 4;
    std::size_t head_hidden = 32;  // width of the second head stage
    double dropout = 0.2;
    bool use_rrh = true;

    void validate() const;
};

enum class Mode { Train, Eval };

// ---------------------------------------------------------------------------
// Squeeze-and-excitation

/// Intermediate values of one SE evaluation, kept for the backward pass.
struct SeCache {
    std::vector<double> pooled;  // C
    std::vector<double> hidden_pre;  // C/r, before relu
    std::vector<double> gate;    // C
};

/// g = sigmoid(W2 relu(W1 avgpool(x))), out = g (.) x per channel.
/// `w1` is (C/r) x C, `w2` is C x (C/r). Throws ShapeMismatch.
FeatureMap se_block(const FeatureMap& x, const Tensor& w1, const Tensor& w2,
                    SeCache* cache = nullptr);

/// Backward of se_block. Accumulates into dw1/dw2 and returns d(input).
FeatureMap se_block_backward(const FeatureMap& x, const Tensor& w1, const Tensor& w2,
                             const SeCache& cache, const FeatureMap& d_out, Tensor& dw1,
                             Tensor& dw2);

// ---------------------------------------------------------------------------
// Encoder interface

/// Opaque per-sample state an encoder keeps between forward and backward.
struct EncoderCache {
    virtual ~EncoderCache() = default;
};

/// Maps a ModelInput to a flat feature vector. Parameters live in the shared
/// ParamSet under names the encoder chooses, so alternate backbones can be
/// plugged in without touching the head or the trainer.
class Encoder {
public:
    virtual ~Encoder() = default;

    virtual std::size_t feature_dim() const = 0;
    virtual void add_params(ParamSet& params, std::mt19937_64& rng) const = 0;
    virtual std::vector<double> forward(const ParamSet& params, const ModelInput& input,
                                        std::unique_ptr<EncoderCache>* cache) const = 0;
    virtual void backward(const ParamSet& params, const EncoderCache& cache,
                          std::span<const double> d_features, ParamSet& grads) const = 0;
};

/// Three stride-2 3x3 conv + relu stages with SE gating after stages 2 and 3,
/// then global average pooling.
class SeConvEncoder final : public Encoder {
public:
    explicit SeConvEncoder(const ModelConfig& cfg);

    std::size_t feature_dim() const override { return cfg_.channels[2]; }
    void add_params(ParamSet& params, std::mt19937_64& rng) const override;
    std::vector<double> forward(const ParamSet& params, const ModelInput& input,
                                std::unique_ptr<EncoderCache>* cache) const override;
    void backward(const ParamSet& params, const EncoderCache& cache,
                  std::span<const double> d_features, ParamSet& grads) const override;

private:
    ModelConfig cfg_;
};

// ---------------------------------------------------------------------------
// Full model

/// Inverted-dropout multipliers (0 or 1/(1-p)) for the two head stages.
struct DropoutMask {
    std::vector<double> stage1;
    std::vector<double> stage2;
};

/// Cached values of one forward pass (train mode only keeps masks).
struct ForwardTrace {
    std::unique_ptr<EncoderCache> encoder;
    std::vector<double> features;
    std::vector<double> stage1_pre;
    std::vector<double> stage1_out;
    std::vector<double> stage2_pre;
    std::vector<double> stage2_out;
    double z = 0.0;  // pre-affine output
    double y_hat = 0.0;
    std::optional<DropoutMask> mask;
};

struct Sample {
    ModelInput input;
    double target = 0.0;  // mm
    std::size_t depth_index = 0;
};

using Batch = std::vector<const Sample*>;

struct LossAndGrads {
    double loss = 0.0;
    ParamSet grads;
    std::vector<double> predictions;
};

class Model {
public:
    explicit Model(ModelConfig cfg, std::shared_ptr<const Encoder> encoder = nullptr);

    const ModelConfig& config() const noexcept { return cfg_; }
    const Encoder& encoder() const noexcept { return *encoder_; }

    /// He fan-in initialization, zero biases, scale 1, shift = label mean when
    /// given (else 0). Deterministic per seed.
    ParamSet init_params(std::uint64_t seed, std::optional<double> label_mean = std::nullopt) const;

    /// Single-sample forward. In train mode a dropout mask is drawn from `rng`
    /// unless `replay` supplies one. Throws NonFiniteError.
    double forward(const ParamSet& params, const ModelInput& input, Mode mode,
                   std::mt19937_64* rng = nullptr, ForwardTrace* trace = nullptr,
                   const DropoutMask* replay = nullptr) const;

    /// Hybrid loss over the batch and its exact gradient for every parameter.
    /// Dropout masks are appended to `masks` when drawn, or replayed from it
    /// when it already holds one mask per sample.
    LossAndGrads gradients(const ParamSet& params, const Batch& batch, double lambda,
                           std::mt19937_64& rng, std::vector<DropoutMask>* masks = nullptr) const;

    /// Loss only. With `masks` the forward runs in train mode replaying them,
    /// otherwise in eval mode.
    double batch_loss(const ParamSet& params, const Batch& batch, double lambda,
                      const std::vector<DropoutMask>* masks = nullptr) const;

    void check_layout(const ParamSet& params) const;

private:
    void head_backward(const ParamSet& params, const ForwardTrace& trace, double d_yhat,
                       ParamSet& grads, std::vector<double>& d_features) const;

    ModelConfig cfg_;
    std::shared_ptr<const Encoder> encoder_;
};

}  // namespace stripedepth::model
