#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "stripedepth/heatsim.hpp"

namespace stripedepth::reconstruct {

using heatsim::PixelCurve;

/// Square grayscale image, row-major. Rows carry the time axis: row n of a
/// freshly built stripe image is constant and equals G(n).
struct StripeImage {
    std::size_t side = 0;
    std::vector<double> pixels;
    std::optional<double> source_label;  // depth, m

    double at(std::size_t row, std::size_t col) const { return pixels[row * side + col]; }
};

/// Model-ready input: values in [-1, 1].
struct ModelInput {
    std::size_t side = 0;
    std::vector<double> values;
};

/// 8-bit image as written to PGM files.
struct Gray8Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

/// Every `stride`-th frame starting at frame 0, truncated to the first
/// `target_len` points. Throws TooShort when fewer than target_len remain.
PixelCurve subsample(const PixelCurve& raw, std::size_t stride = 10, std::size_t target_len = 1024);

/// Centered moving average (truncated at the edges) followed by a
/// least-squares polynomial fit over log(1 + frame index). The fitted values
/// are clamped to [0, 255].
PixelCurve smooth(const PixelCurve& curve, std::size_t window = 5, std::size_t degree = 5);

/// pixel(row = n, col = c) = curve[n] for every column c.
StripeImage curve_to_stripe(const PixelCurve& curve);

/// q = ln(1 + v), s = 255 (q - min q) / (max q - min q). A constant image
/// maps to all zeros.
StripeImage log_enhance(const StripeImage& img);

/// Block-mean pooling by the factor side / target_side. Throws NotDivisible.
StripeImage resize(const StripeImage& img, std::size_t target_side);

/// x = v / 255, out = (x - 0.5) / 0.5.
ModelInput normalize(const StripeImage& img);
ModelInput normalize(const Gray8Image& img);

/// Inverse of normalize, back to [0, 255].
StripeImage denormalize(const ModelInput& in);

/// Rounds half away from zero and clamps into [0, 255].
Gray8Image to_gray8(const StripeImage& img);

struct PipelineOptions {
    std::size_t stride = 10;
    std::size_t target_len = 1024;
    std::size_t smooth_window = 5;
    std::size_t poly_degree = 5;
    bool enhance = true;
    std::size_t input_size = 64;
};

/// subsample -> smooth -> stripe -> [log_enhance] -> resize -> 8-bit.
Gray8Image render(const PixelCurve& raw, const PipelineOptions& opts);

/// normalize(render(raw, opts)).
ModelInput prepare(const PixelCurve& raw, const PipelineOptions& opts);

}  // namespace stripedepth::reconstruct
