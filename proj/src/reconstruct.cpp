#include "stripedepth/reconstruct.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stripedepth/errors.hpp"

namespace stripedepth::reconstruct {
namespace {

constexpr double kMaxLevel = 255.0;

}  // namespace

PixelCurve subsample(const PixelCurve& raw, std::size_t stride, std::size_t target_len) {
    if (stride == 0) throw ConfigError("stride must be >= 1");
    const std::size_t available = raw.values.size() / stride;
    if (available < target_len || target_len == 0) {
        throw TooShort("curve of " + std::to_string(raw.values.size()) + " frames gives " +
                       std::to_string(available) + " points at stride " + std::to_string(stride) +
                       ", need " + std::to_string(target_len));
    }
    PixelCurve out;
    out.frame_rate = raw.frame_rate / static_cast<double>(stride);
    out.label_depth = raw.label_depth;
    out.values.reserve(target_len);
    for (std::size_t i = 0; i < target_len; ++i) out.values.push_back(raw.values[i * stride]);
    return out;
}

PixelCurve smooth(const PixelCurve& curve, std::size_t window, std::size_t degree) {
    const std::size_t n = curve.values.size();
    if (window == 0 || window % 2 == 0) throw ConfigError("smoothing window must be odd");
    if (n == 0 || degree >= n) {
        throw DegenerateFit("polynomial degree " + std::to_string(degree) +
                            " needs more than " + std::to_string(n) + " points");
    }

    const std::size_t half = window / 2;
    std::vector<double> averaged(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) sum += curve.values[j];
        averaged[i] = sum / static_cast<double>(hi - lo + 1);
    }

    // Fit in u = log(1 + n) mapped onto [-1, 1] for conditioning.
    const double x_max = std::log1p(static_cast<double>(n - 1));
    const std::size_t cols = degree + 1;
    Eigen::MatrixXd design(n, cols);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = x_max > 0.0 ? 2.0 * std::log1p(static_cast<double>(i)) / x_max - 1.0 : 0.0;
        double p = 1.0;
        for (std::size_t k = 0; k < cols; ++k) {
            design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = p;
            p *= u;
        }
        rhs(static_cast<Eigen::Index>(i)) = averaged[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < static_cast<Eigen::Index>(cols)) {
        throw DegenerateFit("least-squares system is rank deficient (rank " +
                            std::to_string(qr.rank()) + " < " + std::to_string(cols) + ")");
    }
    const Eigen::VectorXd coeffs = qr.solve(rhs);
    const Eigen::VectorXd fitted = design * coeffs;

    PixelCurve out;
    out.frame_rate = curve.frame_rate;
    out.label_depth = curve.label_depth;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = std::clamp(fitted(static_cast<Eigen::Index>(i)), 0.0, kMaxLevel);
    }
    return out;
}

StripeImage curve_to_stripe(const PixelCurve& curve) {
    StripeImage img;
    img.side = curve.values.size();
    img.source_label = curve.label_depth;
    img.pixels.resize(img.side * img.side);
    for (std::size_t r = 0; r < img.side; ++r) {
        std::fill_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(r * img.side), img.side,
                    curve.values[r]);
    }
    return img;
}

StripeImage log_enhance(const StripeImage& img) {
    StripeImage out;
    out.side = img.side;
    out.source_label = img.source_label;
    out.pixels.resize(img.pixels.size());

    double q_min = std::numeric_limits<double>::infinity();
    double q_max = -q_min;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double q = std::log1p(img.pixels[i]);
        out.pixels[i] = q;
        q_min = std::min(q_min, q);
        q_max = std::max(q_max, q);
    }
    if (!(q_max > q_min)) {
        std::fill(out.pixels.begin(), out.pixels.end(), 0.0);
        return out;
    }
    const double scale = kMaxLevel / (q_max - q_min);
    for (double& v : out.pixels) v = v == q_max ? kMaxLevel : std::clamp((v - q_min) * scale, 0.0, kMaxLevel);
    return out;
}

StripeImage resize(const StripeImage& img, std::size_t target_side) {
    if (target_side == 0 || img.side % target_side != 0) {
        throw NotDivisible("cannot pool a " + std::to_string(img.side) + "x" +
                           std::to_string(img.side) + " image to " + std::to_string(target_side));
    }
    const std::size_t f = img.side / target_side;
    StripeImage out;
    out.side = target_side;
    out.source_label = img.source_label;
    out.pixels.assign(target_side * target_side, 0.0);
    const double inv = 1.0 / static_cast<double>(f * f);
    for (std::size_t r = 0; r < target_side; ++r) {
        for (std::size_t c = 0; c < target_side; ++c) {
            double sum = 0.0;
            for (std::size_t dr = 0; dr < f; ++dr) {
                const double* row = &img.pixels[(r * f + dr) * img.side + c * f];
                for (std::size_t dc = 0; dc < f; ++dc) sum += row[dc];
            }
            out.pixels[r * target_side + c] = sum * inv;
        }
    }
    return out;
}

ModelInput normalize(const StripeImage& img) {
    ModelInput in;
    in.side = img.side;
    in.values.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        in.values[i] = (img.pixels[i] / kMaxLevel - 0.5) / 0.5;
    }
    return in;
}

ModelInput normalize(const Gray8Image& img) {
    if (img.width != img.height) {
        throw ShapeMismatch("model input must be square, got " + std::to_string(img.width) + "x" +
                            std::to_string(img.height));
    }
    ModelInput in;
    in.side = img.width;
    in.values.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        in.values[i] = (static_cast<double>(img.pixels[i]) / kMaxLevel - 0.5) / 0.5;
    }
    return in;
}

StripeImage denormalize(const ModelInput& in) {
    StripeImage img;
    img.side = in.side;
    img.pixels.resize(in.values.size());
    for (std::size_t i = 0; i < in.values.size(); ++i) {
        img.pixels[i] = (in.values[i] * 0.5 + 0.5) * kMaxLevel;
    }
    return img;
}

Gray8Image to_gray8(const StripeImage& img) {
    Gray8Image out;
    out.width = img.side;
    out.height = img.side;
    out.pixels.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(img.pixels[i]), 0.0, kMaxLevel));
    }
    return out;
}

Gray8Image render(const PixelCurve& raw, const PipelineOptions& opts) {
    PixelCurve c = subsample(raw, opts.stride, opts.target_len);
    c = smooth(c, opts.smooth_window, opts.poly_degree);
    StripeImage img = curve_to_stripe(c);
    if (opts.enhance) img = log_enhance(img);
    return to_gray8(resize(img, opts.input_size));
}

ModelInput prepare(const PixelCurve& raw, const PipelineOptions& opts) {
    return normalize(render(raw, opts));
}

}  // namespace stripedepth::reconstruct
