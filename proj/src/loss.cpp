#include "stripedepth/loss.hpp"

#include <cmath>
#include <string>

#include "stripedepth/errors.hpp"

namespace stripedepth::training {

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw LambdaOutOfRange("lambda must be in [0, 1], got " + std::to_string(lambda));
    }
}

double hybrid_loss(std::span<const double> y_hat, std::span<const double> y, double lambda) {
    if (y_hat.empty() || y_hat.size() != y.size()) {
        throw EmptyBatch("hybrid_loss needs equal, non-zero lengths (got " +
                         std::to_string(y_hat.size()) + " and " + std::to_string(y.size()) + ")");
    }
    check_lambda(lambda);
    double sq = 0.0;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y_hat[i] - y[i];
        sq += r * r;
        abs_sum += std::abs(r);
    }
    const double n = static_cast<double>(y.size());
    return lambda * (sq / n) + (1.0 - lambda) * (abs_sum / n);
}

double hybrid_loss_derivative(double residual, double lambda, std::size_t n) {
    const double sign = residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
    return (2.0 * lambda * residual + (1.0 - lambda) * sign) / static_cast<double>(n);
}

}  // namespace stripedepth::training
