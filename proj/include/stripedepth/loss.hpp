#pragma once

#include <span>

namespace stripedepth::training {

/// lambda * mean((y_hat - y)^2) + (1 - lambda) * mean(|y_hat - y|).
/// Throws EmptyBatch on empty or mismatched input and LambdaOutOfRange.
double hybrid_loss(std::span<const double> y_hat, std::span<const double> y, double lambda);

/// d loss / d y_hat_i for a batch of n samples. Uses sign(0) = 0 for the
/// absolute-error term.
double hybrid_loss_derivative(double residual, double lambda, std::size_t n);

void check_lambda(double lambda);

}  // namespace stripedepth::training
