#pragma once

#include <string_view>

namespace adfd {

enum class Activation { sin, tanh };

std::string_view activation_name(Activation act) noexcept;

/// Throws std::invalid_argument for names other than "sin" and "tanh".
Activation parse_activation(std::string_view name);

/// Highest order served by activation_derivative().
inline constexpr int kMaxActivationOrder = 4;

/// Closed-form k-th derivative, 0 <= k <= 4.
double activation_derivative(Activation act, int k, double x);

/// Writes sigma^(m)(x) to out[m] for m = 0..kmax, kmax <= 5. Order 5 is
/// needed by parameter gradients of fourth-order residuals.
void activation_derivatives(Activation act, double x, int kmax, double* out);

}  // namespace adfd
