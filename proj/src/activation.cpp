#include "adfd/activation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace adfd {

std::string_view activation_name(Activation act) noexcept {
  return act == Activation::sin ? "sin" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "sin") return Activation::sin;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void activation_derivatives(Activation act, double x, int kmax, double* out) {
  if (kmax < 0 || kmax > 5) throw std::invalid_argument("activation_derivatives: order out of range");
  if (act == Activation::sin) {
    const double s = std::sin(x);
    const double c = std::cos(x);
    const double cycle[4] = {s, c, -s, -c};
    for (int m = 0; m <= kmax; ++m) out[m] = cycle[m % 4];
    return;
  }
  // d^m/dx^m tanh(x) = P_m(t) with t = tanh(x), P_0 = t and
  // P_{m+1}(t) = P_m'(t) * (1 - t^2). Coefficients in ascending powers.
  const double t = std::tanh(x);
  double poly[8] = {0.0, 1.0};
  int degree = 1;
  for (int m = 0; m <= kmax; ++m) {
    double v = 0.0;
    for (int p = degree; p >= 0; --p) v = v * t + poly[p];
    out[m] = v;
    if (m == kmax) break;
    double dp[8] = {};
    for (int p = 1; p <= degree; ++p) dp[p - 1] = p * poly[p];
    double next[8] = {};
    for (int p = 0; p < degree; ++p) {
      next[p] += dp[p];
      next[p + 2] -= dp[p];
    }
    degree += 1;
    for (int p = 0; p <= degree; ++p) poly[p] = next[p];
  }
}

double activation_derivative(Activation act, int k, double x) {
  if (k < 0 || k > kMaxActivationOrder)
    throw std::invalid_argument("activation_derivative: order must lie in 0..4");
  double out[kMaxActivationOrder + 1];
  activation_derivatives(act, x, k, out);
  return out[k];
}

}  // namespace adfd
