#include "adfd/jet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adfd {

namespace {

void check_order(int order) {
  if (order < 0 || order > kMaxJetOrder)
    throw std::invalid_argument("TaylorJet: order must lie in 0..4");
}

int common_order(const TaylorJet& a, const TaylorJet& b) {
  if (a.order() != b.order()) throw std::invalid_argument("TaylorJet: mixed orders");
  return a.order();
}

}  // namespace

TaylorJet::TaylorJet(int order, double value) : order_(order) {
  check_order(order);
  c_[0] = value;
}

TaylorJet TaylorJet::variable(int order, double x0, double slope) {
  TaylorJet j(order, x0);
  if (order >= 1) j.c_[1] = slope;
  return j;
}

double TaylorJet::derivative(int k) const {
  if (k < 0 || k > order_) throw std::out_of_range("TaylorJet::derivative: order exceeds jet");
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f * c_[static_cast<std::size_t>(k)];
}

TaylorJet& TaylorJet::operator+=(const TaylorJet& o) {
  const int n = common_order(*this, o);
  for (int k = 0; k <= n; ++k) c_[k] += o.c_[k];
  return *this;
}

TaylorJet& TaylorJet::operator-=(const TaylorJet& o) {
  const int n = common_order(*this, o);
  for (int k = 0; k <= n; ++k) c_[k] -= o.c_[k];
  return *this;
}

TaylorJet& TaylorJet::operator*=(const TaylorJet& o) {
  const int n = common_order(*this, o);
  std::array<double, kMaxJetOrder + 1> r{};
  for (int k = 0; k <= n; ++k)
    for (int i = 0; i <= k; ++i) r[k] += c_[i] * o.c_[k - i];
  c_ = r;
  return *this;
}

TaylorJet& TaylorJet::operator*=(double s) noexcept {
  for (int k = 0; k <= order_; ++k) c_[k] *= s;
  return *this;
}

TaylorJet& TaylorJet::operator/=(double s) noexcept {
  for (int k = 0; k <= order_; ++k) c_[k] /= s;
  return *this;
}

TaylorJet TaylorJet::operator-() const noexcept {
  TaylorJet r = *this;
  r *= -1.0;
  return r;
}

TaylorJet operator+(TaylorJet a, const TaylorJet& b) { return a += b; }
TaylorJet operator-(TaylorJet a, const TaylorJet& b) { return a -= b; }
TaylorJet operator*(TaylorJet a, const TaylorJet& b) { return a *= b; }
TaylorJet operator+(TaylorJet a, double s) { return a += s; }
TaylorJet operator+(double s, TaylorJet a) { return a += s; }
TaylorJet operator-(TaylorJet a, double s) { return a -= s; }
TaylorJet operator-(double s, const TaylorJet& a) { return -a + s; }
TaylorJet operator*(TaylorJet a, double s) { return a *= s; }
TaylorJet operator*(double s, TaylorJet a) { return a *= s; }
TaylorJet operator/(TaylorJet a, double s) { return a /= s; }

TaylorJet compose(const TaylorJet& z, std::span<const double> derivs) {
  const int n = z.order();
  if (derivs.size() < static_cast<std::size_t>(n + 1))
    throw std::invalid_argument("compose: need derivatives up to the jet order");
  // g(z0 + p) = sum_m g^(m)(z0)/m! p^m with p the non-constant part of z.
  TaylorJet p = z;
  p[0] = 0.0;
  TaylorJet out(n, derivs[0]);
  TaylorJet power(n, 1.0);
  double inv_factorial = 1.0;
  for (int m = 1; m <= n; ++m) {
    power *= p;
    inv_factorial /= m;
    for (int k = m; k <= n; ++k) out[k] += derivs[m] * inv_factorial * power[k];
  }
  return out;
}

TaylorJet sin(const TaylorJet& z) { return apply(Activation::sin, z); }

TaylorJet cos(const TaylorJet& z) {
  const double s = std::sin(z.value());
  const double c = std::cos(z.value());
  const double d[5] = {c, -s, -c, s, c};
  return compose(z, d);
}

TaylorJet exp(const TaylorJet& z) {
  const double e = std::exp(z.value());
  const double d[5] = {e, e, e, e, e};
  return compose(z, d);
}

TaylorJet tanh(const TaylorJet& z) { return apply(Activation::tanh, z); }

TaylorJet apply(Activation act, const TaylorJet& z) {
  double d[kMaxJetOrder + 1];
  activation_derivatives(act, z.value(), z.order(), d);
  return compose(z, std::span<const double>(d, static_cast<std::size_t>(z.order() + 1)));
}

}  // namespace adfd
