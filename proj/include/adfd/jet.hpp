#pragma once

// Truncated univariate Taylor arithmetic. A jet of order K holds
// c_k = u^(k)(t0) / k! for k = 0..K along one input direction; every
// operation is exact modulo truncation at order K.

#include <array>
#include <span>

#include "adfd/activation.hpp"

namespace adfd {

inline constexpr int kMaxJetOrder = 4;

class TaylorJet {
 public:
  TaylorJet() = default;
  /// Constant jet of the given order.
  TaylorJet(int order, double value);

  /// x0 + t: the seed jet for an independent variable.
  static TaylorJet variable(int order, double x0, double slope = 1.0);

  int order() const noexcept { return order_; }
  double operator[](int k) const noexcept { return c_[static_cast<std::size_t>(k)]; }
  double& operator[](int k) noexcept { return c_[static_cast<std::size_t>(k)]; }
  double value() const noexcept { return c_[0]; }
  /// k! * c_k, the k-th derivative along the seeded direction.
  double derivative(int k) const;

  TaylorJet& operator+=(const TaylorJet& o);
  TaylorJet& operator-=(const TaylorJet& o);
  TaylorJet& operator*=(const TaylorJet& o);
  TaylorJet& operator+=(double s) noexcept { c_[0] += s; return *this; }
  TaylorJet& operator-=(double s) noexcept { c_[0] -= s; return *this; }
  TaylorJet& operator*=(double s) noexcept;
  TaylorJet& operator/=(double s) noexcept;
  TaylorJet operator-() const noexcept;

 private:
  int order_ = 0;
  std::array<double, kMaxJetOrder + 1> c_{};
};

TaylorJet operator+(TaylorJet a, const TaylorJet& b);
TaylorJet operator-(TaylorJet a, const TaylorJet& b);
TaylorJet operator*(TaylorJet a, const TaylorJet& b);
TaylorJet operator+(TaylorJet a, double s);
TaylorJet operator+(double s, TaylorJet a);
TaylorJet operator-(TaylorJet a, double s);
TaylorJet operator-(double s, const TaylorJet& a);
TaylorJet operator*(TaylorJet a, double s);
TaylorJet operator*(double s, TaylorJet a);
TaylorJet operator/(TaylorJet a, double s);

/// g(z) for a scalar function g given derivs[m] = g^(m)(z.value()),
/// m = 0..z.order().
TaylorJet compose(const TaylorJet& z, std::span<const double> derivs);

TaylorJet sin(const TaylorJet& z);
TaylorJet cos(const TaylorJet& z);
TaylorJet exp(const TaylorJet& z);
TaylorJet tanh(const TaylorJet& z);
TaylorJet apply(Activation act, const TaylorJet& z);

}  // namespace adfd
