#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "adfd/features.hpp"
#include "oracles.hpp"

using namespace adfd;
using adfd::testing::rel_err;
using adfd::testing::richardson_derivative;

TEST(Activation, ClosedFormValues) {
  EXPECT_EQ(activation_derivative(Activation::sin, 2, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(activation_derivative(Activation::tanh, 1, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(activation_derivative(Activation::sin, 3, 0.4), -std::cos(0.4));
  const double t = std::tanh(0.3);
  EXPECT_NEAR(activation_derivative(Activation::tanh, 2, 0.3), -2.0 * t * (1 - t * t), 1e-15);
}

TEST(Activation, RejectsOrderAboveFour) {
  EXPECT_THROW(activation_derivative(Activation::sin, 5, 0.0), std::invalid_argument);
  EXPECT_THROW(activation_derivative(Activation::tanh, -1, 0.0), std::invalid_argument);
  EXPECT_THROW(parse_activation("relu"), std::invalid_argument);
}

TEST(Activation, TanhThirdDerivativeMatchesRichardson) {
  auto f = [](double x) { return activation_derivative(Activation::tanh, 2, x); };
  const double fd = richardson_derivative(f, 0.7, 1, 1e-2, 2);
  EXPECT_LT(rel_err(activation_derivative(Activation::tanh, 3, 0.7), fd), 1e-7);
}

TEST(Activation, EveryOrderMatchesDifferentiatedLowerOrder) {
  for (auto act : {Activation::sin, Activation::tanh})
    for (int k = 1; k <= 5; ++k)
      for (double x : {-1.3, -0.2, 0.55, 2.1}) {
        double d[6];
        activation_derivatives(act, x, k, d);
        auto lower = [&](double y) {
          double e[6];
          activation_derivatives(act, y, k - 1, e);
          return e[k - 1];
        };
        const double fd = richardson_derivative(lower, x, 1, 1e-2, 2);
        EXPECT_LT(std::abs(d[k] - fd), 1e-9) << activation_name(act) << " k=" << k << " x=" << x;
      }
}

TEST(Jet, SineDerivativesAtZero) {
  const double x[1] = {0.0};
  const double dir[1] = {1.0};
  FeatureModel m;
  m.w = DenseMatrix{{1.0}};
  m.b = {0.0};
  m.a = {1.0};
  const TaylorJet j = jet_propagate(m, x, dir, 4);
  const double expected[5] = {0.0, 1.0, 0.0, -1.0, 0.0};
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(j.derivative(k), expected[k], 1e-15);
  EXPECT_THROW(jet_propagate(m, x, dir, 5), std::invalid_argument);
}

TEST(Jet, ArithmeticMatchesClosedForms) {
  const TaylorJet x = TaylorJet::variable(4, 0.3);
  const TaylorJet e = exp(2.0 * x);
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(e.derivative(k), std::pow(2.0, k) * std::exp(0.6), 1e-12);
  const TaylorJet p = x * x * x;
  EXPECT_NEAR(p.derivative(1), 3 * 0.09, 1e-15);
  EXPECT_NEAR(p.derivative(3), 6.0, 1e-15);
  EXPECT_NEAR(p.derivative(4), 0.0, 1e-15);
  const TaylorJet s = sin(x) * sin(x) + cos(x) * cos(x);
  EXPECT_NEAR(s.value(), 1.0, 1e-15);
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(s[k], 0.0, 1e-14);
}

TEST(Jet, ExpansionConsistencyAcrossNearbyPoints) {
  // Shifting the base point by delta must agree with the Taylor polynomial of
  // the original jet to O(delta^(K+1-k)) in coefficient k.
  const FeatureModel m = sample_features(20, 1, 1.0, 3, Activation::tanh);
  const double dir[1] = {1.0};
  const double x0[1] = {0.2};
  const TaylorJet j0 = jet_propagate(m, x0, dir, 4);
  for (double delta : {1e-2, 5e-3}) {
    const double x1[1] = {0.2 + delta};
    const TaylorJet j1 = jet_propagate(m, x1, dir, 4);
    for (int k = 0; k <= 4; ++k) {
      double predicted = 0.0;
      for (int m2 = k; m2 <= 4; ++m2) {
        double binom = 1.0;
        for (int i = 0; i < k; ++i) binom = binom * (m2 - i) / (i + 1);
        predicted += j0[m2] * binom * std::pow(delta, m2 - k);
      }
      EXPECT_LT(std::abs(j1[k] - predicted), 50.0 * std::pow(delta, 5 - k)) << "k=" << k;
    }
  }
}

TEST(Sampling, SupportAndDeterminism) {
  const FeatureModel m = sample_features(100, 1, 1.0, 7);
  for (std::size_t j = 0; j < 100; ++j) {
    EXPECT_LE(std::abs(m.w(j, 0)), 1.0);
    EXPECT_LE(std::abs(m.b[j]), 1.0);
    EXPECT_LE(std::abs(m.a[j]), 1.0);
  }
  const FeatureModel m2 = sample_features(100, 1, 1.0, 7);
  EXPECT_EQ(m.w, m2.w);
  EXPECT_EQ(m.b, m2.b);
  EXPECT_EQ(m.a, m2.a);
  const FeatureModel other = sample_features(100, 1, 1.0, 8);
  EXPECT_NE(m.w, other.w);
}

TEST(Sampling, EmpiricalMeanNearZero) {
  const FeatureModel m = sample_features(10000, 1, 1.0, 11);
  double mean = 0.0;
  for (double v : m.w.data()) mean += v;
  mean /= 10000.0;
  EXPECT_LT(std::abs(mean), 0.02);
}

TEST(Sampling, RejectsBadArguments) {
  EXPECT_THROW(sample_features(0, 1, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(sample_features(5, 1, 0.0, 1), std::invalid_argument);
}

TEST(FeatureMatrix, SingleNeuronValue) {
  FeatureModel m;
  m.w = DenseMatrix{{1.0}};
  m.b = {0.0};
  m.a = {1.0};
  const DenseMatrix pts{{std::numbers::pi / 2}};
  EXPECT_NEAR(feature_matrix(m, 0, pts)(0, 0), 1.0, 1e-15);
  EXPECT_THROW(feature_matrix(m, 0, DenseMatrix(1, 2)), std::invalid_argument);
}

TEST(FeatureMatrix, SecondOrderRowsMatchJets) {
  const FeatureModel m = sample_features(100, 1, 1.0, 5);
  DenseMatrix pts(30, 1);
  for (std::size_t i = 0; i < 30; ++i) pts(i, 0) = -1.0 + 2.0 * (i + 1) / 30.0;
  const DenseMatrix a2 = feature_matrix(m, 2, pts);
  const double dir[1] = {1.0};
  for (std::size_t i = 0; i < 30; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 100; ++j) row += a2(i, j) * m.w(j, 0) * m.w(j, 0) * m.a[j];
    const TaylorJet jet = jet_propagate(m, pts.row(i), dir, 2);
    EXPECT_NEAR(row, jet.derivative(2), 1e-12);
  }
}

TEST(FeatureMatrix, CentralDifferenceConvergesAtSecondOrder) {
  const FeatureModel m = sample_features(40, 1, 1.0, 9, Activation::tanh);
  DenseMatrix pts(20, 1);
  for (std::size_t i = 0; i < 20; ++i) pts(i, 0) = -0.9 + 0.09 * i;
  const DenseMatrix a1 = feature_matrix(m, 1, pts);
  auto error = [&](double h) {
    DenseMatrix plus = pts, minus = pts;
    for (std::size_t i = 0; i < 20; ++i) {
      plus(i, 0) += h;
      minus(i, 0) -= h;
    }
    const DenseMatrix fd = (1.0 / (2.0 * h)) * (feature_matrix(m, 0, plus) - feature_matrix(m, 0, minus));
    const DenseMatrix exact = scale_cols(a1, m.w.column(0));
    return max_abs(fd - exact);
  };
  const double ratio = error(1e-2) / error(5e-3);
  EXPECT_NEAR(ratio, 4.0, 0.4);
}

TEST(FeatureMatrix, TwoDimensionalLaplacianFromAxisJets) {
  const FeatureModel m = sample_features(15, 2, 1.0, 21);
  const double x[2] = {0.3, 0.8};
  const double ex[2] = {1.0, 0.0};
  const double ey[2] = {0.0, 1.0};
  const DenseMatrix pts{{0.3, 0.8}};
  const DenseMatrix a2 = feature_matrix(m, 2, pts);
  double closed = 0.0;
  for (std::size_t j = 0; j < 15; ++j) closed += m.a[j] * m.weight_norm2(j) * a2(0, j);
  const double jets = jet_propagate(m, x, ex, 2).derivative(2) + jet_propagate(m, x, ey, 2).derivative(2);
  EXPECT_NEAR(jets, closed, 1e-13 * std::max(1.0, std::abs(closed)));
}

TEST(DeepNetwork, ShapesAndParameterRoundTrip) {
  const std::size_t widths[] = {1, 50, 50, 50, 1};
  DeepNetwork net = make_deep_network(widths, Activation::tanh, 0.1, 4);
  EXPECT_EQ(net.widths(), std::vector<std::size_t>(std::begin(widths), std::end(widths)));
  EXPECT_EQ(net.parameter_count(), 50u * 1 + 50 + 50 * 50 + 50 + 50 * 50 + 50 + 50 + 1);
  const Vector theta = net.parameters();
  for (double v : theta) EXPECT_LE(std::abs(v), 0.1);
  Vector shifted = theta;
  for (double& v : shifted) v += 1.0;
  net.set_parameters(shifted);
  EXPECT_EQ(net.parameters(), shifted);
  const std::size_t bad[] = {1, 1};
  EXPECT_THROW(make_deep_network(bad, Activation::tanh, 0.1, 1), std::invalid_argument);
}

TEST(DeepNetwork, JetsMatchRichardsonDifferences) {
  const std::size_t widths[] = {1, 50, 50, 50, 1};
  const DeepNetwork net = make_deep_network(widths, Activation::tanh, 0.0, 17, InitScheme::fan_in);
  Rng rng(99);
  const double dir[1] = {1.0};
  for (int p = 0; p < 20; ++p) {
    const double x0 = rng.uniform(-1.0, 1.0);
    const double xs[1] = {x0};
    const TaylorJet jet = jet_propagate(net, xs, dir, 4);
    auto f = [&](double x) {
      const double v[1] = {x};
      return net.evaluate(v);
    };
    for (int k = 1; k <= 4; ++k) {
      const double fd = richardson_derivative(f, x0, k, 0.1, 3);
      EXPECT_LT(rel_err(jet.derivative(k), fd, 1e-2), 1e-6) << "k=" << k << " x=" << x0;
    }
  }
}

TEST(DeepNetwork, BatchedJetsMatchScalarJets) {
  const std::size_t widths[] = {2, 7, 6, 1};
  const DeepNetwork net = make_deep_network(widths, Activation::sin, 0.0, 23, InitScheme::fan_in);
  DenseMatrix pts{{0.1, 0.2}, {-0.4, 0.9}, {0.7, -0.3}};
  DenseMatrix dirs{{1.0, 0.0}, {0.0, 1.0}, {0.6, 0.8}};
  const NetworkJets batch = forward_jets(net, pts, dirs, 3, true);
  for (std::size_t p = 0; p < 3; ++p) {
    const TaylorJet j = jet_propagate(net, pts.row(p), dirs.row(p), 3);
    for (int k = 0; k <= 3; ++k) EXPECT_NEAR(batch.coefficient(p, k), j[k], 1e-13);
  }
  EXPECT_EQ(batch.slopes.size(), 2u);
}

TEST(DeepNetwork, FeatureDerivativesAreFactorialScaled) {
  const std::size_t widths[] = {1, 8, 5, 1};
  const DeepNetwork net = make_deep_network(widths, Activation::tanh, 0.5, 2);
  const DenseMatrix pts{{0.25}, {-0.5}};
  const auto d = deep_feature_derivatives(net, pts, 0, 2);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[2].cols(), 5u);
  // Column j of the order-2 block is the second derivative of feature j.
  const DenseLayer& first = net.layers[0];
  const DenseLayer& second = net.layers[1];
  auto feature = [&](double x, std::size_t j) {
    Vector h(8);
    for (std::size_t i = 0; i < 8; ++i) h[i] = std::tanh(first.weight(i, 0) * x + first.bias[i]);
    return std::tanh(dot(second.weight.row(j), h) + second.bias[j]);
  };
  for (std::size_t j = 0; j < 5; ++j) {
    auto f = [&](double x) { return feature(x, j); };
    EXPECT_NEAR(d[0](0, j), feature(0.25, j), 1e-15);
    EXPECT_NEAR(d[2](0, j), richardson_derivative(f, 0.25, 2, 0.05, 3), 1e-9);
  }
}
