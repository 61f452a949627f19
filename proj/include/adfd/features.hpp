#pragma once

// Random features and fixed-architecture networks with exact input
// derivatives.
//
// Random stream: std::mt19937_64 seeded with the model seed; each draw
// maps the top 53 bits of one engine output to [0, 1). Draw order is
// fixed: inner weights row by row, then biases, then outer coefficients
// (two-layer models) or layer by layer, weights row-major before biases
// (deep networks).

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "adfd/activation.hpp"
#include "adfd/jet.hpp"
#include "adfd/linalg.hpp"

namespace adfd {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

/// phi(x) = sum_j a_j sigma(w_j . x + b_j).
struct FeatureModel {
  Activation activation = Activation::sin;
  DenseMatrix w;  // neurons x input_dim
  Vector b;
  Vector a;
  double init_range = 1.0;
  std::uint64_t seed = 0;

  std::size_t neurons() const noexcept { return b.size(); }
  std::size_t input_dim() const noexcept { return w.cols(); }
  double preactivation(std::size_t j, std::span<const double> x) const;
  double evaluate(std::span<const double> x) const;
  /// w_j . w_j, the per-neuron weight of a second-order operator.
  double weight_norm2(std::size_t j) const;
};

/// w, b and a drawn i.i.d. from U[-init_range, init_range].
FeatureModel sample_features(std::size_t neurons, std::size_t input_dim, double init_range,
                             std::uint64_t seed, Activation act = Activation::sin);

/// N x M matrix of sigma^(k)(w_j . x_i + b_j); points is N x input_dim.
/// k may reach 5 for gradient assembly; orders above 4 are internal use.
DenseMatrix feature_matrix(const FeatureModel& model, int k, const DenseMatrix& points);

struct DenseLayer {
  DenseMatrix weight;  // out x in
  Vector bias;
};

/// Fully connected network; every layer except the last applies the
/// activation, the last is affine with a single output.
struct DeepNetwork {
  Activation activation = Activation::tanh;
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const noexcept { return layers.front().weight.cols(); }
  /// Width of the last hidden layer, i.e. the random-feature count.
  std::size_t feature_count() const noexcept { return layers.back().weight.cols(); }
  std::vector<std::size_t> widths() const;
  std::size_t parameter_count() const noexcept;
  /// Flattened layer by layer: weights row-major, then biases.
  Vector parameters() const;
  void set_parameters(std::span<const double> theta);
  double evaluate(std::span<const double> x) const;
};

enum class InitScheme {
  uniform,  // every parameter from U[-init_range, init_range]
  fan_in    // layer l from U[-1/sqrt(fan_in), 1/sqrt(fan_in)]
};

/// widths = [input, hidden..., 1]; at least one hidden layer.
DeepNetwork make_deep_network(std::span<const std::size_t> widths, Activation act,
                              double init_range, std::uint64_t seed,
                              InitScheme scheme = InitScheme::uniform);

/// Directional Taylor jet of the model output at x along direction,
/// truncated at order K <= 4.
TaylorJet jet_propagate(const FeatureModel& model, std::span<const double> x,
                        std::span<const double> direction, int order);
TaylorJet jet_propagate(const DeepNetwork& net, std::span<const double> x,
                        std::span<const double> direction, int order);

/// Jets for many probes pushed through a network in one pass.
/// Column probe * (order + 1) + k of every matrix holds coefficient k of
/// that probe's jet.
struct NetworkJets {
  int order = 0;
  std::size_t probes = 0;
  /// inputs[l]: jets entering layer l (inputs[0] is the seeded input).
  std::vector<DenseMatrix> inputs;
  /// slopes[l]: sigma'(z) jets of hidden layer l, kept for reverse sweeps.
  std::vector<DenseMatrix> slopes;
  /// Network output jets, 1 x probes * (order + 1).
  DenseMatrix output;

  std::size_t stride() const noexcept { return static_cast<std::size_t>(order) + 1; }
  double coefficient(std::size_t probe, int k) const noexcept {
    return output(0, probe * stride() + static_cast<std::size_t>(k));
  }
  /// Last hidden layer jets: the random features of the network.
  const DenseMatrix& features() const noexcept { return inputs.back(); }
};

/// points and directions are probes x input_dim. keep_slopes retains what
/// a reverse sweep needs.
NetworkJets forward_jets(const DeepNetwork& net, const DenseMatrix& points,
                         const DenseMatrix& directions, int order, bool keep_slopes = false);

/// k-th derivative along axis of each last-hidden feature: N x width
/// matrices for k = 0..order.
std::vector<DenseMatrix> deep_feature_derivatives(const DeepNetwork& net,
                                                  const DenseMatrix& points, int axis,
                                                  int order);

}  // namespace adfd
