#include "adfd/features.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace adfd {

namespace {

void check_jet_order(int order) {
  if (order < 0 || order > kMaxJetOrder)
    throw std::invalid_argument("jet order must lie in 0..4");
}

void check_dims(std::size_t expected, std::size_t got, const char* who) {
  if (expected != got)
    throw std::invalid_argument(std::string(who) + ": input dimension mismatch");
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

double FeatureModel::preactivation(std::size_t j, std::span<const double> x) const {
  return dot(w.row(j), x) + b[j];
}

double FeatureModel::evaluate(std::span<const double> x) const {
  check_dims(input_dim(), x.size(), "FeatureModel::evaluate");
  double s = 0.0;
  for (std::size_t j = 0; j < neurons(); ++j)
    s += a[j] * activation_derivative(activation, 0, preactivation(j, x));
  return s;
}

double FeatureModel::weight_norm2(std::size_t j) const { return dot(w.row(j), w.row(j)); }

FeatureModel sample_features(std::size_t neurons, std::size_t input_dim, double init_range,
                             std::uint64_t seed, Activation act) {
  if (neurons < 1) throw std::invalid_argument("sample_features: need at least one neuron");
  if (input_dim < 1) throw std::invalid_argument("sample_features: input_dim must be positive");
  if (!(init_range > 0.0)) throw std::invalid_argument("sample_features: init_range must be positive");
  FeatureModel m;
  m.activation = act;
  m.init_range = init_range;
  m.seed = seed;
  m.w = DenseMatrix(neurons, input_dim);
  m.b.resize(neurons);
  m.a.resize(neurons);
  Rng rng(seed);
  for (double& v : m.w.data()) v = rng.uniform(-init_range, init_range);
  for (double& v : m.b) v = rng.uniform(-init_range, init_range);
  for (double& v : m.a) v = rng.uniform(-init_range, init_range);
  return m;
}

DenseMatrix feature_matrix(const FeatureModel& model, int k, const DenseMatrix& points) {
  if (k < 0 || k > 5) throw std::invalid_argument("feature_matrix: order out of range");
  check_dims(model.input_dim(), points.cols(), "feature_matrix");
  DenseMatrix out(points.rows(), model.neurons());
  double d[6];
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto x = points.row(i);
    for (std::size_t j = 0; j < model.neurons(); ++j) {
      activation_derivatives(model.activation, model.preactivation(j, x), k, d);
      out(i, j) = d[k];
    }
  }
  return out;
}

std::vector<std::size_t> DeepNetwork::widths() const {
  std::vector<std::size_t> w{input_dim()};
  for (const auto& l : layers) w.push_back(l.weight.rows());
  return w;
}

std::size_t DeepNetwork::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.rows() * l.weight.cols() + l.bias.size();
  return n;
}

Vector DeepNetwork::parameters() const {
  Vector theta;
  theta.reserve(parameter_count());
  for (const auto& l : layers) {
    theta.insert(theta.end(), l.weight.data().begin(), l.weight.data().end());
    theta.insert(theta.end(), l.bias.begin(), l.bias.end());
  }
  return theta;
}

void DeepNetwork::set_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count())
    throw std::invalid_argument("DeepNetwork::set_parameters: wrong parameter count");
  std::size_t pos = 0;
  for (auto& l : layers) {
    for (double& v : l.weight.data()) v = theta[pos++];
    for (double& v : l.bias) v = theta[pos++];
  }
}

double DeepNetwork::evaluate(std::span<const double> x) const {
  check_dims(input_dim(), x.size(), "DeepNetwork::evaluate");
  Vector h(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector z = matvec(layers[l].weight, h);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layers[l].bias[i];
    if (l + 1 < layers.size())
      for (double& v : z) v = activation_derivative(activation, 0, v);
    h = std::move(z);
  }
  return h[0];
}

DeepNetwork make_deep_network(std::span<const std::size_t> widths, Activation act,
                              double init_range, std::uint64_t seed, InitScheme scheme) {
  if (widths.size() < 3) throw std::invalid_argument("make_deep_network: need a hidden layer");
  if (widths.back() != 1) throw std::invalid_argument("make_deep_network: output width must be 1");
  for (std::size_t w : widths)
    if (w == 0) throw std::invalid_argument("make_deep_network: zero layer width");
  if (scheme == InitScheme::uniform && !(init_range > 0.0))
    throw std::invalid_argument("make_deep_network: init_range must be positive");
  DeepNetwork net;
  net.activation = act;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double r = scheme == InitScheme::uniform
                         ? init_range
                         : 1.0 / std::sqrt(static_cast<double>(widths[l]));
    DenseLayer layer{DenseMatrix(widths[l + 1], widths[l]), Vector(widths[l + 1])};
    for (double& v : layer.weight.data()) v = rng.uniform(-r, r);
    for (double& v : layer.bias) v = rng.uniform(-r, r);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

TaylorJet jet_propagate(const FeatureModel& model, std::span<const double> x,
                        std::span<const double> direction, int order) {
  check_jet_order(order);
  check_dims(model.input_dim(), x.size(), "jet_propagate");
  check_dims(model.input_dim(), direction.size(), "jet_propagate");
  TaylorJet out(order, 0.0);
  for (std::size_t j = 0; j < model.neurons(); ++j) {
    const TaylorJet z =
        TaylorJet::variable(order, model.preactivation(j, x), dot(model.w.row(j), direction));
    out += model.a[j] * apply(model.activation, z);
  }
  return out;
}

TaylorJet jet_propagate(const DeepNetwork& net, std::span<const double> x,
                        std::span<const double> direction, int order) {
  check_jet_order(order);
  check_dims(net.input_dim(), x.size(), "jet_propagate");
  check_dims(net.input_dim(), direction.size(), "jet_propagate");
  std::vector<TaylorJet> h;
  for (std::size_t i = 0; i < x.size(); ++i) h.push_back(TaylorJet::variable(order, x[i], direction[i]));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    std::vector<TaylorJet> z;
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      TaylorJet s(order, layer.bias[r]);
      for (std::size_t c = 0; c < layer.weight.cols(); ++c) s += layer.weight(r, c) * h[c];
      z.push_back(l + 1 < net.layers.size() ? apply(net.activation, s) : s);
    }
    h = std::move(z);
  }
  return h[0];
}

NetworkJets forward_jets(const DeepNetwork& net, const DenseMatrix& points,
                         const DenseMatrix& directions, int order, bool keep_slopes) {
  check_jet_order(order);
  check_dims(net.input_dim(), points.cols(), "forward_jets");
  if (directions.rows() != points.rows() || directions.cols() != points.cols())
    throw std::invalid_argument("forward_jets: directions must match points");
  NetworkJets out;
  out.order = order;
  out.probes = points.rows();
  const std::size_t stride = out.stride();
  const std::size_t cols = out.probes * stride;

  DenseMatrix h(net.input_dim(), cols);
  for (std::size_t p = 0; p < out.probes; ++p)
    for (std::size_t i = 0; i < net.input_dim(); ++i) {
      h(i, p * stride) = points(p, i);
      if (order >= 1) h(i, p * stride + 1) = directions(p, i);
    }

  double d[6];
  double power[kMaxJetOrder + 1];
  double pj[kMaxJetOrder + 1];
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    DenseMatrix z = matmul(layer.weight, h);
    for (std::size_t r = 0; r < z.rows(); ++r)
      for (std::size_t p = 0; p < out.probes; ++p) z(r, p * stride) += layer.bias[r];
    out.inputs.push_back(std::move(h));
    if (l + 1 == net.layers.size()) {
      out.output = std::move(z);
      break;
    }
    DenseMatrix y(z.rows(), cols);
    DenseMatrix s = keep_slopes ? DenseMatrix(z.rows(), cols) : DenseMatrix();
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const auto zr = z.row(r);
      auto yr = y.row(r);
      for (std::size_t p = 0; p < out.probes; ++p) {
        const double* zc = zr.data() + p * stride;
        activation_derivatives(net.activation, zc[0], order + (keep_slopes ? 1 : 0), d);
        // y = sum_m sigma^(m)/m! P^m and s = sum_m sigma^(m+1)/m! P^m with
        // P the non-constant part of z.
        double* yc = yr.data() + p * stride;
        double* sc = keep_slopes ? s.row(r).data() + p * stride : nullptr;
        for (int k = 0; k <= order; ++k) {
          yc[k] = 0.0;
          power[k] = 0.0;
          if (sc) sc[k] = 0.0;
        }
        power[0] = 1.0;
        double inv_fact = 1.0;
        for (int m = 0; m <= order; ++m) {
          if (m > 0) {
            for (int k = 0; k <= order; ++k) {
              double acc = 0.0;
              for (int i = 1; i <= k; ++i) acc += zc[i] * power[k - i];
              pj[k] = acc;
            }
            for (int k = 0; k <= order; ++k) power[k] = pj[k];
            inv_fact /= m;
          }
          for (int k = m; k <= order; ++k) {
            yc[k] += d[m] * inv_fact * power[k];
            if (sc) sc[k] += d[m + 1] * inv_fact * power[k];
          }
        }
      }
    }
    if (keep_slopes) out.slopes.push_back(std::move(s));
    h = std::move(y);
  }
  return out;
}

std::vector<DenseMatrix> deep_feature_derivatives(const DeepNetwork& net,
                                                  const DenseMatrix& points, int axis,
                                                  int order) {
  if (axis < 0 || static_cast<std::size_t>(axis) >= net.input_dim())
    throw std::invalid_argument("deep_feature_derivatives: axis out of range");
  DenseMatrix dirs(points.rows(), points.cols());
  for (std::size_t p = 0; p < points.rows(); ++p) dirs(p, static_cast<std::size_t>(axis)) = 1.0;
  const NetworkJets jets = forward_jets(net, points, dirs, order);
  const DenseMatrix& f = jets.features();
  std::vector<DenseMatrix> out;
  const std::size_t stride = jets.stride();
  for (int k = 0; k <= order; ++k) {
    const double scale = factorial(k);
    DenseMatrix m(points.rows(), f.rows());
    for (std::size_t p = 0; p < points.rows(); ++p)
      for (std::size_t j = 0; j < f.rows(); ++j)
        m(p, j) = scale * f(j, p * stride + static_cast<std::size_t>(k));
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace adfd
