#include "adfd/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "adfd/spectral.hpp"

namespace adfd {

std::string_view optimizer_name(Optimizer opt) noexcept {
  return opt == Optimizer::gd ? "gd" : "adam";
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "gd" || name == "sgd") return Optimizer::gd;
  if (name == "adam") return Optimizer::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view precision_name(Precision p) noexcept { return p == Precision::f64 ? "double" : "single"; }

Precision parse_precision(std::string_view name) {
  if (name == "double" || name == "f64") return Precision::f64;
  if (name == "single" || name == "f32" || name == "float") return Precision::f32;
  throw std::invalid_argument("unknown precision '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- ModelState

ModelState ModelState::two_layer(FeatureModel model, Precision precision) {
  ModelState s;
  s.kind = Kind::two_layer;
  s.shallow = std::move(model);
  s.precision = precision;
  if (precision == Precision::f32) s.set_parameters(s.parameters());
  return s;
}

ModelState ModelState::deep_net(DeepNetwork net) {
  ModelState s;
  s.kind = Kind::deep;
  s.deep = std::move(net);
  return s;
}

std::size_t ModelState::input_dim() const noexcept {
  return kind == Kind::two_layer ? shallow.input_dim() : deep.input_dim();
}

std::size_t ModelState::parameter_count() const noexcept {
  if (kind == Kind::deep) return deep.parameter_count();
  return shallow.neurons() * (shallow.input_dim() + 2);
}

Vector ModelState::parameters() const {
  if (kind == Kind::deep) return deep.parameters();
  Vector theta(shallow.a.begin(), shallow.a.end());
  theta.insert(theta.end(), shallow.w.data().begin(), shallow.w.data().end());
  theta.insert(theta.end(), shallow.b.begin(), shallow.b.end());
  return theta;
}

void ModelState::set_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count())
    throw std::invalid_argument("ModelState::set_parameters: wrong parameter count");
  if (kind == Kind::deep) {
    deep.set_parameters(theta);
    return;
  }
  auto round = [this](double v) {
    return precision == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
  };
  const std::size_t m = shallow.neurons();
  std::size_t pos = 0;
  for (std::size_t j = 0; j < m; ++j) shallow.a[j] = round(theta[pos++]);
  for (double& v : shallow.w.data()) v = round(theta[pos++]);
  for (std::size_t j = 0; j < m; ++j) shallow.b[j] = round(theta[pos++]);
}

double ModelState::evaluate(std::span<const double> x) const {
  return kind == Kind::two_layer ? shallow.evaluate(x) : deep.evaluate(x);
}

// ---------------------------------------------------------- shared row logic

namespace {

/// Per-row probe coefficients: dr_row / dv_p for each probe the row touches.
struct RowLinearization {
  std::vector<std::pair<std::size_t, double>> probes;
};

template <class T>
struct RowValues {
  std::vector<T> residual;
  std::vector<RowLinearization> lin;
};

/// Residuals from probe values v (each the probe's order-th derivative).
template <class T>
RowValues<T> rows_from_probes(const RowPlan& plan, const std::vector<T>& v, bool want_lin) {
  const PdeProblem& problem = *plan.problem;
  RowValues<T> out;
  out.residual.resize(plan.rows.size());
  if (want_lin) out.lin.resize(plan.rows.size());
  for (std::size_t r = 0; r < plan.rows.size(); ++r) {
    const LossRow& row = plan.rows[r];
    T u = T(0);
    for (const ProbeTerm& t : row.terms) u += static_cast<T>(t.weight) * v[t.probe];
    if (row.nonlinear_probe) {
      const T phi = v[*row.nonlinear_probe];
      const T eps = static_cast<T>(problem.epsilon);
      u += (phi - phi * phi * phi) / eps;
    }
    const T scale = static_cast<T>(row.scale);
    out.residual[r] = scale * (u - static_cast<T>(row.target));
    if (want_lin) {
      auto& lin = out.lin[r].probes;
      for (const ProbeTerm& t : row.terms) lin.emplace_back(t.probe, row.scale * t.weight);
      if (row.nonlinear_probe) {
        const double phi = static_cast<double>(v[*row.nonlinear_probe]);
        lin.emplace_back(*row.nonlinear_probe, row.scale * problem.nonlinear_derivative(phi));
      }
    }
  }
  return out;
}

template <class T>
void summarize(const RowPlan& plan, const std::vector<T>& residual, Evaluation& ev) {
  ev.residual.assign(residual.begin(), residual.end());
  T loss = T(0);
  T loss_f = T(0);
  for (std::size_t r = 0; r < residual.size(); ++r) {
    const T sq = residual[r] * residual[r];
    loss += sq;
    if (r < plan.residual_rows) loss_f += sq;
  }
  ev.loss = static_cast<double>(loss);
  ev.loss_f = static_cast<double>(loss_f);
  double target = 0.0;
  for (const LossRow& row : plan.rows) target += row.scale * row.target * row.scale * row.target;
  ev.rel_train_err = std::sqrt(ev.loss) / std::sqrt(target);
  ev.finite = std::isfinite(ev.loss);
}

/// dL/dv_p = sum over rows of 2 r dr/dv_p.
template <class T>
std::vector<T> probe_adjoints(const RowPlan& plan, const RowValues<T>& rv) {
  std::vector<T> g(plan.probes.size(), T(0));
  for (std::size_t r = 0; r < plan.rows.size(); ++r)
    for (const auto& [p, c] : rv.lin[r].probes) g[p] += T(2) * rv.residual[r] * static_cast<T>(c);
  return g;
}

// ------------------------------------------------------------ two-layer path

template <class T>
struct ShallowTables {
  std::size_t m = 0;
  std::size_t d = 0;
  std::vector<T> a;
  std::vector<T> w;  // m x d
  std::vector<T> b;
  // Per probe p and neuron j: sigma^(K)(z), sigma^(K+1)(z), w_axis^K, K w_axis^(K-1).
  std::vector<T> s0;
  std::vector<T> s1;
  std::vector<T> wk;
  std::vector<T> dwk;
  std::vector<T> value;  // per probe
};

template <class T>
ShallowTables<T> shallow_forward(const FeatureModel& model, const RowPlan& plan) {
  ShallowTables<T> t;
  t.m = model.neurons();
  t.d = model.input_dim();
  t.a.assign(model.a.begin(), model.a.end());
  t.w.assign(model.w.data().begin(), model.w.data().end());
  t.b.assign(model.b.begin(), model.b.end());
  const std::size_t np = plan.probes.size();
  t.s0.resize(np * t.m);
  t.s1.resize(np * t.m);
  t.wk.resize(np * t.m);
  t.dwk.resize(np * t.m);
  t.value.assign(np, T(0));
  double der[6];
  for (std::size_t p = 0; p < np; ++p) {
    const Probe& pr = plan.probes[p];
    const int k = pr.order;
    const auto axis = static_cast<std::size_t>(pr.axis);
    T acc = T(0);
    for (std::size_t j = 0; j < t.m; ++j) {
      T z = t.b[j];
      for (std::size_t c = 0; c < t.d; ++c) z += t.w[j * t.d + c] * static_cast<T>(pr.x[c]);
      activation_derivatives(model.activation, static_cast<double>(z), k + 1, der);
      const T we = t.w[j * t.d + axis];
      T pw = T(1);
      T dpw = T(0);
      for (int i = 0; i < k; ++i) {
        dpw = dpw * we + pw;
        pw *= we;
      }
      const std::size_t idx = p * t.m + j;
      t.s0[idx] = static_cast<T>(der[k]);
      t.s1[idx] = static_cast<T>(der[k + 1]);
      t.wk[idx] = pw;
      t.dwk[idx] = dpw;
      acc += t.a[j] * pw * t.s0[idx];
    }
    t.value[p] = acc;
  }
  return t;
}

/// out += coeff * dv_p/dtheta in the [a | w | b] layout.
template <class T, class Out>
void shallow_probe_gradient(const ShallowTables<T>& t, const RowPlan& plan, std::size_t p, T coeff,
                            Out* out) {
  const Probe& pr = plan.probes[p];
  const auto axis = static_cast<std::size_t>(pr.axis);
  const std::size_t m = t.m;
  const std::size_t d = t.d;
  Out* ga = out;
  Out* gw = out + m;
  Out* gb = out + m + m * d;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t idx = p * m + j;
    const T s0 = t.s0[idx];
    const T s1 = t.s1[idx];
    const T wk = t.wk[idx];
    const T aj = t.a[j];
    ga[j] += static_cast<Out>(coeff * wk * s0);
    const T slope = coeff * aj * wk * s1;
    gb[j] += static_cast<Out>(slope);
    for (std::size_t c = 0; c < d; ++c) {
      T v = slope * static_cast<T>(pr.x[c]);
      if (c == axis) v += coeff * aj * t.dwk[idx] * s0;
      gw[j * d + c] += static_cast<Out>(v);
    }
  }
}

template <class T>
Evaluation shallow_evaluate(const FeatureModel& model, const RowPlan& plan, bool with_gradient) {
  const ShallowTables<T> t = shallow_forward<T>(model, plan);
  const RowValues<T> rv = rows_from_probes<T>(plan, t.value, with_gradient);
  Evaluation ev;
  summarize(plan, rv.residual, ev);
  if (!with_gradient || !ev.finite) return ev;
  const std::vector<T> adj = probe_adjoints(plan, rv);
  std::vector<T> g(t.m * (t.d + 2), T(0));
  for (std::size_t p = 0; p < plan.probes.size(); ++p)
    if (adj[p] != T(0)) shallow_probe_gradient(t, plan, p, adj[p], g.data());
  ev.gradient.assign(g.begin(), g.end());
  return ev;
}

DenseMatrix shallow_jacobian(const FeatureModel& model, const RowPlan& plan) {
  const ShallowTables<double> t = shallow_forward<double>(model, plan);
  const RowValues<double> rv = rows_from_probes<double>(plan, t.value, true);
  DenseMatrix jac(plan.rows.size(), t.m * (t.d + 2));
  for (std::size_t r = 0; r < plan.rows.size(); ++r)
    for (const auto& [p, c] : rv.lin[r].probes)
      shallow_probe_gradient(t, plan, p, c, jac.row(r).data());
  return jac;
}

// ----------------------------------------------------------------- deep path

struct DeepForward {
  NetworkJets jets;
  std::vector<double> value;
  std::vector<double> factorial;
};

DeepForward deep_forward(const DeepNetwork& net, const RowPlan& plan, bool keep_slopes) {
  const std::size_t np = plan.probes.size();
  const std::size_t dim = net.input_dim();
  DenseMatrix pts(np, dim);
  DenseMatrix dirs(np, dim);
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t c = 0; c < dim; ++c) pts(p, c) = plan.probes[p].x[c];
    dirs(p, static_cast<std::size_t>(plan.probes[p].axis)) = 1.0;
  }
  DeepForward f;
  f.jets = forward_jets(net, pts, dirs, plan.max_order, keep_slopes);
  f.factorial.assign(static_cast<std::size_t>(plan.max_order) + 1, 1.0);
  for (std::size_t k = 1; k < f.factorial.size(); ++k)
    f.factorial[k] = f.factorial[k - 1] * static_cast<double>(k);
  f.value.resize(np);
  for (std::size_t p = 0; p < np; ++p) {
    const int k = plan.probes[p].order;
    f.value[p] = f.factorial[static_cast<std::size_t>(k)] * f.jets.coefficient(p, k);
  }
  return f;
}

/// Columns of the given probes, compacted in order.
DenseMatrix probe_columns(const DenseMatrix& m, std::span<const std::size_t> probes,
                          std::size_t stride) {
  DenseMatrix out(m.rows(), probes.size() * stride);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r);
    auto dst = out.row(r);
    for (std::size_t q = 0; q < probes.size(); ++q)
      for (std::size_t k = 0; k < stride; ++k) dst[q * stride + k] = src[probes[q] * stride + k];
  }
  return out;
}

/// Reverse accumulation through the jet forward pass restricted to the
/// listed probes; seeds are dL/dv for each listed probe. Adds into grad in
/// DeepNetwork::parameters() layout.
void deep_reverse(const DeepNetwork& net, const DeepForward& fwd, const RowPlan& plan,
                  std::span<const std::size_t> probes, std::span<const double> seeds,
                  bool compact, double* grad) {
  const NetworkJets& jets = fwd.jets;
  const std::size_t stride = jets.stride();
  const std::size_t cols = probes.size() * stride;
  auto view = [&](const DenseMatrix& m) {
    return compact ? probe_columns(m, probes, stride) : m;
  };

  DenseMatrix zbar(1, cols);
  for (std::size_t q = 0; q < probes.size(); ++q) {
    const int k = plan.probes[probes[q]].order;
    zbar(0, q * stride + static_cast<std::size_t>(k)) = seeds[q] * fwd.factorial[static_cast<std::size_t>(k)];
  }

  // Parameter offsets per layer.
  std::vector<std::size_t> offset(net.layers.size() + 1, 0);
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    offset[l + 1] = offset[l] + net.layers[l].weight.rows() * net.layers[l].weight.cols() +
                    net.layers[l].bias.size();

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    const DenseMatrix h = view(jets.inputs[l]);
    const DenseMatrix wbar = matmul_nt(zbar, h);
    double* gw = grad + offset[l];
    const auto wd = wbar.data();
    for (std::size_t i = 0; i < wd.size(); ++i) gw[i] += wd[i];
    double* gb = gw + wd.size();
    for (std::size_t r = 0; r < zbar.rows(); ++r) {
      const auto zr = zbar.row(r);
      double s = 0.0;
      for (std::size_t q = 0; q < probes.size(); ++q) s += zr[q * stride];
      gb[r] += s;
    }
    if (l == 0) break;
    const DenseMatrix hbar = matmul_tn(layer.weight, zbar);
    // h = sigma(z_prev): zbar_i = sum_{k >= i} hbar_k * [sigma'(z_prev)]_{k-i}.
    const DenseMatrix slope = view(jets.slopes[l - 1]);
    DenseMatrix next(hbar.rows(), cols);
    for (std::size_t r = 0; r < hbar.rows(); ++r) {
      const auto hb = hbar.row(r);
      const auto sl = slope.row(r);
      auto nz = next.row(r);
      for (std::size_t q = 0; q < probes.size(); ++q) {
        const std::size_t base = q * stride;
        for (std::size_t i = 0; i < stride; ++i) {
          double acc = 0.0;
          for (std::size_t k = i; k < stride; ++k) acc += hb[base + k] * sl[base + k - i];
          nz[base + i] = acc;
        }
      }
    }
    zbar = std::move(next);
  }
}

Evaluation deep_evaluate(const DeepNetwork& net, const RowPlan& plan, bool with_gradient) {
  const DeepForward fwd = deep_forward(net, plan, with_gradient);
  const RowValues<double> rv = rows_from_probes<double>(plan, fwd.value, with_gradient);
  Evaluation ev;
  summarize(plan, rv.residual, ev);
  if (!with_gradient || !ev.finite) return ev;
  const std::vector<double> adj = probe_adjoints(plan, rv);
  std::vector<std::size_t> all(plan.probes.size());
  std::iota(all.begin(), all.end(), 0);
  ev.gradient.assign(net.parameter_count(), 0.0);
  deep_reverse(net, fwd, plan, all, adj, false, ev.gradient.data());
  return ev;
}

DenseMatrix deep_jacobian(const DeepNetwork& net, const RowPlan& plan) {
  const DeepForward fwd = deep_forward(net, plan, true);
  const RowValues<double> rv = rows_from_probes<double>(plan, fwd.value, true);
  DenseMatrix jac(plan.rows.size(), net.parameter_count());
  for (std::size_t r = 0; r < plan.rows.size(); ++r) {
    std::vector<std::size_t> probes;
    std::vector<double> seeds;
    for (const auto& [p, c] : rv.lin[r].probes) {
      auto it = std::find(probes.begin(), probes.end(), p);
      if (it == probes.end()) {
        probes.push_back(p);
        seeds.push_back(c);
      } else {
        seeds[static_cast<std::size_t>(it - probes.begin())] += c;
      }
    }
    deep_reverse(net, fwd, plan, probes, seeds, true, jac.row(r).data());
  }
  return jac;
}

void check_state(const ModelState& state, const RowPlan& plan) {
  if (plan.problem == nullptr) throw std::invalid_argument("row plan has no problem");
  if (state.input_dim() != static_cast<std::size_t>(plan.problem->dim))
    throw std::invalid_argument("model input dimension differs from problem");
  if (state.kind == ModelState::Kind::deep && state.precision == Precision::f32)
    throw std::invalid_argument("single precision is supported for two-layer models only");
}

}  // namespace

Evaluation evaluate_loss(const ModelState& state, const RowPlan& plan, bool with_gradient) {
  check_state(state, plan);
  if (state.kind == ModelState::Kind::deep) return deep_evaluate(state.deep, plan, with_gradient);
  if (state.precision == Precision::f32) return shallow_evaluate<float>(state.shallow, plan, with_gradient);
  return shallow_evaluate<double>(state.shallow, plan, with_gradient);
}

Evaluation loss_and_grad(const ModelState& state, const PdeProblem& problem, const DiffMode& mode,
                         const Grid& grid, const AssemblyOptions& options) {
  return evaluate_loss(state, plan_rows(problem, mode, grid, options), true);
}

DenseMatrix residual_jacobian(const ModelState& state, const RowPlan& plan) {
  check_state(state, plan);
  return state.kind == ModelState::Kind::deep ? deep_jacobian(state.deep, plan)
                                              : shallow_jacobian(state.shallow, plan);
}

// -------------------------------------------------------------------- kernel

Vector clamp_spectrum(std::span<const double> eigenvalues) {
  Vector out(eigenvalues.begin(), eigenvalues.end());
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

KernelSnapshot assemble_kernel_G(const ModelState& state, const RowPlan& plan, double threshold,
                                 std::size_t step) {
  const DenseMatrix jac = residual_jacobian(state, plan);
  KernelSnapshot snap;
  snap.step = step;
  snap.threshold = threshold;
  if (jac.rows() <= kDirectKernelLimit) {
    snap.G = gram_rows(jac);
    snap.eigenvalues = sym_eigenvalues(snap.G);
  } else {
    const Vector s = singular_values(jac);
    snap.eigenvalues.assign(jac.rows(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) snap.eigenvalues[i] = s[i] * s[i];
  }
  const Vector clamped = clamp_spectrum(snap.eigenvalues);
  if (clamped.front() > 0.0) {
    snap.cutoff = effective_cutoff(clamped, threshold);
    snap.entropy = entropy_of_top(clamped, snap.cutoff);
  }
  return snap;
}

Vector ResidualModes::component(std::size_t i) const {
  Vector v = eigenvectors.column(i);
  for (double& x : v) x *= coefficients[i];
  return v;
}

ResidualModes residual_eigendecomposition(const DenseMatrix& kernel, std::span<const double> residual) {
  if (kernel.rows() != kernel.cols() || kernel.rows() != residual.size())
    throw std::invalid_argument("residual_eigendecomposition: kernel and residual sizes differ");
  SymEigResult eig = sym_eig(kernel);
  ResidualModes out;
  out.coefficients = matvec_t(eig.eigenvectors, residual);
  out.energies.resize(out.coefficients.size());
  for (std::size_t i = 0; i < out.energies.size(); ++i)
    out.energies[i] = out.coefficients[i] * out.coefficients[i];
  out.eigenvalues = std::move(eig.eigenvalues);
  out.eigenvectors = std::move(eig.eigenvectors);
  return out;
}

// ------------------------------------------------------------------ training

void adam_update(std::span<double> theta, std::span<const double> grad, AdamMoments& moments,
                 double learning_rate) {
  if (grad.size() != theta.size()) throw std::invalid_argument("adam_update: size mismatch");
  if (moments.m.empty()) {
    moments.m.assign(theta.size(), 0.0);
    moments.v.assign(theta.size(), 0.0);
  }
  moments.t += 1;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(moments.t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(moments.t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    moments.m[i] = kAdamBeta1 * moments.m[i] + (1.0 - kAdamBeta1) * grad[i];
    moments.v[i] = kAdamBeta2 * moments.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    const double mhat = moments.m[i] / c1;
    const double vhat = moments.v[i] / c2;
    theta[i] -= learning_rate * mhat / (std::sqrt(vhat) + kAdamEpsilon);
  }
}

double l2_relative_error(const ModelState& state, const PdeProblem& problem, const Grid& eval_grid) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < eval_grid.size(); ++i) {
    const Point x = eval_grid.point(i);
    const double u = problem.exact(x);
    const double e = state.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(problem.dim))) - u;
    num += e * e;
    den += u * u;
  }
  if (den == 0.0) throw std::invalid_argument("l2_relative_error: exact solution vanishes on the grid");
  return std::sqrt(num / den);
}

TrainHistory train(ModelState state, const PdeProblem& problem, const Grid& grid,
                   const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("train: learning rate must be non-negative");
  if (config.steps < 1) throw std::invalid_argument("train: steps must be at least 1");
  if (config.record_interval < 1) throw std::invalid_argument("train: record interval must be at least 1");
  const RowPlan plan = plan_rows(problem, config.mode, grid, config.assembly);
  check_state(state, plan);
  const Grid eval = make_eval_grid(problem, config.eval_points);

  TrainHistory hist;
  AdamMoments moments;
  Vector theta = state.parameters();

  auto record = [&](std::size_t step, const Evaluation& ev) {
    hist.steps.push_back(step);
    hist.loss_pinn.push_back(ev.loss);
    hist.loss_f.push_back(ev.loss_f);
    hist.rel_train_err.push_back(ev.rel_train_err);
    hist.rel_l2_err.push_back(l2_relative_error(state, problem, eval));
  };
  auto snapshot_due = [&](std::size_t step) {
    if (!config.kernel_snapshots) return false;
    if (config.snapshot_interval == 0) return step == config.steps;
    return step % config.snapshot_interval == 0 || step == config.steps;
  };

  for (std::size_t step = 0;; ++step) {
    const bool last = step == config.steps;
    Evaluation ev = evaluate_loss(state, plan, !last);
    if (!ev.finite || (!last && !std::all_of(ev.gradient.begin(), ev.gradient.end(),
                                             [](double g) { return std::isfinite(g); }))) {
      hist.diverged = true;
      hist.divergence_step = step;
      break;
    }
    if (step % config.record_interval == 0 || last) record(step, ev);
    if (snapshot_due(step))
      hist.snapshots.push_back(assemble_kernel_G(state, plan, config.kernel_threshold, step));
    if (last) break;
    if (config.optimizer == Optimizer::gd) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * ev.gradient[i];
    } else {
      adam_update(theta, ev.gradient, moments, config.learning_rate);
    }
    state.set_parameters(theta);
    theta = state.parameters();
  }
  hist.final_state = std::move(state);
  return hist;
}

// ---------------------------------------------------------- flow envelopes

std::vector<FlowSample> rfm_gradient_flow(const AssembledSystem& sys, Vector a0, double lr,
                                          std::size_t steps, std::size_t record_interval) {
  if (a0.size() != sys.A.cols()) throw std::invalid_argument("rfm_gradient_flow: coefficient size mismatch");
  if (!(lr > 0.0) || record_interval < 1) throw std::invalid_argument("rfm_gradient_flow: bad step settings");
  std::vector<FlowSample> out;
  Vector a = std::move(a0);
  for (std::size_t step = 0; step <= steps; ++step) {
    Vector r = matvec(sys.A, a);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= sys.f[i];
    if (step % record_interval == 0 || step == steps)
      out.push_back({2.0 * lr * static_cast<double>(step), dot(r, r), r, 0});
    if (step == steps) break;
    const Vector g = matvec_t(sys.A, r);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] -= 2.0 * lr * g[j];
  }
  return out;
}

namespace {

std::vector<std::optional<SymEigResult>> kernel_cache(std::size_t n) { return std::vector<std::optional<SymEigResult>>(n); }

const SymEigResult& cached_eig(std::vector<std::optional<SymEigResult>>& cache,
                               std::span<const DenseMatrix> kernels, std::size_t k) {
  if (k >= kernels.size()) throw std::invalid_argument("flow sample refers to a missing kernel");
  if (!cache[k]) cache[k] = sym_eig(kernels[k]);
  return *cache[k];
}

}  // namespace

Theorem1Report theorem1_envelopes(std::span<const FlowSample> samples,
                                  std::span<const DenseMatrix> kernels, double a, double b,
                                  double t_star, double t_end, double slack) {
  if (!(b > a)) throw std::invalid_argument("theorem1_envelopes: requires b > a");
  Theorem1Report rep;
  rep.a = a;
  rep.b = b;
  rep.t_star = t_star;
  rep.t_end = t_end;
  rep.eta = std::numeric_limits<double>::infinity();
  rep.zeta = 0.0;
  rep.band_mean_min = std::numeric_limits<double>::infinity();
  rep.band_mean_max = 0.0;
  auto cache = kernel_cache(kernels.size());

  double loss_star = std::numeric_limits<double>::quiet_NaN();
  for (const FlowSample& s : samples) {
    if (s.time < t_star || s.time > t_end) continue;
    const SymEigResult& eig = cached_eig(cache, kernels, s.kernel);
    if (eig.eigenvalues.size() != s.residual.size())
      throw std::invalid_argument("theorem1_envelopes: kernel and residual sizes differ");
    const Vector lam = clamp_spectrum(eig.eigenvalues);
    const std::size_t ea = effective_cutoff(lam, a);
    const std::size_t eb = effective_cutoff(lam, b);
    if (eb >= ea) throw std::invalid_argument("theorem1_envelopes: band between thresholds is empty");
    const Vector c = matvec_t(eig.eigenvectors, s.residual);
    double emin = std::numeric_limits<double>::infinity();
    double emax = 0.0;
    double band_energy = 0.0;
    double lam_sum = 0.0;
    for (std::size_t i = eb; i < ea; ++i) {
      const double e = c[i] * c[i];
      emin = std::min(emin, e);
      emax = std::max(emax, e);
      band_energy += e;
      lam_sum += lam[i];
    }
    const double total = dot(s.residual, s.residual);
    const double mean = lam_sum / static_cast<double>(ea - eb);
    rep.eta = std::min(rep.eta, emax > 0.0 ? emin / emax : 1.0);
    rep.zeta = std::max(rep.zeta, emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity());
    rep.band_mean_min = std::min(rep.band_mean_min, mean);
    rep.band_mean_max = std::max(rep.band_mean_max, mean);
    if (rep.times.empty()) loss_star = s.loss;
    rep.times.push_back(s.time);
    rep.loss.push_back(s.loss);
    rep.out_of_band_fraction.push_back(total > 0.0 ? std::max(0.0, 1.0 - band_energy / total) : 0.0);
  }
  if (rep.times.empty()) throw std::invalid_argument("theorem1_envelopes: no samples in the window");

  const double t0 = rep.times.front();
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    const double dt = rep.times[i] - t0;
    const double lo = dt == 0.0 ? loss_star : std::exp(-2.0 * rep.zeta * rep.band_mean_max * dt) * loss_star;
    const double hi = dt == 0.0 ? loss_star : std::exp(-2.0 * rep.eta * rep.band_mean_min * dt) * loss_star;
    rep.lower.push_back(lo);
    rep.upper.push_back(hi);
    if (rep.loss[i] < lo * (1.0 - slack) || rep.loss[i] > hi * (1.0 + slack)) ++rep.violations;
    rep.max_out_of_band_fraction = std::max(rep.max_out_of_band_fraction, rep.out_of_band_fraction[i]);
  }
  rep.violation_fraction = static_cast<double>(rep.violations) / static_cast<double>(rep.times.size());
  return rep;
}

double default_t_star(std::span<const FlowSample> samples, std::span<const DenseMatrix> kernels,
                      double b, double fraction) {
  if (samples.empty()) throw std::invalid_argument("default_t_star: no samples");
  auto cache = kernel_cache(kernels.size());
  for (const FlowSample& s : samples) {
    const SymEigResult& eig = cached_eig(cache, kernels, s.kernel);
    const Vector lam = clamp_spectrum(eig.eigenvalues);
    const std::size_t eb = effective_cutoff(lam, b);
    const Vector c = matvec_t(eig.eigenvectors, s.residual);
    double top = 0.0;
    for (std::size_t i = 0; i < eb; ++i) top += c[i] * c[i];
    if (top < fraction * dot(s.residual, s.residual)) return s.time;
  }
  return samples.back().time;
}

}  // namespace adfd
