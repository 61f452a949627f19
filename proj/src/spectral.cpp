#include "adfd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adfd {

namespace {

void check_spectrum(std::span<const double> sigma) {
  if (sigma.empty()) throw std::invalid_argument("spectrum is empty");
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] >= 0.0)) throw std::invalid_argument("spectrum has a negative or NaN value");
    if (i > 0 && sigma[i] > sigma[i - 1]) throw std::invalid_argument("spectrum is not descending");
  }
}

double min_singular_value(const DenseMatrix& a) { return singular_values(a).back(); }

}  // namespace

std::size_t effective_cutoff(std::span<const double> sigma, double a) {
  check_spectrum(sigma);
  if (!(a >= 0.0 && a < 1.0)) throw std::invalid_argument("cutoff threshold must lie in [0, 1)");
  const double bar = a * sigma[0];
  return static_cast<std::size_t>(
      std::count_if(sigma.begin(), sigma.end(), [bar](double s) { return s >= bar; }));
}

std::optional<double> entropy_of_top(std::span<const double> sigma, std::size_t k) {
  check_spectrum(sigma);
  if (k == 0 || k > sigma.size()) throw std::invalid_argument("entropy_of_top: k out of range");
  if (k == 1) return std::nullopt;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += sigma[i];
  if (total == 0.0) return std::nullopt;
  double h = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double p = sigma[i] / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(k));
}

std::optional<double> truncated_entropy(std::span<const double> sigma, double a) {
  return entropy_of_top(sigma, effective_cutoff(sigma, a));
}

Vector tail_energy(std::span<const double> sigma) {
  Vector out(sigma.size() + 1, 0.0);
  // Accumulate from the small end so tiny tails are not absorbed.
  for (std::size_t p = sigma.size(); p-- > 0;) out[p] = out[p + 1] + sigma[p] * sigma[p];
  return out;
}

SpectralReport spectral_report(std::span<const double> sigma, double a) {
  SpectralReport r;
  r.sigma.assign(sigma.begin(), sigma.end());
  r.cutoff = effective_cutoff(sigma, a);
  r.sigma_max = sigma[0];
  r.threshold = a;
  r.entropy = entropy_of_top(sigma, r.cutoff);
  r.tail_energy = tail_energy(sigma);
  return r;
}

TruncatedSolve truncated_pinv_solve(const SvdResult& factors, const DenseMatrix& a,
                                    std::span<const double> f, std::size_t rank) {
  if (f.size() != a.rows()) throw std::invalid_argument("truncated_pinv_solve: rhs size mismatch");
  if (rank < 1 || rank > factors.sigma.size())
    throw std::invalid_argument("truncated_pinv_solve: rank out of range");
  if (factors.sigma[rank - 1] == 0.0)
    throw std::invalid_argument("truncated_pinv_solve: kept singular value is zero");
  TruncatedSolve out;
  out.coefficients.assign(a.cols(), 0.0);
  const Vector utf = matvec_t(factors.U, f);
  for (std::size_t i = 0; i < rank; ++i) {
    const double c = utf[i] / factors.sigma[i];
    for (std::size_t j = 0; j < a.cols(); ++j) out.coefficients[j] += c * factors.V(j, i);
  }
  Vector r = matvec(a, out.coefficients);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= f[i];
  const double fn = norm2(f);
  if (fn == 0.0) throw std::invalid_argument("truncated_pinv_solve: zero right-hand side");
  out.rel_residual = norm2(r) / fn;
  return out;
}

TruncatedSolve truncated_pinv_solve(const DenseMatrix& a, std::span<const double> f,
                                    std::size_t rank) {
  return truncated_pinv_solve(svd(a), a, f, rank);
}

TruncationSweep truncation_sweep(const DenseMatrix& a, std::span<const double> f,
                                 std::span<const std::size_t> positions) {
  if (!std::is_sorted(positions.begin(), positions.end()))
    throw std::invalid_argument("truncation_sweep: positions must be ascending");
  const SvdResult factors = svd(a);
  TruncationSweep sweep;
  for (std::size_t p : positions) {
    sweep.positions.push_back(p);
    sweep.rel_residual.push_back(truncated_pinv_solve(factors, a, f, p).rel_residual);
  }
  return sweep;
}

Prop1Report verify_prop1(const AssembledSystem& sys_ad, const AssembledSystem& sys_fd) {
  const DenseMatrix e = discrepancy_matrix(sys_ad, sys_fd);
  const DenseMatrix afd = sys_fd.residual_block();
  const DenseMatrix aad = sys_ad.residual_block();
  Prop1Report r;
  r.h = sys_fd.mode.h;
  const double h2 = r.h * r.h;

  const DenseMatrix x = matmul_tn(e, afd);
  DenseMatrix s = x + x.transposed();
  DenseMatrix ete = gram_cols(e);
  ete *= h2;
  s += ete;
  const Vector s_eigs = sym_eigenvalues(s);
  r.s_max = s_eigs.front();
  r.s_min = s_eigs.back();
  r.lambda_max_fd = sym_eigenvalues(gram_cols(afd)).front();
  r.lambda_max_ad = sym_eigenvalues(gram_cols(aad)).front();
  r.lower = r.lambda_max_fd + h2 * r.s_min;
  r.upper = r.lambda_max_fd + h2 * r.s_max;
  r.slack = 1e-8 * std::max({std::abs(r.lambda_max_ad), std::abs(r.lambda_max_fd),
                             h2 * std::abs(r.s_max), h2 * std::abs(r.s_min)});
  r.holds = r.lower <= r.lambda_max_ad + r.slack && r.lambda_max_ad <= r.upper + r.slack;
  return r;
}

Prop2Report verify_prop2(const FeatureModel& model, const Grid& grid,
                         const AssembledSystem& sys_ad, const AssembledSystem& sys_fd) {
  if (grid.dim != 1 || model.input_dim() != 1)
    throw std::invalid_argument("verify_prop2: one-dimensional problems only");
  if (sys_fd.mode.kind != DiffKind::fd) throw std::invalid_argument("verify_prop2: sys_fd must be FD");
  const FdScheme scheme = sys_fd.mode.scheme;
  const int k = scheme == FdScheme::biharm5 ? 4 : 2;

  Prop2Report r;
  r.sigma_min_fd = min_singular_value(sys_fd.residual_block());
  r.sigma_min_ad = min_singular_value(sys_ad.residual_block());
  r.conclusion_holds = r.sigma_min_fd >= r.sigma_min_ad;

  r.stencil_s_min = min_singular_value(build_stencil(scheme, grid.size(), sys_fd.mode.h).dense());
  double max_weight = 0.0;
  r.weights_invertible = true;
  for (std::size_t j = 0; j < model.neurons(); ++j) {
    const double wk = std::pow(std::abs(model.w(j, 0)), k);
    if (wk == 0.0) r.weights_invertible = false;
    max_weight = std::max(max_weight, wk);
  }
  if (!r.weights_invertible) {
    r.status = "hypothesis failed";
    return r;
  }
  r.inverse_weight_s_min = 1.0 / max_weight;
  r.threshold = 1.0 / (r.stencil_s_min * r.inverse_weight_s_min);

  const double s0 = min_singular_value(feature_matrix(model, 0, grid.points));
  const double sk = min_singular_value(feature_matrix(model, k, grid.points));
  if (sk == 0.0) {
    r.status = "hypothesis unverifiable";
    return r;
  }
  r.ratio = s0 / sk;
  r.hypothesis_holds = *r.ratio >= r.threshold;
  r.status = r.hypothesis_holds ? "hypothesis held" : "hypothesis failed";
  return r;
}

EntropySpeed entropy_speed_indicator(std::span<const double> spectrum, double a, double b) {
  if (!(b > a)) throw std::invalid_argument("entropy_speed_indicator: requires b > a");
  EntropySpeed out;
  out.cutoff_a = effective_cutoff(spectrum, a);
  out.cutoff_b = effective_cutoff(spectrum, b);
  if (out.cutoff_b >= out.cutoff_a)
    throw std::invalid_argument("entropy_speed_indicator: band between thresholds is empty");
  out.entropy = entropy_of_top(spectrum, out.cutoff_a);
  const double e = static_cast<double>(out.cutoff_a);
  out.lhs = out.entropy ? std::log(e) / e * *out.entropy : 0.0;
  double sum = 0.0;
  for (std::size_t i = out.cutoff_b; i < out.cutoff_a; ++i) sum += spectrum[i];
  out.rhs = sum / static_cast<double>(out.cutoff_a - out.cutoff_b);
  return out;
}

}  // namespace adfd
