#pragma once

// Spectral diagnostics of system matrices and kernels: effective cut-off,
// truncated entropy, truncated pseudo-inverse solves, and runtime checks of
// the singular-value comparison results between AD and FD systems.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adfd/assembly.hpp"
#include "adfd/features.hpp"
#include "adfd/linalg.hpp"
#include "adfd/problems.hpp"

namespace adfd {

/// Count of sigma_i >= a * sigma[0]. sigma must be descending and
/// non-negative, 0 <= a < 1.
std::size_t effective_cutoff(std::span<const double> sigma, double a);

/// Normalized Shannon entropy of the top-k values; nullopt when k == 1.
std::optional<double> entropy_of_top(std::span<const double> sigma, std::size_t k);

/// entropy_of_top(sigma, effective_cutoff(sigma, a)).
std::optional<double> truncated_entropy(std::span<const double> sigma, double a);

/// out[P] = sum_{i > P} sigma_i^2 for P = 0..n, non-increasing, out[n] = 0.
Vector tail_energy(std::span<const double> sigma);

struct SpectralReport {
  Vector sigma;
  double sigma_max = 0.0;
  double threshold = 0.0;
  std::size_t cutoff = 0;
  std::optional<double> entropy;
  Vector tail_energy;
};

SpectralReport spectral_report(std::span<const double> sigma, double a);

struct TruncatedSolve {
  Vector coefficients;
  double rel_residual = 0.0;
};

/// a = sum_{i <= P} (u_i . f / sigma_i) v_i with rel_residual = |Aa - f| / |f|.
/// Rejects P outside 1..min(m, n) and sigma_P == 0.
TruncatedSolve truncated_pinv_solve(const DenseMatrix& a, std::span<const double> f,
                                    std::size_t rank);
/// Reuses a factorization of a.
TruncatedSolve truncated_pinv_solve(const SvdResult& factors, const DenseMatrix& a,
                                    std::span<const double> f, std::size_t rank);

struct TruncationSweep {
  std::vector<std::size_t> positions;
  Vector rel_residual;
};

/// positions must be ascending; one factorization serves every rank.
TruncationSweep truncation_sweep(const DenseMatrix& a, std::span<const double> f,
                                 std::span<const std::size_t> positions);

/// Extreme-eigenvalue sandwich of A_AD^T A_AD around A_FD^T A_FD.
struct Prop1Report {
  double h = 0.0;
  double lambda_max_fd = 0.0;   // of A_FD^T A_FD
  double lambda_max_ad = 0.0;   // of A_AD^T A_AD
  double s_min = 0.0;           // extreme eigenvalues of S
  double s_max = 0.0;
  double lower = 0.0;           // lambda_max_fd + h^2 s_min
  double upper = 0.0;           // lambda_max_fd + h^2 s_max
  double slack = 0.0;           // absolute slack applied on both sides
  bool holds = false;
};

/// Uses residual rows only; h is the FD step of sys_fd.
Prop1Report verify_prop1(const AssembledSystem& sys_ad, const AssembledSystem& sys_fd);

struct Prop2Report {
  bool weights_invertible = false;
  std::optional<double> ratio;          // sigma_min(A_0) / sigma_min(A_k)
  double threshold = 0.0;               // 1 / (s_min(C_k) * s_min(D_k^{-1}))
  double stencil_s_min = 0.0;
  double inverse_weight_s_min = 0.0;
  bool hypothesis_holds = false;
  double sigma_min_fd = 0.0;
  double sigma_min_ad = 0.0;
  bool conclusion_holds = false;
  /// "hypothesis held", "hypothesis failed" or "hypothesis unverifiable".
  std::string status;
};

/// 1D only; k is the operator order of the FD system's scheme.
Prop2Report verify_prop2(const FeatureModel& model, const Grid& grid,
                         const AssembledSystem& sys_ad, const AssembledSystem& sys_fd);

struct EntropySpeed {
  std::size_t cutoff_a = 0;
  std::size_t cutoff_b = 0;
  std::optional<double> entropy;
  double lhs = 0.0;   // log(e(a)) / e(a) * H(a)
  double rhs = 0.0;   // mean of lambda_i for e(b) < i <= e(a)
};

/// spectrum descending and non-negative; requires b > a and e(b) < e(a).
EntropySpeed entropy_speed_indicator(std::span<const double> spectrum, double a, double b);

}  // namespace adfd
