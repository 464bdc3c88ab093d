#pragma once

#include <span>
#include <utility>

#include "decompnet/model.hpp"

namespace decompnet {

struct NnlsResult {
  SigmaVector sigma;
  bool converged = false;
  int iterations = 0;
};

/// Solves (H^T H + eps I) sigma = H^T x by Cholesky; clamps negatives to zero on request.
SigmaVector solve_sigma_ridge(const Matrix& h, std::span<const double> x, double eps,
                              bool clamp_nonneg);

/// Projected gradient on 0.5 ||x - H sigma||^2 with step 1/L (L = largest
/// eigenvalue of H^T H) and projection max(., 0). Every few iterations the
/// current support is polished with an exact least-squares solve, accepted
/// only when feasible and not worse. Stops when the projected-gradient norm
/// is at most tol.
NnlsResult solve_sigma_nnls(const Matrix& h, std::span<const double> x, double tol, int max_iter);

/// Exhaustive active-set enumeration, N <= 12. Test oracle.
SigmaVector nnls_oracle(const Matrix& h, std::span<const double> x);

/// Unit-norm columns; zero columns (norm < 1e-30) keep their values and get norm 1.
std::pair<Matrix, Vector> normalize_columns(const Matrix& h);

/// ||x - H sigma||^2
double residual_sq(const Matrix& h, std::span<const double> x, std::span<const double> sigma);

/// Largest KKT violation of the NNLS problem at sigma, measured on the gradient H^T (H sigma - x).
double nnls_kkt_residual(const Matrix& h, std::span<const double> x, std::span<const double> sigma);

/// Per-sample scale estimate according to config.sigma_mode.
SigmaVector estimate_sigma(const ModelConfig& config, const Matrix& h, std::span<const double> x);

}  // namespace decompnet
