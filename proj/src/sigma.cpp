#include "decompnet/sigma.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>

#include "decompnet/errors.hpp"

namespace decompnet {
namespace {

void check_shapes(const Matrix& h, std::span<const double> x) {
  if (h.rows != x.size())
    throw ShapeError("component matrix has " + std::to_string(h.rows) + " rows, x has length " +
                     std::to_string(x.size()));
  if (h.cols == 0) throw ShapeError("component matrix has no columns");
}

void check_finite(const Matrix& h, std::span<const double> x) {
  if (!linalg::all_finite(h.data) || !linalg::all_finite(x))
    throw NumericError("sigma solve received non-finite inputs");
}

// Least squares on the given columns only, with a tiny ridge.
Vector restricted_ls(const Matrix& g, std::span<const double> htx, const std::vector<std::size_t>& free,
                     double ridge) {
  const std::size_t m = free.size();
  Matrix sub(m, m);
  Vector rhs(m);
  for (std::size_t a = 0; a < m; ++a) {
    rhs[a] = htx[free[a]];
    for (std::size_t b = 0; b < m; ++b) sub(a, b) = g(free[a], free[b]);
    sub(a, a) += ridge;
  }
  return linalg::cholesky_solve(sub, rhs);
}

double objective_from_gram(const Matrix& g, std::span<const double> htx, double xtx,
                           std::span<const double> s) {
  // ||x - H s||^2 = x'x - 2 s'H'x + s'G s
  const Vector gs = linalg::matvec(g, s);
  return xtx - 2.0 * linalg::dot(s, htx) + linalg::dot(s, gs);
}

double projected_gradient_norm(std::span<const double> sigma, std::span<const double> grad) {
  double s = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double pg = sigma[i] > 0.0 ? grad[i] : std::min(grad[i], 0.0);
    s += pg * pg;
  }
  return std::sqrt(s);
}

}  // namespace

SigmaVector solve_sigma_ridge(const Matrix& h, std::span<const double> x, double eps,
                              bool clamp_nonneg) {
  check_shapes(h, x);
  if (!(eps > 0.0)) throw UsageError("ridge epsilon must be > 0");
  check_finite(h, x);
  Matrix g = linalg::gram(h);
  for (std::size_t i = 0; i < g.rows; ++i) g(i, i) += eps;
  SigmaVector sigma = linalg::cholesky_solve(g, linalg::matvec_transposed(h, x));
  if (clamp_nonneg)
    for (double& s : sigma) s = std::max(s, 0.0);
  return sigma;
}

NnlsResult solve_sigma_nnls(const Matrix& h, std::span<const double> x, double tol, int max_iter) {
  check_shapes(h, x);
  if (!(tol > 0.0)) throw UsageError("nnls tol must be > 0");
  if (max_iter < 1) throw UsageError("nnls max_iter must be ≥ 1");
  check_finite(h, x);

  const std::size_t n = h.cols;
  const Matrix g = linalg::gram(h);
  const Vector htx = linalg::matvec_transposed(h, x);
  const double xtx = linalg::squared_norm(x);
  const double lipschitz = linalg::symmetric_eigen(g).values.front() * (1.0 + 1e-12);

  NnlsResult result{SigmaVector(n, 0.0), false, 0};
  if (!(lipschitz > 0.0)) {
    // H == 0: every sigma is optimal, zero is the canonical choice.
    result.converged = true;
    return result;
  }
  const double step = 1.0 / lipschitz;
  constexpr int kPolishEvery = 10;

  SigmaVector& sigma = result.sigma;
  double objective = xtx;
  Vector grad(n);
  for (int it = 1; it <= max_iter; ++it) {
    // grad of 0.5||x - H s||^2 is G s - H'x
    grad = linalg::matvec(g, sigma);
    linalg::axpy(-1.0, htx, grad);
    if (projected_gradient_norm(sigma, grad) <= tol) {
      result.converged = true;
      result.iterations = it - 1;
      return result;
    }
    for (std::size_t i = 0; i < n; ++i) sigma[i] = std::max(sigma[i] - step * grad[i], 0.0);
    objective = objective_from_gram(g, htx, xtx, sigma);
    result.iterations = it;

    if (it % kPolishEvery == 0) {
      std::vector<std::size_t> support;
      for (std::size_t i = 0; i < n; ++i)
        if (sigma[i] > 0.0) support.push_back(i);
      if (support.empty()) continue;
      const Vector sub = restricted_ls(g, htx, support, 1e-14 * lipschitz);
      if (std::all_of(sub.begin(), sub.end(), [](double v) { return v >= 0.0; })) {
        SigmaVector candidate(n, 0.0);
        for (std::size_t a = 0; a < support.size(); ++a) candidate[support[a]] = sub[a];
        const double cand_obj = objective_from_gram(g, htx, xtx, candidate);
        if (cand_obj <= objective) {
          sigma = candidate;
          objective = cand_obj;
        }
      }
    }
  }
  grad = linalg::matvec(g, sigma);
  linalg::axpy(-1.0, htx, grad);
  result.converged = projected_gradient_norm(sigma, grad) <= tol;
  return result;
}

SigmaVector nnls_oracle(const Matrix& h, std::span<const double> x) {
  check_shapes(h, x);
  const std::size_t n = h.cols;
  if (n > 12) throw UsageError("nnls_oracle refuses N > 12 (2^N active sets)");
  check_finite(h, x);

  const Matrix g = linalg::gram(h);
  const Vector htx = linalg::matvec_transposed(h, x);
  SigmaVector best(n, 0.0);
  double best_obj = residual_sq(h, x, best);
  for (std::uint32_t set = 1; set < (1u << n); ++set) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
      if (set & (1u << i)) free.push_back(i);
    const Vector sub = restricted_ls(g, htx, free, 1e-12);
    if (!std::all_of(sub.begin(), sub.end(), [](double v) { return v >= 0.0; })) continue;
    SigmaVector cand(n, 0.0);
    for (std::size_t a = 0; a < free.size(); ++a) cand[free[a]] = sub[a];
    const double obj = residual_sq(h, x, cand);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(cand);
    }
  }
  return best;
}

std::pair<Matrix, Vector> normalize_columns(const Matrix& h) {
  Matrix out = h;
  Vector norms(h.cols, 1.0);
  for (std::size_t j = 0; j < h.cols; ++j) {
    Vector col = h.column(j);
    const double nrm = linalg::norm(col);
    if (nrm < 1e-30) continue;
    norms[j] = nrm;
    linalg::scale(1.0 / nrm, col);
    out.set_column(j, col);
  }
  return {std::move(out), std::move(norms)};
}

double residual_sq(const Matrix& h, std::span<const double> x, std::span<const double> sigma) {
  Vector r(x.begin(), x.end());
  linalg::axpy(-1.0, linalg::matvec(h, sigma), r);
  return linalg::squared_norm(r);
}

double nnls_kkt_residual(const Matrix& h, std::span<const double> x,
                         std::span<const double> sigma) {
  Vector grad = linalg::matvec_transposed(h, linalg::sub(linalg::matvec(h, sigma), x));
  double worst = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] < 0.0) worst = std::max(worst, -sigma[i]);
    const double v = sigma[i] > 0.0 ? std::abs(grad[i]) : std::max(-grad[i], 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

SigmaVector estimate_sigma(const ModelConfig& config, const Matrix& h, std::span<const double> x) {
  check_shapes(h, x);
  const std::size_t n = h.cols;
  if (config.sigma_mode == SigmaMode::FixedOnes) return SigmaVector(n, 1.0);

  const Matrix* target = &h;
  std::pair<Matrix, Vector> normalized;
  if (config.normalize_components) {
    normalized = normalize_columns(h);
    target = &normalized.first;
  }

  SigmaVector sigma;
  if (config.sigma_mode == SigmaMode::RidgeClosedForm) {
    sigma = solve_sigma_ridge(*target, x, config.ridge, config.clamp_sigma);
  } else {
    const int max_iter = config.nnls_max_iter > 0
                             ? config.nnls_max_iter
                             : static_cast<int>(10 * n * h.rows);
    sigma = solve_sigma_nnls(*target, x, config.nnls_tol, max_iter).sigma;
  }
  // Scale was solved on unit columns; map back to coefficients on the raw x̂_i.
  if (config.normalize_components)
    for (std::size_t i = 0; i < n; ++i) sigma[i] /= normalized.second[i];
  return sigma;
}

}  // namespace decompnet
