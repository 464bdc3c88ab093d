#include "decompnet/loss.hpp"

#include <cmath>

#include "decompnet/errors.hpp"

namespace decompnet {
namespace {

void check(std::span<const double> x, const SweepState& state, std::span<const double> sigma) {
  if (state.steps.empty()) throw UsageError("sweep state is empty");
  if (state.components.rows != x.size()) throw ShapeError("x length differs from components");
  if (sigma.size() != state.branches) throw ShapeError("sigma length differs from branch count");
}

Vector residual(std::span<const double> x, const Matrix& h, std::span<const double> sigma) {
  Vector e(x.begin(), x.end());
  linalg::axpy(-1.0, linalg::matvec(h, sigma), e);
  return e;
}

}  // namespace

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  total += o.total;
  recon += o.recon;
  sparsity += o.sparsity;
  orthogonality += o.orthogonality;
  return *this;
}

LossBreakdown& LossBreakdown::operator*=(double a) {
  total *= a;
  recon *= a;
  sparsity *= a;
  orthogonality *= a;
  return *this;
}

LossBreakdown composite_loss(std::span<const double> x, const SweepState& state,
                             std::span<const double> sigma, double lambda_s, double lambda_perp) {
  check(x, state, sigma);
  const std::size_t n = state.branches;
  const Matrix& h = state.components;

  LossBreakdown out;
  out.recon = linalg::squared_norm(residual(x, h, sigma));

  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (double z : state.final_step(i).code) l1 += std::abs(z);
  out.sparsity = lambda_s * l1;

  double pairs = 0.0;
  if (lambda_perp != 0.0) {
    const Matrix g = linalg::gram(h);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) pairs += g(i, j) * g(i, j);
  }
  out.orthogonality = lambda_perp * pairs;
  out.total = out.recon + out.sparsity + out.orthogonality;
  return out;
}

LossGradients loss_gradients(std::span<const double> x, const SweepState& state,
                             std::span<const double> sigma, double lambda_s, double lambda_perp) {
  check(x, state, sigma);
  const std::size_t n = state.branches;
  const std::size_t d = x.size();
  const Matrix& h = state.components;
  const Vector e = residual(x, h, sigma);
  const Matrix g = lambda_perp != 0.0 ? linalg::gram(h) : Matrix(n, n);

  LossGradients out;
  out.recon.assign(n, Vector(d, 0.0));
  out.code.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    linalg::axpy(-2.0 * sigma[i], e, out.recon[i]);
    if (lambda_perp != 0.0) {
      // 2 from the square, 2 because (i, j) and (j, i) are both counted
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) {
          const Vector col = h.column(j);
          linalg::axpy(4.0 * lambda_perp * g(i, j), col, out.recon[i]);
        }
    }
    const Vector& z = state.final_step(i).code;
    out.code[i].resize(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
      out.code[i][k] = z[k] > 0.0 ? lambda_s : (z[k] < 0.0 ? -lambda_s : 0.0);
  }
  return out;
}

}  // namespace decompnet
