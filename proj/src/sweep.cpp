#include "decompnet/sweep.hpp"

#include <cmath>

#include "decompnet/errors.hpp"

namespace decompnet {
namespace {

void guard(std::span<const double> v, std::size_t t, std::size_t i, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x) || std::abs(x) > kDivergenceLimit) {
      throw DivergenceError(static_cast<int>(t + 1), static_cast<int>(i + 1),
                            std::string("sweep diverged: ") + what + " of branch " +
                                std::to_string(i + 1) + " at sweep " + std::to_string(t + 1) +
                                " is " + (std::isfinite(x) ? "out of range" : "non-finite"));
    }
  }
}

void check_inputs(const DecomposerModel& model, std::span<const double> x,
                  std::span<const double> sigma) {
  if (x.size() != model.dim)
    throw ShapeError("input has length " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.dim));
  if (sigma.size() != model.n_branches())
    throw ShapeError("sigma has length " + std::to_string(sigma.size()) + ", model has " +
                     std::to_string(model.n_branches()) + " branches");
}

}  // namespace

Vector compute_residual(std::span<const double> x, std::span<const Vector> recons,
                        std::span<const double> sigma, std::size_t i) {
  if (i >= recons.size())
    throw UsageError("branch index " + std::to_string(i) + " out of range for " +
                     std::to_string(recons.size()) + " branches");
  if (sigma.size() != recons.size()) throw ShapeError("sigma length differs from branch count");
  Vector r(x.begin(), x.end());
  for (std::size_t j = 0; j < recons.size(); ++j) {
    if (j == i) continue;
    if (recons[j].size() != x.size()) throw ShapeError("reconstruction length differs from x");
    linalg::axpy(-sigma[j], recons[j], r);
  }
  return r;
}

SweepState run_sweeps(const DecomposerModel& model, std::span<const double> x,
                      std::span<const double> sigma) {
  check_inputs(model, x, sigma);
  const std::size_t n = model.n_branches();
  const std::size_t d = model.dim;
  const auto k = static_cast<std::size_t>(model.config.sweeps);
  const double alpha = model.config.damping;
  const bool jacobi = model.config.schedule == Schedule::Jacobi;

  SweepState state;
  state.sweeps = k;
  state.branches = n;
  state.steps.reserve(k * n);

  std::vector<Vector> current(n, Vector(d, 0.0));
  std::vector<Vector> previous = current;
  for (std::size_t t = 0; t < k; ++t) {
    previous = current;
    // Gauss-Seidel reads `current`, which already holds this sweep's x̂_j for j < i.
    const std::vector<Vector>& source = jacobi ? previous : current;
    for (std::size_t i = 0; i < n; ++i) {
      SweepStep step;
      step.residual = compute_residual(x, source, sigma, i);
      guard(step.residual, t, i, "residual");
      BranchOutput out = branch_forward(model.branches[i], step.residual, model.mask(i));
      guard(out.code, t, i, "code");
      guard(out.recon, t, i, "reconstruction");
      step.code = std::move(out.code);
      step.raw_recon = std::move(out.recon);
      step.recon = step.raw_recon;
      if (alpha != 1.0) {
        for (std::size_t p = 0; p < d; ++p)
          step.recon[p] = (1.0 - alpha) * previous[i][p] + alpha * step.raw_recon[p];
      }
      current[i] = step.recon;
      state.steps.push_back(std::move(step));
    }
  }

  state.components = Matrix(d, n);
  state.reconstruction.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    state.components.set_column(i, current[i]);
    linalg::axpy(sigma[i], current[i], state.reconstruction);
  }
  return state;
}

void sweep_backward_accumulate(const DecomposerModel& model, std::span<const double> x,
                               std::span<const double> sigma, const SweepState& state,
                               std::span<const Vector> recon_grads,
                               std::span<const Vector> code_grads,
                               std::vector<BranchParams>& grads) {
  check_inputs(model, x, sigma);
  const std::size_t n = model.n_branches();
  const std::size_t d = model.dim;
  const auto k = static_cast<std::size_t>(model.config.sweeps);
  if (state.sweeps != k || state.branches != n || state.steps.size() != k * n)
    throw UsageError("sweep state does not match the model configuration");
  if (recon_grads.size() != n || code_grads.size() != n || grads.size() != n)
    throw UsageError("expected one upstream gradient and accumulator per branch");

  const double alpha = model.config.damping;
  const bool jacobi = model.config.schedule == Schedule::Jacobi;
  const bool full = model.config.grad_mode == ResidualGradMode::FullUnroll;

  // adjoint[t][i] = dL/dx̂_i^(t), t = 0..K with t = 0 the constant zero init.
  std::vector<std::vector<Vector>> adjoint(k + 1, std::vector<Vector>(n, Vector(d, 0.0)));
  for (std::size_t i = 0; i < n; ++i) {
    if (recon_grads[i].size() != d) throw ShapeError("reconstruction gradient length differs from d");
    adjoint[k][i] = recon_grads[i];
  }

  const Vector no_code_grad_scalar(1, 0.0);
  Vector input_grad(d);
  for (std::size_t t = k; t-- > 0;) {
    for (std::size_t i = n; i-- > 0;) {
      const SweepStep& step = state.at(t, i);
      const Vector& a = adjoint[t + 1][i];

      Vector raw_grad = a;
      if (alpha != 1.0) {
        linalg::scale(alpha, raw_grad);
        if (t > 0) linalg::axpy(1.0 - alpha, a, adjoint[t][i]);
      }
      const Vector zero_code(step.code.size(), 0.0);
      const Vector& code_grad = (t + 1 == k) ? code_grads[i] : zero_code;

      std::fill(input_grad.begin(), input_grad.end(), 0.0);
      branch_backward_accumulate(model.branches[i], step.residual, model.mask(i), raw_grad,
                                 code_grad, grads[i], input_grad);
      if (!full) continue;

      // r_i^(t) = x - sum_{j != i} sigma_j x̂_j^(src); Gauss-Seidel reads sweep t for j < i.
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const std::size_t src = (!jacobi && j < i) ? t + 1 : t;
        if (src == 0) continue;
        linalg::axpy(-sigma[j], input_grad, adjoint[src][j]);
      }
    }
  }
}

std::vector<BranchParams> sweep_backward(const DecomposerModel& model, std::span<const double> x,
                                         std::span<const double> sigma, const SweepState& state,
                                         std::span<const Vector> recon_grads,
                                         std::span<const Vector> code_grads) {
  std::vector<BranchParams> grads;
  grads.reserve(model.n_branches());
  for (const auto& b : model.branches) grads.push_back(zeros_like(b));
  sweep_backward_accumulate(model, x, sigma, state, recon_grads, code_grads, grads);
  return grads;
}

}  // namespace decompnet
