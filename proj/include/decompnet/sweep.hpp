#pragma once

#include <span>
#include <vector>

#include "decompnet/branch.hpp"
#include "decompnet/model.hpp"

namespace decompnet {

// Values above this magnitude abort a sweep.
inline constexpr double kDivergenceLimit = 1e12;

struct SweepStep {
  Vector residual;   // r_i^(t), before masking
  Vector code;       // z_i^(t)
  Vector raw_recon;  // branch output before damping
  Vector recon;      // x̂_i^(t) after damping
};

/// Full per-sweep history of one sample, kept for exact backprop.
struct SweepState {
  std::size_t sweeps = 0;
  std::size_t branches = 0;
  std::vector<SweepStep> steps;  // sweep-major: steps[t * branches + i], t = 0..K-1
  Matrix components;             // d x N, columns are x̂_i^(K)
  Vector reconstruction;         // sum_i sigma_i x̂_i^(K)

  const SweepStep& at(std::size_t t, std::size_t i) const { return steps[t * branches + i]; }
  const SweepStep& final_step(std::size_t i) const { return at(sweeps - 1, i); }
};

/// x - sum_{j != i} sigma_j recons[j].
Vector compute_residual(std::span<const double> x, std::span<const Vector> recons,
                        std::span<const double> sigma, std::size_t i);

/// Runs config.sweeps Gauss-Seidel or Jacobi sweeps from all-zero components.
/// Throws DivergenceError when an intermediate is non-finite or exceeds kDivergenceLimit.
SweepState run_sweeps(const DecomposerModel& model, std::span<const double> x,
                      std::span<const double> sigma);

/// Reverse-mode pass through the sweeps. recon_grads[i] and code_grads[i]
/// are dL/dx̂_i^(K) and dL/dz_i^(K). Returns one gradient per branch.
std::vector<BranchParams> sweep_backward(const DecomposerModel& model, std::span<const double> x,
                                         std::span<const double> sigma, const SweepState& state,
                                         std::span<const Vector> recon_grads,
                                         std::span<const Vector> code_grads);

/// Same, adding into `grads` (one accumulator per branch).
void sweep_backward_accumulate(const DecomposerModel& model, std::span<const double> x,
                               std::span<const double> sigma, const SweepState& state,
                               std::span<const Vector> recon_grads,
                               std::span<const Vector> code_grads,
                               std::vector<BranchParams>& grads);

}  // namespace decompnet
