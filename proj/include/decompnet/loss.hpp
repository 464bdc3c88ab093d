#pragma once

#include <span>
#include <vector>

#include "decompnet/sweep.hpp"

namespace decompnet {

struct LossBreakdown {
  double total = 0.0;
  double recon = 0.0;
  double sparsity = 0.0;
  double orthogonality = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator*=(double a);
  bool operator==(const LossBreakdown&) const = default;
};

/// ||x - sum sigma_i x̂_i||^2 + lambda_s sum_i ||z_i||_1 + lambda_perp sum_{i != j} <x̂_i, x̂_j>^2
/// over the final sweep. The pair sum runs over ordered pairs.
LossBreakdown composite_loss(std::span<const double> x, const SweepState& state,
                             std::span<const double> sigma, double lambda_s, double lambda_perp);

struct LossGradients {
  std::vector<Vector> recon;  // dL/dx̂_i
  std::vector<Vector> code;   // dL/dz_i, l1 subgradient 0 at z = 0
};

LossGradients loss_gradients(std::span<const double> x, const SweepState& state,
                             std::span<const double> sigma, double lambda_s, double lambda_perp);

}  // namespace decompnet
