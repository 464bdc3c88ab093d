#pragma once

#include <span>
#include <vector>

#include "decompnet/loss.hpp"
#include "decompnet/model.hpp"

namespace decompnet {

/// Serial is the reference path; Parallel spreads samples over OpenMP threads
/// and reduces in sample order, so both produce bit-identical results.
enum class Execution { Serial, Parallel };

using Batch = std::vector<std::span<const double>>;

/// Sweeps each sample under its warm-start sigma, then solves for a new sigma.
std::vector<SigmaVector> batch_estimate_sigma(const DecomposerModel& model, const Batch& batch,
                                              std::span<const SigmaVector> warm_sigmas,
                                              Execution exec);

struct BatchGradient {
  std::vector<BranchParams> grads;  // gradient of the batch-mean loss
  LossBreakdown loss;               // batch mean
};

BatchGradient batch_loss_gradient(const DecomposerModel& model, const Batch& batch,
                                  std::span<const SigmaVector> sigmas, Execution exec);

/// Number of OpenMP threads the parallel path will use (1 without OpenMP).
int parallel_threads();

}  // namespace decompnet
