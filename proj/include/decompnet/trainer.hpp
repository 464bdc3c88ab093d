#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decompnet/batch.hpp"
#include "decompnet/loss.hpp"
#include "decompnet/model.hpp"

namespace decompnet {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments, one flat vector per branch in parameter_blocks order.
struct OptimizerState {
  AdamOptions options;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  long step = 0;

  static OptimizerState for_model(const DecomposerModel& model, const AdamOptions& options);
};

/// Start with `start_sweeps` sweeps and switch to config.sweeps once
/// `raise_after_epoch` epochs have completed.
struct SweepSchedule {
  int start_sweeps = 1;
  int raise_after_epoch = 0;
};

struct EpochStats {
  int epoch = 0;
  int sweeps = 0;
  LossBreakdown loss;       // sample-weighted mean over the epoch
  Vector mean_sigma;        // per branch
  Vector grad_norms;        // per branch, mean over batches
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  bool converged = false;
  std::string reason;
};

struct TrainOptions {
  int epochs = 100;
  std::size_t batch_size = 32;
  // Early stop when the relative change of the epoch loss stays below tol
  // for `patience` consecutive epochs. tol <= 0 disables it.
  double tol = 0.0;
  int patience = 5;
  AdamOptions adam;
  std::optional<SweepSchedule> sweep_schedule;
  // Epochs at the start during which sigma stays at all-ones and Step A is skipped.
  int fixed_sigma_epochs = 0;
  Execution exec = Execution::Parallel;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  DecomposerModel model;
  TrainReport report;
  std::vector<SigmaVector> sigmas;  // last estimate per dataset sample, dataset order
};

struct StepBResult {
  LossBreakdown loss;
  Vector grad_norms;
};

/// Step A: weights frozen, per-sample sigma from sweeps run under warm_sigmas.
std::vector<SigmaVector> step_a_sigma(const DecomposerModel& model, const Batch& batch,
                                      std::span<const SigmaVector> warm_sigmas,
                                      Execution exec = Execution::Parallel);

/// Step B: sigma frozen, one Adam step on the batch-mean composite loss.
StepBResult step_b_weights(DecomposerModel& model, const Batch& batch,
                           std::span<const SigmaVector> sigmas, OptimizerState& optimizer,
                           Execution exec = Execution::Parallel);

TrainResult train(DecomposerModel model, const Dataset& dataset, const TrainOptions& options);

}  // namespace decompnet
