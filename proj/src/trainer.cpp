#include "decompnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "decompnet/branch.hpp"
#include "decompnet/errors.hpp"

namespace decompnet {

OptimizerState OptimizerState::for_model(const DecomposerModel& model, const AdamOptions& options) {
  OptimizerState s;
  s.options = options;
  for (const auto& b : model.branches) {
    s.first_moment.emplace_back(parameter_count(b), 0.0);
    s.second_moment.emplace_back(parameter_count(b), 0.0);
  }
  return s;
}

std::vector<SigmaVector> step_a_sigma(const DecomposerModel& model, const Batch& batch,
                                      std::span<const SigmaVector> warm_sigmas, Execution exec) {
  return batch_estimate_sigma(model, batch, warm_sigmas, exec);
}

StepBResult step_b_weights(DecomposerModel& model, const Batch& batch,
                           std::span<const SigmaVector> sigmas, OptimizerState& opt,
                           Execution exec) {
  const std::size_t n = model.n_branches();
  if (opt.first_moment.size() != n) throw UsageError("optimizer state does not match model");

  BatchGradient g = batch_loss_gradient(model, batch, sigmas, exec);

  StepBResult out;
  out.loss = g.loss;
  out.grad_norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector flat = flatten(g.grads[i]);
    if (!linalg::all_finite(flat))
      throw NumericError("non-finite gradient in branch " + std::to_string(i + 1));
    out.grad_norms[i] = linalg::norm(flat);
  }

  const AdamOptions& a = opt.options;
  ++opt.step;
  const double bias1 = 1.0 - std::pow(a.beta1, static_cast<double>(opt.step));
  const double bias2 = 1.0 - std::pow(a.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < n; ++i) {
    const Vector grad = flatten(g.grads[i]);
    Vector params = flatten(model.branches[i]);
    Vector& m = opt.first_moment[i];
    Vector& v = opt.second_moment[i];
    if (m.size() != params.size()) throw UsageError("optimizer state does not match model");
    for (std::size_t p = 0; p < params.size(); ++p) {
      m[p] = a.beta1 * m[p] + (1.0 - a.beta1) * grad[p];
      v[p] = a.beta2 * v[p] + (1.0 - a.beta2) * grad[p] * grad[p];
      const double m_hat = m[p] / bias1;
      const double v_hat = v[p] / bias2;
      params[p] -= a.learning_rate * m_hat / (std::sqrt(v_hat) + a.epsilon);
    }
    assign_flat(model.branches[i], params);
    if (model.config.normalize_components) normalize_rank1(model.branches[i]);
  }
  return out;
}

TrainResult train(DecomposerModel model, const Dataset& dataset, const TrainOptions& options) {
  check_model(model);
  check_dataset(dataset);
  if (dataset.samples.empty()) throw UsageError("cannot train on an empty dataset");
  if (dataset.dim != model.dim) throw ShapeError("dataset dimension differs from model");
  if (options.batch_size < 1 || options.batch_size > dataset.size())
    throw UsageError("batch_size must lie in [1, dataset size]");
  if (options.epochs < 0) throw UsageError("epochs must be ≥ 0");

  const std::size_t n = model.n_branches();
  const std::size_t count = dataset.size();
  const int target_sweeps = model.config.sweeps;

  TrainResult result;
  result.sigmas.assign(count, SigmaVector(n, 1.0));
  OptimizerState opt = OptimizerState::for_model(model, options.adam);

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(model.config.seed ^ 0xD1B54A32D192ED03ull);

  int quiet_epochs = 0;
  result.report.reason = "epoch limit";
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (options.sweep_schedule)
      model.config.sweeps = epoch < options.sweep_schedule->raise_after_epoch
                                ? options.sweep_schedule->start_sweeps
                                : target_sweeps;

    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.sweeps = model.config.sweeps;
    stats.mean_sigma.assign(n, 0.0);
    stats.grad_norms.assign(n, 0.0);
    std::size_t batches = 0;

    for (std::size_t begin = 0; begin < count; begin += options.batch_size) {
      const std::size_t end = std::min(count, begin + options.batch_size);
      // Sorted ids fix the reduction order independent of the shuffle.
      std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(members.begin(), members.end());

      Batch batch;
      std::vector<SigmaVector> warm;
      for (std::size_t idx : members) {
        batch.emplace_back(dataset.samples[idx].x);
        warm.push_back(result.sigmas[idx]);
      }
      std::vector<SigmaVector> sigmas =
          epoch < options.fixed_sigma_epochs ? warm : step_a_sigma(model, batch, warm, options.exec);
      StepBResult step = step_b_weights(model, batch, sigmas, opt, options.exec);

      LossBreakdown weighted = step.loss;
      weighted *= static_cast<double>(members.size());
      stats.loss += weighted;
      for (std::size_t k = 0; k < members.size(); ++k) {
        linalg::axpy(1.0, sigmas[k], stats.mean_sigma);
        result.sigmas[members[k]] = std::move(sigmas[k]);
      }
      linalg::axpy(1.0, step.grad_norms, stats.grad_norms);
      ++batches;
    }
    stats.loss *= 1.0 / static_cast<double>(count);
    linalg::scale(1.0 / static_cast<double>(count), stats.mean_sigma);
    linalg::scale(1.0 / static_cast<double>(batches), stats.grad_norms);
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!result.report.epochs.empty() && options.tol > 0.0) {
      const double prev = result.report.epochs.back().loss.total;
      const double rel = std::abs(stats.loss.total - prev) / std::max(std::abs(prev), 1e-300);
      quiet_epochs = rel < options.tol ? quiet_epochs + 1 : 0;
    }
    result.report.epochs.push_back(stats);
    if (options.on_epoch) options.on_epoch(stats);
    if (options.tol > 0.0 && quiet_epochs >= options.patience) {
      result.report.converged = true;
      result.report.reason = "relative loss change below tolerance";
      break;
    }
  }
  model.config.sweeps = target_sweeps;
  result.model = std::move(model);
  return result;
}

}  // namespace decompnet
