#include "decompnet/batch.hpp"

#include <exception>

#include "decompnet/errors.hpp"
#include "decompnet/sigma.hpp"
#include "decompnet/sweep.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace decompnet {
namespace {

SigmaVector sample_sigma(const DecomposerModel& model, std::span<const double> x,
                         std::span<const double> warm) {
  if (model.config.sigma_mode == SigmaMode::FixedOnes)
    return SigmaVector(model.n_branches(), 1.0);
  const SweepState state = run_sweeps(model, x, warm);
  return estimate_sigma(model.config, state.components, x);
}

struct SampleGradient {
  std::vector<BranchParams> grads;
  LossBreakdown loss;
};

SampleGradient sample_gradient(const DecomposerModel& model, std::span<const double> x,
                               std::span<const double> sigma, double weight) {
  const auto& c = model.config;
  const SweepState state = run_sweeps(model, x, sigma);
  SampleGradient out;
  out.loss = composite_loss(x, state, sigma, c.lambda_s, c.lambda_perp);
  LossGradients g = loss_gradients(x, state, sigma, c.lambda_s, c.lambda_perp);
  for (auto& v : g.recon) linalg::scale(weight, v);
  for (auto& v : g.code) linalg::scale(weight, v);
  out.grads = sweep_backward(model, x, sigma, state, g.recon, g.code);
  return out;
}

void accumulate(std::vector<BranchParams>& total, const std::vector<BranchParams>& part) {
  for (std::size_t i = 0; i < total.size(); ++i) {
    auto dst = parameter_blocks(total[i]);
    auto src = parameter_blocks(part[i]);
    for (std::size_t b = 0; b < dst.size(); ++b) linalg::axpy(1.0, src[b], dst[b]);
  }
}

// Runs fn(k) for k in [0, n) across threads and rethrows the lowest-index failure.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < count; ++k) {
    try {
      fn(static_cast<std::size_t>(k));
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<SigmaVector> batch_estimate_sigma(const DecomposerModel& model, const Batch& batch,
                                              std::span<const SigmaVector> warm_sigmas,
                                              Execution exec) {
  if (warm_sigmas.size() != batch.size())
    throw UsageError("need one warm-start sigma per batch sample");
  std::vector<SigmaVector> out(batch.size());
  if (exec == Execution::Serial) {
    for (std::size_t k = 0; k < batch.size(); ++k)
      out[k] = sample_sigma(model, batch[k], warm_sigmas[k]);
  } else {
    parallel_for(batch.size(),
                 [&](std::size_t k) { out[k] = sample_sigma(model, batch[k], warm_sigmas[k]); });
  }
  return out;
}

BatchGradient batch_loss_gradient(const DecomposerModel& model, const Batch& batch,
                                  std::span<const SigmaVector> sigmas, Execution exec) {
  if (batch.empty()) throw UsageError("empty batch");
  if (sigmas.size() != batch.size()) throw UsageError("need one sigma per batch sample");
  const double weight = 1.0 / static_cast<double>(batch.size());

  BatchGradient out;
  for (const auto& b : model.branches) out.grads.push_back(zeros_like(b));

  if (exec == Execution::Serial) {
    for (std::size_t k = 0; k < batch.size(); ++k) {
      SampleGradient g = sample_gradient(model, batch[k], sigmas[k], weight);
      accumulate(out.grads, g.grads);
      out.loss += g.loss;
    }
  } else {
    std::vector<SampleGradient> parts(batch.size());
    parallel_for(batch.size(), [&](std::size_t k) {
      parts[k] = sample_gradient(model, batch[k], sigmas[k], weight);
    });
    for (const auto& g : parts) {
      accumulate(out.grads, g.grads);
      out.loss += g.loss;
    }
  }
  out.loss *= weight;
  return out;
}

}  // namespace decompnet
