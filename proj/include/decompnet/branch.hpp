#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decompnet/model.hpp"

namespace decompnet {

struct BranchOutput {
  Vector code;   // length 1 for rank-1 branches
  Vector recon;  // length d
};

struct BranchGradients {
  BranchParams params;  // same shape as the branch
  Vector input;         // d loss / d r
};

/// Draws a branch. Rank-1 vectors are isotropic Gaussian normalized to unit
/// length; affine weights are Gaussian with stddev init_scale / sqrt(fan_in)
/// and zero biases. Deterministic in seed.
BranchParams init_branch(const BranchSpec& spec, std::size_t dim, std::uint64_t seed,
                         double init_scale = 1.0);

/// Builds all N branches with per-branch seeds derived from config.seed.
DecomposerModel init_model(const ModelConfig& config, std::size_t dim,
                           std::optional<std::vector<Vector>> masks = std::nullopt);

std::size_t input_dim(const BranchParams& params);
std::size_t code_dim(const BranchParams& params);

/// Evaluates the branch on r (premultiplied by mask when mask is non-empty).
BranchOutput branch_forward(const BranchParams& params, std::span<const double> r,
                            std::span<const double> mask = {});

/// Gradients of <recon_grad, recon> + <code_grad, code> with respect to the
/// parameters and to r.
BranchGradients branch_backward(const BranchParams& params, std::span<const double> r,
                                std::span<const double> mask,
                                std::span<const double> recon_grad,
                                std::span<const double> code_grad);

/// Same as branch_backward but adds into existing accumulators.
void branch_backward_accumulate(const BranchParams& params, std::span<const double> r,
                                std::span<const double> mask,
                                std::span<const double> recon_grad,
                                std::span<const double> code_grad,
                                BranchParams& param_grad, std::span<double> input_grad);

BranchParams zeros_like(const BranchParams& params);

// Views over every parameter array, in a fixed order shared by all helpers below.
std::vector<std::span<double>> parameter_blocks(BranchParams& params);
std::vector<std::span<const double>> parameter_blocks(const BranchParams& params);

std::size_t parameter_count(const BranchParams& params);
Vector flatten(const BranchParams& params);
void assign_flat(BranchParams& params, std::span<const double> flat);

// Re-projects rank-1 direction vectors to unit norm; no-op for other kinds.
void normalize_rank1(BranchParams& params);

bool is_rank1(const BranchParams& params);
// Decoder direction u of a rank-1 branch.
const Vector& rank1_direction(const BranchParams& params);

}  // namespace decompnet
