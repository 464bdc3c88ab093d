#include "decompnet/model.hpp"

#include <cmath>
#include <unordered_set>

#include "decompnet/branch.hpp"
#include "decompnet/errors.hpp"

namespace decompnet {

std::vector<std::string> validate_config(const ModelConfig& c) {
  std::vector<std::string> out;
  if (c.n_branches < 1) out.emplace_back("n_branches must be ≥ 1");
  if (c.sweeps < 1) out.emplace_back("sweeps must be ≥ 1");
  if (!(c.damping > 0.0 && c.damping <= 1.0)) out.emplace_back("damping must lie in (0,1]");
  if (!(c.ridge > 0.0)) out.emplace_back("ridge must be > 0");
  if (!(c.lambda_s >= 0.0)) out.emplace_back("lambda_s must be ≥ 0");
  if (!(c.lambda_perp >= 0.0)) out.emplace_back("lambda_perp must be ≥ 0");
  if (!(c.init_spread >= 0.0)) out.emplace_back("init_spread must be ≥ 0");
  if (!(c.nnls_tol > 0.0)) out.emplace_back("nnls_tol must be > 0");
  if (c.nnls_max_iter < 0) out.emplace_back("nnls_max_iter must be ≥ 0");
  switch (c.branch.kind) {
    case BranchKind::LinearAE:
      if (c.branch.code_width < 1) out.emplace_back("LinearAE code width must be ≥ 1");
      break;
    case BranchKind::MlpAE:
      if (c.branch.layer_widths.empty())
        out.emplace_back("MlpAE needs at least one layer width");
      for (std::size_t w : c.branch.layer_widths)
        if (w < 1) {
          out.emplace_back("MlpAE layer widths must be ≥ 1");
          break;
        }
      break;
    default:
      break;
  }
  return out;
}

void check_dataset(const Dataset& ds) {
  if (ds.dim == 0) throw ShapeError("dataset dimension must be positive");
  if (ds.stats.mean.size() != ds.dim || ds.stats.scale.size() != ds.dim)
    throw ShapeError("standardization statistics must have length d");
  for (double s : ds.stats.scale)
    if (!(s > 0.0)) throw UsageError("standardization scale entries must be > 0");
  if (ds.image_shape && ds.image_shape->size() != ds.dim)
    throw ShapeError("image height x width must equal d");
  std::unordered_set<std::int64_t> ids;
  for (const auto& s : ds.samples) {
    if (!ids.insert(s.id).second) throw UsageError("duplicate sample id " + std::to_string(s.id));
    if (s.x.size() != ds.dim)
      throw ShapeError("sample " + std::to_string(s.id) + " has length " +
                       std::to_string(s.x.size()) + ", expected " + std::to_string(ds.dim));
    if (!linalg::all_finite(s.x))
      throw UsageError("sample " + std::to_string(s.id) + " has non-finite entries");
  }
}

std::span<const double> DecomposerModel::mask(std::size_t i) const {
  if (!masks) return {};
  return (*masks)[i];
}

void check_model(const DecomposerModel& m) {
  auto issues = validate_config(m.config);
  if (!issues.empty()) throw ConfigError(issues.front());
  if (m.dim == 0) throw ShapeError("model dimension must be positive");
  if (m.branches.size() != static_cast<std::size_t>(m.config.n_branches))
    throw ConfigError("model has " + std::to_string(m.branches.size()) +
                      " branches, config says " + std::to_string(m.config.n_branches));
  for (const auto& b : m.branches)
    if (input_dim(b) != m.dim) throw ShapeError("branch input dimension differs from model d");
  if (m.masks) {
    if (m.masks->size() != m.branches.size())
      throw ConfigError("masks must have one entry per branch");
    for (const auto& mask : *m.masks) {
      if (mask.size() != m.dim) throw ShapeError("mask length must equal d");
      for (double v : mask)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("mask entries must lie in [0,1]");
    }
  }
}

std::string to_string(BranchKind k) {
  switch (k) {
    case BranchKind::Rank1Tied: return "rank1_tied";
    case BranchKind::Rank1Untied: return "rank1_untied";
    case BranchKind::LinearAE: return "linear_ae";
    case BranchKind::MlpAE: return "mlp_ae";
  }
  return "?";
}

std::string to_string(Schedule s) {
  return s == Schedule::GaussSeidel ? "gauss_seidel" : "jacobi";
}

std::string to_string(SigmaMode m) {
  switch (m) {
    case SigmaMode::RidgeClosedForm: return "ridge";
    case SigmaMode::Nnls: return "nnls";
    case SigmaMode::FixedOnes: return "fixed_ones";
  }
  return "?";
}

std::string to_string(ResidualGradMode m) {
  return m == ResidualGradMode::FullUnroll ? "full_unroll" : "detach_cross";
}

BranchKind parse_branch_kind(const std::string& s) {
  for (auto k : {BranchKind::Rank1Tied, BranchKind::Rank1Untied, BranchKind::LinearAE,
                 BranchKind::MlpAE})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown branch kind '" + s + "'");
}

Schedule parse_schedule(const std::string& s) {
  if (s == "gauss_seidel") return Schedule::GaussSeidel;
  if (s == "jacobi") return Schedule::Jacobi;
  throw ConfigError("unknown schedule '" + s + "'");
}

SigmaMode parse_sigma_mode(const std::string& s) {
  for (auto m : {SigmaMode::RidgeClosedForm, SigmaMode::Nnls, SigmaMode::FixedOnes})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown sigma mode '" + s + "'");
}

ResidualGradMode parse_grad_mode(const std::string& s) {
  if (s == "full_unroll") return ResidualGradMode::FullUnroll;
  if (s == "detach_cross") return ResidualGradMode::DetachCross;
  throw ConfigError("unknown residual gradient mode '" + s + "'");
}

}  // namespace decompnet
