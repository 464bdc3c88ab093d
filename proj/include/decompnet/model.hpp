#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "decompnet/linalg.hpp"

namespace decompnet {

// Per-sample nonnegative scales, one per branch.
using SigmaVector = Vector;

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t size() const { return height * width; }
  bool operator==(const ImageShape&) const = default;
};

struct Sample {
  std::int64_t id = 0;
  Vector x;
};

struct Standardization {
  Vector mean;
  Vector scale;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t dim = 0;
  Standardization stats;
  std::optional<ImageShape> image_shape;

  std::size_t size() const { return samples.size(); }
};

// Throws UsageError/ShapeError on the first broken Dataset invariant.
void check_dataset(const Dataset& ds);

enum class BranchKind { Rank1Tied, Rank1Untied, LinearAE, MlpAE };
enum class Schedule { GaussSeidel, Jacobi };
enum class SigmaMode { RidgeClosedForm, Nnls, FixedOnes };
enum class ResidualGradMode { FullUnroll, DetachCross };

struct BranchSpec {
  BranchKind kind = BranchKind::Rank1Tied;
  // LinearAE code width.
  std::size_t code_width = 1;
  // MlpAE encoder output widths; the last one is the code width. The decoder mirrors them.
  std::vector<std::size_t> layer_widths;
};

struct ModelConfig {
  int n_branches = 1;
  BranchSpec branch;
  int sweeps = 1;
  Schedule schedule = Schedule::GaussSeidel;
  double damping = 1.0;
  double lambda_s = 0.0;
  double lambda_perp = 0.0;
  double ridge = 1e-8;
  SigmaMode sigma_mode = SigmaMode::RidgeClosedForm;
  bool clamp_sigma = true;
  bool normalize_components = false;
  ResidualGradMode grad_mode = ResidualGradMode::FullUnroll;
  std::uint64_t seed = 0;
  // Branch i's non-rank-1 weights are drawn with stddev scaled by (1 + init_spread * i).
  double init_spread = 0.0;
  double nnls_tol = 1e-10;
  // 0 selects 10 * N * d.
  int nnls_max_iter = 0;
};

// Every violated ModelConfig invariant, as a readable message. Empty means valid.
std::vector<std::string> validate_config(const ModelConfig& config);

std::string to_string(BranchKind kind);
std::string to_string(Schedule schedule);
std::string to_string(SigmaMode mode);
std::string to_string(ResidualGradMode mode);
BranchKind parse_branch_kind(const std::string& s);
Schedule parse_schedule(const std::string& s);
SigmaMode parse_sigma_mode(const std::string& s);
ResidualGradMode parse_grad_mode(const std::string& s);

struct Rank1Tied {
  Vector u;
};

struct Rank1Untied {
  Vector u;  // decoder direction
  Vector v;  // encoder direction
};

struct LinearAE {
  Matrix encoder;  // k x d
  Matrix decoder;  // d x k
};

struct AffineLayer {
  Matrix weight;  // out x in
  Vector bias;
};

struct MlpAE {
  std::vector<AffineLayer> encoder;
  std::vector<AffineLayer> decoder;
};

using BranchParams = std::variant<Rank1Tied, Rank1Untied, LinearAE, MlpAE>;

struct DecomposerModel {
  ModelConfig config;
  std::size_t dim = 0;
  std::vector<BranchParams> branches;
  std::optional<std::vector<Vector>> masks;

  std::size_t n_branches() const { return branches.size(); }
  // Empty span when the model has no masks.
  std::span<const double> mask(std::size_t i) const;
};

// Throws ConfigError/ShapeError when branches or masks disagree with the config.
void check_model(const DecomposerModel& model);

}  // namespace decompnet
