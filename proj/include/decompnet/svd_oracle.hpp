#pragma once

#include <string>
#include <vector>

#include "decompnet/model.hpp"

namespace decompnet {

struct SingularTriplet {
  Vector u;  // length d (rows)
  double s = 0.0;
  Vector v;  // length n (cols)
};

struct SvdOracleResult {
  std::vector<SingularTriplet> triplets;  // s descending
  double achieved_tol = 0.0;              // worst final successive-u angle, radians
  bool rank_deficient = false;
  std::string note;
};

/// Rank-r SVD by alternating power iteration and deflation A <- A - s u v^T.
/// The largest-magnitude entry of each u is made positive.
SvdOracleResult svd_deflation(const Matrix& a, std::size_t rank, int max_iter = 20000,
                              double tol = 1e-12);

/// Flips v so its largest-magnitude entry is positive. Returns true if flipped.
bool fix_sign(Vector& v);

/// Principal angles in degrees, ascending. Bases are orthonormalized with
/// modified Gram-Schmidt; throws UsageError on a dependent basis.
Vector principal_angles(const std::vector<Vector>& basis_a, const std::vector<Vector>& basis_b);

struct BranchAlignment {
  std::size_t branch = 0;
  std::size_t oracle_index = 0;
  double abs_cos = 0.0;
};

struct AlignmentReport {
  std::vector<BranchAlignment> matches;  // branch order
  Vector principal_angles_deg;
  double min_abs_cos() const;
  double max_angle_deg() const;
};

/// Greedy max-|cos| matching of rank-1 branch directions to oracle u vectors,
/// plus principal angles between span{branch u} and span{top-N oracle u}.
AlignmentReport compare_branches_to_svd(const DecomposerModel& model, const SvdOracleResult& oracle);

}  // namespace decompnet
