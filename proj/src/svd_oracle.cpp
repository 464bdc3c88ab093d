#include "decompnet/svd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "decompnet/branch.hpp"
#include "decompnet/errors.hpp"

namespace decompnet {
namespace {

double angle_between_units(std::span<const double> a, std::span<const double> b) {
  // Sign-insensitive, stable for tiny angles.
  const Vector diff = linalg::sub(a, b);
  const Vector sum = linalg::add(a, b);
  const double dn = linalg::norm(diff), sn = linalg::norm(sum);
  return 2.0 * std::atan2(std::min(dn, sn), std::max(dn, sn));
}

std::vector<Vector> orthonormalize(const std::vector<Vector>& basis) {
  std::vector<Vector> q;
  for (const auto& v : basis) {
    Vector w = v;
    const double original = linalg::norm(w);
    for (const auto& e : q) linalg::axpy(-linalg::dot(e, w), e, w);
    // second pass for numerical orthogonality
    for (const auto& e : q) linalg::axpy(-linalg::dot(e, w), e, w);
    const double nrm = linalg::norm(w);
    if (!(original > 0.0) || nrm < 1e-10 * std::max(1.0, original))
      throw UsageError("principal_angles: basis is linearly dependent");
    linalg::scale(1.0 / nrm, w);
    q.push_back(std::move(w));
  }
  return q;
}

}  // namespace

bool fix_sign(Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (!v.empty() && v[best] < 0.0) {
    linalg::scale(-1.0, v);
    return true;
  }
  return false;
}

SvdOracleResult svd_deflation(const Matrix& a_in, std::size_t rank, int max_iter, double tol) {
  if (rank > std::min(a_in.rows, a_in.cols))
    throw UsageError("rank exceeds min(rows, cols)");
  if (max_iter < 1) throw UsageError("max_iter must be ≥ 1");
  Matrix a = a_in;

  SvdOracleResult result;
  for (std::size_t k = 0; k < rank; ++k) {
    // Fixed pseudo-random start keeps the oracle deterministic.
    std::mt19937_64 rng(0x5EED0000ull + k);
    std::normal_distribution<double> normal;
    Vector v(a.cols);
    for (double& x : v) x = normal(rng);
    if (linalg::normalize(v) == 0.0) {
      result.rank_deficient = true;
      result.note = "matrix is zero after " + std::to_string(k) + " components";
      break;
    }

    Vector u(a.rows, 0.0);
    double angle = std::numbers::pi;
    for (int it = 0; it < max_iter; ++it) {
      Vector nu = linalg::matvec(a, v);
      if (linalg::normalize(nu) == 0.0) break;
      Vector nv = linalg::matvec_transposed(a, nu);
      if (linalg::normalize(nv) == 0.0) break;
      angle = it == 0 ? std::numbers::pi : angle_between_units(nu, u);
      u = std::move(nu);
      v = std::move(nv);
      if (angle < tol) break;
    }
    const double s = linalg::dot(u, linalg::matvec(a, v));
    if (!(s >= 1e-12)) {
      result.rank_deficient = true;
      result.note = "rank deficient: singular value " + std::to_string(k + 1) +
                    " is below 1e-12, returning " + std::to_string(k) + " triplets";
      break;
    }
    if (fix_sign(u)) linalg::scale(-1.0, v);
    linalg::add_outer(-s, u, v, a);
    result.achieved_tol = std::max(result.achieved_tol, angle);
    result.triplets.push_back({std::move(u), s, std::move(v)});
  }
  return result;
}

Vector principal_angles(const std::vector<Vector>& basis_a, const std::vector<Vector>& basis_b) {
  if (basis_a.empty() || basis_b.empty()) throw UsageError("principal_angles: empty basis");
  const std::size_t d = basis_a.front().size();
  for (const auto* basis : {&basis_a, &basis_b})
    for (const auto& v : *basis)
      if (v.size() != d) throw ShapeError("principal_angles: vectors differ in length");

  const auto qa = orthonormalize(basis_a);
  const auto qb = orthonormalize(basis_b);
  // Cross-Gram M = Qa^T Qb; its singular values are the cosines.
  Matrix m(qa.size(), qb.size());
  for (std::size_t i = 0; i < qa.size(); ++i)
    for (std::size_t j = 0; j < qb.size(); ++j) m(i, j) = linalg::dot(qa[i], qb[j]);
  const bool a_small = qa.size() <= qb.size();
  const Matrix small = a_small ? linalg::matmul(m, linalg::transpose(m))
                               : linalg::matmul(linalg::transpose(m), m);
  Vector cosines;
  for (double lambda : linalg::symmetric_eigen(small).values)
    cosines.push_back(std::clamp(std::sqrt(std::max(lambda, 0.0)), 0.0, 1.0));
  std::sort(cosines.rbegin(), cosines.rend());

  // acos loses half the digits near 0, so small angles come from the sines:
  // the part of the smaller basis left after projecting onto the larger one.
  const auto& low = a_small ? qa : qb;
  const auto& high = a_small ? qb : qa;
  std::vector<Vector> rest;
  for (const auto& v : low) {
    Vector r = v;
    for (const auto& w : high) linalg::axpy(-linalg::dot(w, v), w, r);
    rest.push_back(std::move(r));
  }
  Matrix rg(rest.size(), rest.size());
  for (std::size_t i = 0; i < rest.size(); ++i)
    for (std::size_t j = 0; j < rest.size(); ++j) rg(i, j) = linalg::dot(rest[i], rest[j]);
  Vector sines;
  for (double lambda : linalg::symmetric_eigen(rg).values)
    sines.push_back(std::clamp(std::sqrt(std::max(lambda, 0.0)), 0.0, 1.0));
  std::sort(sines.begin(), sines.end());

  Vector angles;
  for (std::size_t k = 0; k < cosines.size(); ++k) {
    const double rad = cosines[k] * cosines[k] > 0.5 ? std::asin(sines[k]) : std::acos(cosines[k]);
    angles.push_back(rad * 180.0 / std::numbers::pi);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double AlignmentReport::min_abs_cos() const {
  double m = 1.0;
  for (const auto& a : matches) m = std::min(m, a.abs_cos);
  return m;
}

double AlignmentReport::max_angle_deg() const {
  return principal_angles_deg.empty()
             ? 0.0
             : *std::max_element(principal_angles_deg.begin(), principal_angles_deg.end());
}

AlignmentReport compare_branches_to_svd(const DecomposerModel& model,
                                        const SvdOracleResult& oracle) {
  std::vector<Vector> dirs;
  for (const auto& b : model.branches) {
    if (!is_rank1(b)) throw UsageError("compare_branches_to_svd needs rank-1 branches");
    Vector u = rank1_direction(b);
    if (linalg::normalize(u) == 0.0) throw UsageError("branch direction is zero");
    fix_sign(u);
    dirs.push_back(std::move(u));
  }
  if (oracle.triplets.empty()) throw UsageError("oracle has no singular triplets");
  std::vector<Vector> refs;
  for (const auto& t : oracle.triplets) {
    if (t.u.size() != model.dim) throw ShapeError("oracle vectors differ from model d");
    Vector u = t.u;
    fix_sign(u);
    refs.push_back(std::move(u));
  }

  const std::size_t nb = dirs.size(), no = refs.size();
  Matrix cos(nb, no);
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t k = 0; k < no; ++k) cos(i, k) = std::abs(linalg::dot(dirs[i], refs[k]));

  AlignmentReport report;
  report.matches.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) report.matches[i].branch = i;
  std::vector<bool> branch_used(nb, false), oracle_used(no, false);
  for (std::size_t round = 0; round < std::min(nb, no); ++round) {
    double best = -1.0;
    std::size_t bi = 0, bk = 0;
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t k = 0; k < no; ++k)
        if (!branch_used[i] && !oracle_used[k] && cos(i, k) > best) {
          best = cos(i, k);
          bi = i;
          bk = k;
        }
    branch_used[bi] = oracle_used[bk] = true;
    report.matches[bi] = {bi, bk, best};
  }

  std::vector<Vector> top(refs.begin(), refs.begin() + static_cast<std::ptrdiff_t>(std::min(nb, no)));
  report.principal_angles_deg = principal_angles(dirs, top);
  return report;
}

}  // namespace decompnet
