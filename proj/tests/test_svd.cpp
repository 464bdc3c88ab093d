#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "decompnet/branch.hpp"
#include "decompnet/data_io.hpp"
#include "decompnet/errors.hpp"
#include "decompnet/svd_oracle.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace decompnet;
using testing_helpers::random_matrix;
using testing_helpers::random_vector;

namespace {

Matrix residual_after(const Matrix& a, const SvdOracleResult& r) {
  Matrix rem = a;
  for (const auto& t : r.triplets) linalg::add_outer(-t.s, t.u, t.v, rem);
  return rem;
}

void check_triplet_invariants(const SvdOracleResult& r) {
  for (std::size_t k = 0; k < r.triplets.size(); ++k) {
    CHECK(std::abs(linalg::norm(r.triplets[k].u) - 1) <= 1e-10);
    CHECK(std::abs(linalg::norm(r.triplets[k].v) - 1) <= 1e-10);
    if (k > 0) CHECK(r.triplets[k].s <= r.triplets[k - 1].s);
    CHECK(r.triplets[k].s >= 0);
    for (std::size_t j = 0; j < k; ++j)
      CHECK(std::abs(linalg::dot(r.triplets[j].u, r.triplets[k].u)) <= 1e-6);
  }
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace

TEST_CASE("deflation examples") {
  Matrix d(3, 3);
  d(0, 0) = 3;
  d(1, 1) = 2;
  d(2, 2) = 1;
  const auto r = svd_deflation(d, 3);
  REQUIRE(r.triplets.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(r.triplets[k].s - (3.0 - k)) <= 1e-10);
    CHECK(std::abs(r.triplets[k].u[k] - 1.0) <= 1e-10);
  }
  check_triplet_invariants(r);

  std::mt19937_64 rng(1);
  const Vector a = random_vector(6, rng), b = random_vector(4, rng);
  Matrix ab(6, 4);
  linalg::add_outer(1.0, a, b, ab);
  const auto r1 = svd_deflation(ab, 1);
  CHECK(std::abs(r1.triplets[0].s - linalg::norm(a) * linalg::norm(b)) <= 1e-10);
  CHECK(linalg::frobenius_norm(residual_after(ab, r1)) <= 1e-10);
}

TEST_CASE("deflation on a random 10x20 matrix") {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(10, 20, rng);
  const auto full = svd_deflation(a, 10);
  check_triplet_invariants(full);
  for (std::size_t r = 1; r <= 10; ++r) {
    SvdOracleResult part = full;
    part.triplets.resize(r);
    const Matrix rem = residual_after(a, part);
    double tail = 0.0;
    for (std::size_t k = r; k < 10; ++k) tail += full.triplets[k].s * full.triplets[k].s;
    CHECK(std::abs(linalg::frobenius_norm(rem) - std::sqrt(tail)) <= 1e-6);
    // Pythagoras.
    double head = 0.0;
    for (std::size_t k = 0; k < r; ++k) head += full.triplets[k].s * full.triplets[k].s;
    const double fa = linalg::frobenius_norm(a);
    const double fr = linalg::frobenius_norm(rem);
    CHECK(std::abs(fr * fr + head - fa * fa) <= 1e-6 * fa * fa);
    if (r == 1) {
      const Vector rv = linalg::matvec(rem, full.triplets[0].v);
      CHECK(std::abs(linalg::dot(full.triplets[0].u, rv)) <= 1e-8);
    }
  }
}

TEST_CASE("deflation singular values match a direct eigen solver") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const std::size_t r = 1 + static_cast<std::size_t>(t % 4), c = 1 + static_cast<std::size_t>((t / 4) % 4);
    const Matrix a = random_matrix(r, c, rng);
    Eigen::MatrixXd e(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.transpose() * e);
    std::vector<double> sv;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) sv.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(k))));
    std::sort(sv.rbegin(), sv.rend());
    const std::size_t rank = std::min(r, c);
    const auto d = svd_deflation(a, rank);
    for (std::size_t k = 0; k < rank; ++k) CHECK(std::abs(d.triplets[k].s - sv[k]) <= 1e-8);
  }
}

TEST_CASE("fix_sign") {
  Vector v{0.1, -0.9, 0.2};
  CHECK(fix_sign(v));
  CHECK(v == Vector{-0.1, 0.9, -0.2});
  CHECK_FALSE(fix_sign(v));
}

TEST_CASE("principal angles examples") {
  const std::vector<Vector> e1{{1, 0, 0}}, e2{{0, 1, 0}};
  CHECK(std::abs(principal_angles(e1, e2)[0] - 90.0) <= 1e-10);
  const std::vector<Vector> plane{{1, 1, 0}, {0, 1, 0}};
  for (double a : principal_angles(plane, plane)) CHECK(std::abs(a) <= 1e-10);
  CHECK_THROWS_AS(principal_angles({{1, 0, 0}, {2, 0, 0}}, e1), UsageError);
  CHECK_THROWS_AS(principal_angles({{1, 0}}, e1), ShapeError);
}

TEST_CASE("principal angles against a grid search") {
  // The largest principal angle between 2-D subspaces is max over unit x in A
  // of the angle between x and its projection on B.
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    std::vector<Vector> a{random_vector(5, rng), random_vector(5, rng)};
    std::vector<Vector> b{random_vector(5, rng), random_vector(5, rng)};
    const Vector angles = principal_angles(a, b);

    // Orthonormal copies for the oracle.
    auto ortho = [](std::vector<Vector> q) {
      linalg::normalize(q[0]);
      linalg::axpy(-linalg::dot(q[0], q[1]), q[0], q[1]);
      linalg::normalize(q[1]);
      return q;
    };
    const auto qa = ortho(a), qb = ortho(b);
    double best_min = 1e9, best_max = -1e9;
    const int steps = 20000;
    for (int s = 0; s < steps; ++s) {
      const double th = std::numbers::pi * s / steps;
      Vector x(5, 0.0);
      linalg::axpy(std::cos(th), qa[0], x);
      linalg::axpy(std::sin(th), qa[1], x);
      const double c0 = linalg::dot(x, qb[0]), c1 = linalg::dot(x, qb[1]);
      const double ang = deg(std::acos(std::min(1.0, std::sqrt(c0 * c0 + c1 * c1))));
      best_min = std::min(best_min, ang);
      best_max = std::max(best_max, ang);
    }
    CHECK(std::abs(angles.front() - best_min) <= 0.5);
    CHECK(std::abs(angles.back() - best_max) <= 0.5);
  }
}

TEST_CASE("branch comparison") {
  const auto data = synth_lowrank(12, 80, 3, 0.01, 5);
  const auto oracle = svd_deflation(data_matrix(data.dataset), 3);
  ModelConfig c;
  c.n_branches = 3;
  auto model = init_model(c, 12);
  for (std::size_t k = 0; k < 3; ++k) model.branches[k] = Rank1Tied{oracle.triplets[2 - k].u};
  const auto rep = compare_branches_to_svd(model, oracle);
  CHECK(rep.min_abs_cos() >= 1.0 - 1e-12);
  CHECK(rep.max_angle_deg() <= 1e-5);
  for (std::size_t k = 0; k < 3; ++k) CHECK(rep.matches[k].oracle_index == 2 - k);

  // Untrained baseline in d = 100.
  const auto big = synth_lowrank(100, 300, 3, 0.01, 6);
  const auto big_oracle = svd_deflation(data_matrix(big.dataset), 3);
  c.seed = 17;
  const auto rep0 = compare_branches_to_svd(init_model(c, 100), big_oracle);
  for (const auto& m : rep0.matches) CHECK(m.abs_cos < 0.5);
  CHECK(rep0.max_angle_deg() > 45.0);

  c.branch.kind = BranchKind::LinearAE;
  CHECK_THROWS(compare_branches_to_svd(init_model(c, 12), oracle));
}

TEST_CASE("synthetic low-rank generator and the oracle") {
  const auto d = synth_lowrank(50, 500, 3, 0.01, 1);
  const auto r = svd_deflation(data_matrix(d.dataset), 4);
  CHECK(r.triplets[2].s / r.triplets[3].s >= 5.0);
  CHECK(d.spectrum == Vector{4, 2, 1});

  const auto clean = synth_lowrank(20, 200, 3, 0.0, 2);
  const auto rc = svd_deflation(data_matrix(clean.dataset), 3);
  for (std::size_t k = 0; k < 3; ++k) {
    double best = 0.0;
    for (const auto& t : rc.triplets) best = std::max(best, std::abs(linalg::dot(t.u, clean.factors[k])));
    CHECK(best >= 0.999);
  }

  const auto one = synth_lowrank(7, 20, 1, 0.0, 3);
  for (const auto& s : one.dataset.samples) {
    const double c = linalg::dot(s.x, one.factors[0]) / linalg::norm(s.x);
    CHECK(std::abs(std::abs(c) - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(synth_lowrank(3, 10, 4, 0.0, 1), UsageError);

  const auto again = synth_lowrank(50, 500, 3, 0.01, 1);
  for (std::size_t k = 0; k < 500; ++k) CHECK(again.dataset.samples[k].x == d.dataset.samples[k].x);
}
