#include <cmath>
#include <random>

#include "decompnet/branch.hpp"
#include "decompnet/loss.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace decompnet;
using testing_helpers::random_vector;

namespace {

// A one-sweep state holding given components and codes.
SweepState state_of(const std::vector<Vector>& comps, const std::vector<Vector>& codes,
                    std::span<const double> sigma) {
  SweepState s;
  s.sweeps = 1;
  s.branches = comps.size();
  s.components = Matrix(comps[0].size(), comps.size());
  s.reconstruction.assign(comps[0].size(), 0.0);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    SweepStep step;
    step.recon = comps[i];
    step.code = codes[i];
    s.steps.push_back(step);
    s.components.set_column(i, comps[i]);
    linalg::axpy(sigma[i], comps[i], s.reconstruction);
  }
  return s;
}

double reference_loss(const Vector& x, const std::vector<Vector>& comps, const std::vector<Vector>& codes,
                      const Vector& sigma, double ls, double lp) {
  double recon = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) {
    double r = x[p];
    for (std::size_t i = 0; i < comps.size(); ++i) r -= sigma[i] * comps[i][p];
    recon += r * r;
  }
  double l1 = 0.0;
  for (const auto& z : codes)
    for (double v : z) l1 += std::abs(v);
  double orth = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (std::size_t j = 0; j < comps.size(); ++j)
      if (i != j) {
        double ip = 0.0;
        for (std::size_t p = 0; p < x.size(); ++p) ip += comps[i][p] * comps[j][p];
        orth += ip * ip;
      }
  return recon + ls * l1 + lp * orth;
}

}  // namespace

TEST_CASE("composite_loss examples") {
  const std::vector<Vector> orth = {{1, 0}, {0, 2}};
  const std::vector<Vector> zero_codes = {{0}, {0}};
  const auto l = composite_loss(Vector{1, 2}, state_of(orth, zero_codes, Vector{1, 1}), Vector{1, 1}, 0.5, 0.5);
  CHECK(l.total == 0.0);

  const std::vector<Vector> same = {{1, 0}, {1, 0}};
  const auto d = composite_loss(Vector{0, 0}, state_of(same, zero_codes, Vector{0, 0}), Vector{0, 0}, 0, 1);
  CHECK(d.orthogonality == 2.0);

  std::mt19937_64 rng(1);
  for (std::size_t n : {1, 2, 4}) {
    std::vector<Vector> comps, codes;
    for (std::size_t i = 0; i < n; ++i) {
      comps.push_back(random_vector(5, rng));
      codes.push_back(random_vector(2, rng));
    }
    const Vector x = random_vector(5, rng), sigma = random_vector(n, rng);
    const auto lb = composite_loss(x, state_of(comps, codes, sigma), sigma, 0.3, 0.2);
    CHECK(std::abs(lb.total - reference_loss(x, comps, codes, sigma, 0.3, 0.2)) <= 1e-12);
    CHECK(std::abs(lb.total - (lb.recon + lb.sparsity + lb.orthogonality)) <= 1e-12);
    CHECK(lb.recon >= 0);
    CHECK(lb.sparsity >= 0);
    CHECK(lb.orthogonality >= 0);
  }
}

TEST_CASE("loss_gradients examples") {
  const Vector x{1, -2, 3};
  const std::vector<Vector> zeros = {{0, 0, 0}, {0, 0, 0}};
  const Vector sigma{0.5, 2.0};
  const auto g = loss_gradients(x, state_of(zeros, {{0}, {0}}, sigma), sigma, 0.1, 1.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t p = 0; p < 3; ++p) CHECK(g.recon[i][p] == -2 * sigma[i] * x[p]);
  CHECK(g.code[0] == Vector{0.0});

  const std::vector<Vector> orth = {{1, 0, 0}, {0, 1, 0}};
  const auto go = loss_gradients(Vector{0, 0, 0}, state_of(orth, {{0}, {0}}, Vector{0, 0}), Vector{0, 0}, 0, 1);
  for (const auto& gi : go.recon)
    for (double v : gi) CHECK(v == 0.0);
}

TEST_CASE("loss_gradients match finite differences") {
  std::mt19937_64 rng(2);
  for (std::size_t n : {1, 2, 4}) {
    std::vector<Vector> comps, codes;
    for (std::size_t i = 0; i < n; ++i) {
      comps.push_back(random_vector(4, rng));
      codes.push_back(random_vector(3, rng));
    }
    const Vector x = random_vector(4, rng), sigma = random_vector(n, rng);
    const double ls = 0.25, lp = 0.4;
    const auto g = loss_gradients(x, state_of(comps, codes, sigma), sigma, ls, lp);
    auto f = [&](const std::vector<Vector>& c, const std::vector<Vector>& z) {
      return reference_loss(x, c, z, sigma, ls, lp);
    };
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < 4; ++p) {
        auto plus = comps, minus = comps;
        const double h = 1e-6 * (1 + std::abs(comps[i][p]));
        plus[i][p] += h;
        minus[i][p] -= h;
        const double fd = (f(plus, codes) - f(minus, codes)) / (2 * h);
        CHECK(std::abs(g.recon[i][p] - fd) / (1e-8 + std::abs(fd)) <= 1e-6);
      }
      for (std::size_t k = 0; k < 3; ++k) {
        if (std::abs(codes[i][k]) <= 1e-3) continue;
        auto plus = codes, minus = codes;
        plus[i][k] += 1e-6;
        minus[i][k] -= 1e-6;
        const double fd = (f(comps, plus) - f(comps, minus)) / 2e-6;
        CHECK(std::abs(g.code[i][k] - fd) <= 1e-6);
      }
    }
  }
}

TEST_CASE("loss symmetries") {
  std::mt19937_64 rng(3);
  std::vector<Vector> comps, codes;
  for (int i = 0; i < 3; ++i) {
    comps.push_back(random_vector(5, rng));
    codes.push_back(random_vector(2, rng));
  }
  const Vector x = random_vector(5, rng);
  const Vector sigma{0.5, 1.5, 1.0};
  const auto base = composite_loss(x, state_of(comps, codes, sigma), sigma, 0.1, 0.2);

  const std::vector<Vector> pc = {comps[2], comps[0], comps[1]}, pz = {codes[2], codes[0], codes[1]};
  const Vector ps{sigma[2], sigma[0], sigma[1]};
  const auto perm = composite_loss(x, state_of(pc, pz, ps), ps, 0.1, 0.2);
  CHECK(perm.total == doctest::Approx(base.total).epsilon(1e-14));
  CHECK(perm.orthogonality == doctest::Approx(base.orthogonality).epsilon(1e-14));

  auto half = comps;
  linalg::scale(0.5, half[1]);
  Vector doubled = sigma;
  doubled[1] *= 2;
  const auto scaled = composite_loss(x, state_of(half, codes, doubled), doubled, 0.1, 0.2);
  CHECK(scaled.recon == doctest::Approx(base.recon).epsilon(1e-13));
  CHECK(scaled.orthogonality != doctest::Approx(base.orthogonality));
}
