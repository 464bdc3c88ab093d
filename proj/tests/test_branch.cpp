#include <cmath>
#include <random>

#include "decompnet/branch.hpp"
#include "decompnet/errors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace decompnet;
using testing_helpers::random_vector;

namespace {

BranchParams make(BranchKind kind, std::size_t d, std::uint64_t seed) {
  BranchSpec spec;
  spec.kind = kind;
  spec.code_width = 3;
  spec.layer_widths = {6, 3};
  return init_branch(spec, d, seed);
}

// Independent evaluation of the dense autoencoder.
Vector mlp_reference(const MlpAE& net, const Vector& r) {
  Vector a = r;
  auto run = [](const std::vector<AffineLayer>& layers, Vector a, bool squash_last) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      Vector out(L.weight.rows);
      for (std::size_t i = 0; i < L.weight.rows; ++i) {
        double s = L.bias[i];
        for (std::size_t j = 0; j < L.weight.cols; ++j) s += L.weight(i, j) * a[j];
        out[i] = (l + 1 < layers.size() || squash_last) ? std::tanh(s) : s;
      }
      a = out;
    }
    return a;
  };
  // tanh between all layers; the code and the decoder output are linear.
  Vector code = run(net.encoder, a, false);
  return run(net.decoder, code, false);
}

}  // namespace

TEST_CASE("init_branch") {
  const auto b = make(BranchKind::Rank1Tied, 4, 7);
  CHECK(std::abs(linalg::norm(std::get<Rank1Tied>(b).u) - 1.0) <= 1e-12);
  CHECK(flatten(b) == flatten(make(BranchKind::Rank1Tied, 4, 7)));
  CHECK(flatten(b) != flatten(make(BranchKind::Rank1Tied, 4, 8)));

  const auto ut = std::get<Rank1Untied>(make(BranchKind::Rank1Untied, 5, 3));
  CHECK(std::abs(linalg::norm(ut.u) - 1.0) <= 1e-12);
  CHECK(std::abs(linalg::norm(ut.v) - 1.0) <= 1e-12);

  SUBCASE("mlp layer-0 weight spread") {
    BranchSpec spec{BranchKind::MlpAE, 1, {8, 4}};
    const auto net = std::get<MlpAE>(init_branch(spec, 8, 1));
    const auto& w = net.encoder[0].weight;
    double sq = 0.0;
    for (double v : w.data) sq += v * v;
    const double sd = std::sqrt(sq / static_cast<double>(w.data.size()));
    CHECK(std::abs(sd - 1.0 / std::sqrt(8.0)) <= 0.2 / std::sqrt(8.0));
    // Frozen value from this generator.
    CHECK(sd == doctest::Approx(0.3648204152).epsilon(1e-6));
    for (double v : net.encoder[0].bias) CHECK(v == 0.0);
    CHECK(net.decoder.size() == 2);
    CHECK(net.decoder.back().weight.rows == 8);
  }
  SUBCASE("mismatched widths") {
    BranchSpec spec{BranchKind::MlpAE, 1, {8, 0}};
    CHECK_THROWS_AS(init_branch(spec, 8, 1), ConfigError);
  }
}

TEST_CASE("branch_forward examples") {
  const BranchParams tied = Rank1Tied{{1, 0}};
  auto o = branch_forward(tied, Vector{3, 4});
  CHECK(o.code == Vector{3});
  CHECK(o.recon == Vector{3, 0});

  const BranchParams untied = Rank1Untied{{0, 1}, {1, 0}};
  o = branch_forward(untied, Vector{5, 2});
  CHECK(o.code == Vector{5});
  CHECK(o.recon == Vector{0, 5});

  o = branch_forward(tied, Vector{3, 4}, Vector{0, 1});
  CHECK(o.code == Vector{0});
  CHECK(o.recon == Vector{0, 0});

  CHECK_THROWS_AS(branch_forward(tied, Vector{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(branch_forward(tied, Vector{1, 2}, Vector{1}), ShapeError);

  LinearAE lin{Matrix(1, 2), Matrix(2, 1)};
  lin.encoder(0, 0) = 2;
  lin.encoder(0, 1) = -1;
  lin.decoder(0, 0) = 1;
  lin.decoder(1, 0) = 3;
  o = branch_forward(lin, Vector{1, 1});
  CHECK(o.code == Vector{1});
  CHECK(o.recon == Vector{1, 3});
}

TEST_CASE("mlp forward matches a direct evaluation") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const auto b = make(BranchKind::MlpAE, 7, 40 + k);
    const Vector r = random_vector(7, rng);
    const auto o = branch_forward(b, r);
    const Vector ref = mlp_reference(std::get<MlpAE>(b), r);
    for (std::size_t p = 0; p < 7; ++p) CHECK(std::abs(o.recon[p] - ref[p]) <= 1e-12);
    CHECK(o.code.size() == 3);
  }
}

TEST_CASE("branch properties") {
  std::mt19937_64 rng(2);
  for (auto kind : {BranchKind::Rank1Tied, BranchKind::Rank1Untied, BranchKind::LinearAE, BranchKind::MlpAE}) {
    CAPTURE(to_string(kind));
    const auto b = make(kind, 6, 9);
    const Vector r = random_vector(6, rng);
    const Vector m = {0.1, 0.5, 1.0, 0.0, 0.7, 0.3};

    const auto masked = branch_forward(b, r, m);
    const auto pre = branch_forward(b, linalg::hadamard(m, r));
    CHECK(masked.recon == pre.recon);
    CHECK(masked.code == pre.code);

    const auto zero = branch_backward(b, r, m, Vector(6, 0.0), Vector(code_dim(b), 0.0));
    for (double g : flatten(zero.params)) CHECK(g == 0.0);
    for (double g : zero.input) CHECK(g == 0.0);
  }

  const auto b = make(BranchKind::Rank1Tied, 6, 4);
  const Vector xh = branch_forward(b, random_vector(6, rng)).recon;
  const Vector again = branch_forward(b, xh).recon;
  for (std::size_t p = 0; p < 6; ++p) CHECK(std::abs(again[p] - xh[p]) <= 1e-12);
}

TEST_CASE("branch_backward matches central differences") {
  std::mt19937_64 rng(3);
  auto check_kind = [&](BranchKind kind, bool masked) {
    CAPTURE(to_string(kind));
    CAPTURE(masked);
    const std::size_t d = 6;
    for (int inst = 0; inst < 5; ++inst) {
      const auto b = make(kind, d, 70 + inst);
      const Vector r = random_vector(d, rng);
      const Vector m = masked ? Vector{0.2, 0.9, 1.0, 0.4, 0.6, 0.8} : Vector{};
      const Vector gx = random_vector(d, rng);
      const Vector gz = random_vector(code_dim(b), rng);
      auto f = [&](const BranchParams& p, const Vector& in) {
        const auto o = branch_forward(p, in, m);
        return linalg::dot(gx, o.recon) + linalg::dot(gz, o.code);
      };
      const auto an = branch_backward(b, r, m, gx, gz);
      const Vector flat = flatten(b), g = flatten(an.params);
      double worst = 0.0;
      for (std::size_t p = 0; p < flat.size(); ++p) {
        const double h = 1e-6 * (1.0 + std::abs(flat[p]));
        Vector plus = flat, minus = flat;
        plus[p] += h;
        minus[p] -= h;
        BranchParams bp = b, bm = b;
        assign_flat(bp, plus);
        assign_flat(bm, minus);
        const double fd = (f(bp, r) - f(bm, r)) / (2 * h);
        worst = std::max(worst, std::abs(g[p] - fd) / (1e-8 + std::abs(fd)));
      }
      for (std::size_t p = 0; p < d; ++p) {
        const double h = 1e-6 * (1.0 + std::abs(r[p]));
        Vector plus = r, minus = r;
        plus[p] += h;
        minus[p] -= h;
        const double fd = (f(b, plus) - f(b, minus)) / (2 * h);
        worst = std::max(worst, std::abs(an.input[p] - fd) / (1e-8 + std::abs(fd)));
      }
      CHECK(worst <= 1e-5);
    }
  };
  for (auto kind : {BranchKind::Rank1Tied, BranchKind::Rank1Untied, BranchKind::LinearAE, BranchKind::MlpAE})
    for (bool masked : {false, true}) check_kind(kind, masked);
}

TEST_CASE("parameter plumbing") {
  auto b = make(BranchKind::MlpAE, 5, 11);
  const Vector flat = flatten(b);
  CHECK(flat.size() == parameter_count(b));
  Vector doubled = flat;
  for (double& v : doubled) v *= 2;
  assign_flat(b, doubled);
  CHECK(flatten(b) == doubled);
  CHECK_THROWS(assign_flat(b, Vector(3)));
  for (double v : flatten(zeros_like(b))) CHECK(v == 0.0);

  BranchParams r1 = Rank1Untied{{3, 4}, {0, 2}};
  CHECK(is_rank1(r1));
  normalize_rank1(r1);
  CHECK(testing_helpers::close(std::get<Rank1Untied>(r1).u, Vector{0.6, 0.8}));
  CHECK(std::get<Rank1Untied>(r1).v == Vector{0, 1});
  CHECK(testing_helpers::close(rank1_direction(r1), Vector{0.6, 0.8}));
  CHECK_FALSE(is_rank1(b));
}

TEST_CASE("init_model") {
  ModelConfig c;
  c.n_branches = 3;
  c.seed = 5;
  const auto a = init_model(c, 4), b = init_model(c, 4);
  for (std::size_t i = 0; i < 3; ++i) CHECK(flatten(a.branches[i]) == flatten(b.branches[i]));
  CHECK(flatten(a.branches[0]) != flatten(a.branches[1]));

  c.branch.kind = BranchKind::LinearAE;
  c.branch.code_width = 2;
  c.init_spread = 0.5;
  const auto spread = init_model(c, 40);
  const double n0 = linalg::norm(flatten(spread.branches[0]));
  const double n2 = linalg::norm(flatten(spread.branches[2]));
  CHECK(n2 > 1.5 * n0);
}
