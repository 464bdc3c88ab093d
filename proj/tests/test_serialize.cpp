#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>

#include "decompnet/branch.hpp"
#include "decompnet/data_io.hpp"
#include "decompnet/errors.hpp"
#include "decompnet/serialize.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace decompnet;
namespace fs = std::filesystem;

namespace {

DecomposerModel sample_model(BranchKind kind, bool masks) {
  ModelConfig c;
  c.n_branches = 2;
  c.branch.kind = kind;
  c.branch.code_width = 2;
  c.branch.layer_widths = {5, 3};
  c.sweeps = 3;
  c.schedule = Schedule::Jacobi;
  c.damping = 0.7;
  c.lambda_s = 0.01;
  c.lambda_perp = 0.002;
  c.sigma_mode = SigmaMode::Nnls;
  c.grad_mode = ResidualGradMode::DetachCross;
  c.seed = 42;
  c.init_spread = 0.1;
  if (!masks) return init_model(c, 12);
  std::vector<Vector> m;
  for (int i = 0; i < 2; ++i) m.push_back(gaussian_mask({1.0 + i, 1.5, 0.5, {3, 4}}));
  return init_model(c, 12, m);
}

void check_same(const DecomposerModel& a, const DecomposerModel& b) {
  CHECK(a.dim == b.dim);
  CHECK(a.config.n_branches == b.config.n_branches);
  CHECK(a.config.damping == b.config.damping);
  CHECK(a.config.seed == b.config.seed);
  CHECK(a.config.branch.layer_widths == b.config.branch.layer_widths);
  CHECK(a.config.grad_mode == b.config.grad_mode);
  for (std::size_t i = 0; i < a.n_branches(); ++i) CHECK(flatten(a.branches[i]) == flatten(b.branches[i]));
  CHECK(a.masks == b.masks);
}

}  // namespace

TEST_CASE("model round trip is canonical") {
  for (auto kind : {BranchKind::Rank1Tied, BranchKind::Rank1Untied, BranchKind::LinearAE, BranchKind::MlpAE}) {
    for (bool masks : {false, true}) {
      const auto m = sample_model(kind, masks);
      for (auto enc : {NumberEncoding::Hex, NumberEncoding::Decimal}) {
        const std::string first = model_to_string(m, enc);
        const auto loaded = model_from_string(first);
        check_same(m, loaded);
        CHECK(model_to_string(loaded, enc) == first);
      }
    }
  }

  const fs::path p = fs::temp_directory_path() / "decompnet_model_rt.json";
  const auto m = sample_model(BranchKind::MlpAE, true);
  export_model(m, p);
  const std::string once = read_text_file(p);
  export_model(load_model(p), p);
  CHECK(read_text_file(p) == once);
  fs::remove(p);
}

TEST_CASE("model load errors name the field") {
  const auto m = sample_model(BranchKind::Rank1Tied, false);
  auto j = nlohmann::json::parse(model_to_string(m));
  REQUIRE(j.contains("schema_version"));

  auto missing = j;
  missing["branches"][0].erase("u");
  try {
    model_from_string(missing.dump());
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.field_path == "$.branches[0].u");
  }

  auto no_config = j;
  no_config.erase("config");
  CHECK_THROWS_AS(model_from_string(no_config.dump()), LoadError);

  auto version = j;
  version["schema_version"] = 2;
  try {
    model_from_string(version.dump());
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.field_path == "$.schema_version");
  }

  auto short_u = j;
  short_u["branches"][1]["u"].erase(0);
  CHECK_THROWS_AS(model_from_string(short_u.dump()), LoadError);

  auto bad_hex = j;
  bad_hex["branches"][0]["u"][0] = "0x12";
  CHECK_THROWS_AS(model_from_string(bad_hex.dump()), LoadError);

  const std::string text = model_to_string(m);
  CHECK_THROWS_AS(model_from_string(text.substr(0, text.size() / 2)), ParseError);

  auto ds = j;
  ds["kind"] = "dataset";
  CHECK_THROWS_AS(model_from_string(ds.dump()), LoadError);
}

TEST_CASE("decimal encoding round-trips a million doubles") {
  std::mt19937_64 rng(1);
  std::size_t tested = 0, mismatched = 0;
  while (tested < 1000000) {
    const double v = std::bit_cast<double>(rng());
    if (!std::isfinite(v)) continue;
    ++tested;
    const double back = decode_double(encode_double(v, NumberEncoding::Decimal), NumberEncoding::Decimal);
    if (std::bit_cast<std::uint64_t>(back) != std::bit_cast<std::uint64_t>(v)) ++mismatched;
  }
  CHECK(mismatched == 0);

  for (double v : {0.0, -0.0, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::infinity(), std::nan("")}) {
    const double h = decode_double(encode_double(v, NumberEncoding::Hex), NumberEncoding::Hex);
    CHECK(std::bit_cast<std::uint64_t>(h) == std::bit_cast<std::uint64_t>(v));
  }
  CHECK(encode_double(1.0, NumberEncoding::Hex) == "0x3ff0000000000000");
  CHECK_THROWS_AS(decode_double("1.5x", NumberEncoding::Decimal), LoadError);
}

TEST_CASE("dataset round trip") {
  auto ds = synth_two_halves(4, 6, 5, 0.1, 2);
  ds.stats.mean.assign(24, 0.25);
  ds.stats.scale.assign(24, 2.0);
  ds.samples[3].id = 77;
  for (auto enc : {NumberEncoding::Hex, NumberEncoding::Decimal}) {
    const std::string text = dataset_to_string(ds, enc);
    const Dataset back = dataset_from_string(text);
    CHECK(back.dim == ds.dim);
    CHECK(back.image_shape == ds.image_shape);
    CHECK(back.stats.mean == ds.stats.mean);
    CHECK(back.stats.scale == ds.stats.scale);
    REQUIRE(back.size() == ds.size());
    for (std::size_t k = 0; k < ds.size(); ++k) {
      CHECK(back.samples[k].id == ds.samples[k].id);
      CHECK(back.samples[k].x == ds.samples[k].x);
    }
    CHECK(dataset_to_string(back, enc) == text);
  }
  CHECK_THROWS_AS(dataset_from_string(model_to_string(sample_model(BranchKind::Rank1Tied, false))), LoadError);
}
