#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decompnet/model.hpp"

namespace decompnet {

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint32_t maxval = 255;
  std::vector<std::uint16_t> pixels;  // row-major

  bool operator==(const GrayImage&) const = default;
};

/// Netpbm P2 (ASCII) or P5 (binary) graymap. '#' comments are allowed
/// anywhere in the header; maxval > 255 uses two-byte big-endian samples.
GrayImage parse_pgm(std::string_view bytes);
GrayImage load_pgm(const std::filesystem::path& path);
std::string encode_pgm(const GrayImage& img, bool binary = true);
void write_pgm(const std::filesystem::path& path, const GrayImage& img, bool binary = true);

/// Block average by an integer factor; trailing rows/cols that do not fill a block are dropped.
GrayImage downsample(const GrayImage& img, std::size_t factor);

Vector image_to_vector(const GrayImage& img);

/// Per-feature z-scoring with population standard deviation. Constant
/// features get scale 1 (mean still subtracted). Needs at least two samples.
Dataset standardize(const std::vector<Vector>& raw,
                    std::optional<ImageShape> image_shape = std::nullopt);

/// v * s + mu
Vector inverse_standardize(const Standardization& stats, std::span<const double> v);

/// d x n matrix with samples as columns.
Matrix data_matrix(const Dataset& ds);

struct LowRankData {
  Dataset dataset;              // raw samples, identity standardization
  std::vector<Vector> factors;  // orthonormal a_k
  Vector spectrum;              // s_k = 2^(rank - k)
};

/// x = sum_k c_k s_k a_k + noise with c_k ~ N(0,1), noise ~ N(0, noise_std^2).
LowRankData synth_lowrank(std::size_t dim, std::size_t n_samples, std::size_t rank,
                          double noise_std, std::uint64_t seed);

/// Images whose signal lives in the left and right halves: each half carries a
/// rank-2 pattern under a Gaussian envelope centred in that half, with
/// independent coefficients. Identity standardization, image_shape set.
Dataset synth_two_halves(std::size_t height, std::size_t width, std::size_t n_samples,
                         double noise_std, std::uint64_t seed);

struct MaskSpec {
  double center_row = 0.0;
  double center_col = 0.0;
  double area_fraction = 0.5;
  ImageShape shape;
};

/// Gaussian width whose 0.5-level disc has area area_fraction * h * w.
double mask_tau(const MaskSpec& spec);
/// Radius of the 0.5-level disc.
double mask_half_level_radius(const MaskSpec& spec);
double mask_value(const MaskSpec& spec, double row, double col);
/// Samples mask_value at integer pixel coordinates, row-major.
Vector gaussian_mask(const MaskSpec& spec);

/// n specs with centers drawn uniformly and redrawn while within 10% of the border.
std::vector<MaskSpec> random_mask_specs(std::size_t n, ImageShape shape, double area_fraction,
                                        std::uint64_t seed);

}  // namespace decompnet
