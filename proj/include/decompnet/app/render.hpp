#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decompnet/data_io.hpp"
#include "decompnet/model.hpp"

namespace decompnet::app {

/// 8-bit rendering by per-image min/max rescale:
/// pixel = round((v - offset) * scale), offset = min, scale = 255 / (max - min).
/// A constant image renders as all zeros with scale 0.
struct Rendered {
  std::vector<std::uint8_t> pixels;
  double scale = 0.0;
  double offset = 0.0;
};

Rendered render_gray(std::span<const double> values);
GrayImage to_gray_image(const Rendered& r, ImageShape shape);

/// Components and scales of one sample.
struct Decomposition {
  Matrix components;    // d x N, standardized space
  SigmaVector sigma;
  Vector reconstruction;
  double loss_total = 0.0;
  double loss_recon = 0.0;
  double loss_sparsity = 0.0;
  double loss_orthogonality = 0.0;
};

/// Inference: starting from sigma = 1, `rounds` times run the sweeps and
/// re-estimate sigma; components are those the final sigma was solved against.
Decomposition decompose_sample(const DecomposerModel& model, std::span<const double> x,
                               int rounds = 3);

/// sum_i sigma_i x̂_i mapped back to data units and rendered.
Rendered render_synthesis(const Dataset& ds, const Matrix& components,
                          std::span<const double> sigma);

}  // namespace decompnet::app
