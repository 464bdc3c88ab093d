#include "decompnet/app/render.hpp"

#include <algorithm>
#include <cmath>

#include "decompnet/errors.hpp"
#include "decompnet/loss.hpp"
#include "decompnet/sigma.hpp"
#include "decompnet/sweep.hpp"

namespace decompnet::app {

Rendered render_gray(std::span<const double> values) {
  if (values.empty()) throw ShapeError("cannot render an empty vector");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  Rendered r;
  r.offset = *lo;
  r.scale = *hi > *lo ? 255.0 / (*hi - *lo) : 0.0;
  r.pixels.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double p = std::round((values[k] - r.offset) * r.scale);
    r.pixels[k] = static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
  }
  return r;
}

GrayImage to_gray_image(const Rendered& r, ImageShape shape) {
  if (shape.size() != r.pixels.size()) throw ShapeError("image shape does not match pixel count");
  GrayImage img;
  img.height = shape.height;
  img.width = shape.width;
  img.maxval = 255;
  img.pixels.assign(r.pixels.begin(), r.pixels.end());
  return img;
}

Decomposition decompose_sample(const DecomposerModel& model, std::span<const double> x,
                               int rounds) {
  if (rounds < 1) throw UsageError("rounds must be ≥ 1");
  SigmaVector sigma(model.n_branches(), 1.0);
  SweepState state;
  SigmaVector sweep_sigma;
  for (int k = 0; k < rounds; ++k) {
    sweep_sigma = sigma;
    state = run_sweeps(model, x, sweep_sigma);
    sigma = estimate_sigma(model.config, state.components, x);
  }
  Decomposition out;
  out.components = state.components;
  out.sigma = sigma;
  out.reconstruction = linalg::matvec(state.components, sigma);
  const auto& c = model.config;
  // The code terms come from the sweep that produced these components.
  SweepState scored = state;
  scored.reconstruction = out.reconstruction;
  const LossBreakdown loss = composite_loss(x, scored, sigma, c.lambda_s, c.lambda_perp);
  out.loss_total = loss.total;
  out.loss_recon = loss.recon;
  out.loss_sparsity = loss.sparsity;
  out.loss_orthogonality = loss.orthogonality;
  return out;
}

Rendered render_synthesis(const Dataset& ds, const Matrix& components,
                          std::span<const double> sigma) {
  if (sigma.size() != components.cols) throw ShapeError("sigma length differs from component count");
  const Vector standardized = linalg::matvec(components, sigma);
  return render_gray(inverse_standardize(ds.stats, standardized));
}

}  // namespace decompnet::app
