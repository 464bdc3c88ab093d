#include "decompnet/branch.hpp"

#include <cmath>
#include <random>

#include "decompnet/errors.hpp"

namespace decompnet {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Vector gaussian_vector(std::mt19937_64& rng, std::size_t n, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Vector v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

Vector unit_gaussian(std::mt19937_64& rng, std::size_t n) {
  Vector v = gaussian_vector(rng, n, 1.0);
  while (linalg::normalize(v) == 0.0) v = gaussian_vector(rng, n, 1.0);
  return v;
}

Matrix gaussian_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale) {
  Matrix m(rows, cols);
  m.data = gaussian_vector(rng, rows * cols, scale / std::sqrt(static_cast<double>(cols)));
  return m;
}

AffineLayer make_layer(std::mt19937_64& rng, std::size_t in, std::size_t out, double scale) {
  return {gaussian_matrix(rng, out, in, scale), Vector(out, 0.0)};
}

void require_dim(std::span<const double> v, std::size_t d, const char* what) {
  if (v.size() != d)
    throw ShapeError(std::string(what) + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(d));
}

Vector masked_input(std::span<const double> r, std::span<const double> mask) {
  if (mask.empty()) return Vector(r.begin(), r.end());
  require_dim(mask, r.size(), "mask");
  return linalg::hadamard(r, mask);
}

// Affine chain with tanh between layers and a linear last layer. `inputs`
// receives the input of every layer (post-activation of the previous one).
Vector chain_forward(const std::vector<AffineLayer>& layers, std::span<const double> x,
                     std::vector<Vector>* inputs) {
  Vector a(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (inputs) inputs->push_back(a);
    Vector pre = linalg::matvec(layers[l].weight, a);
    linalg::axpy(1.0, layers[l].bias, pre);
    if (l + 1 < layers.size())
      for (double& v : pre) v = std::tanh(v);
    a = std::move(pre);
  }
  return a;
}

Vector chain_backward(const std::vector<AffineLayer>& layers, const std::vector<Vector>& inputs,
                      Vector g, std::vector<AffineLayer>& grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    linalg::add_outer(1.0, g, inputs[l], grads[l].weight);
    linalg::axpy(1.0, g, grads[l].bias);
    Vector g_in = linalg::matvec_transposed(layers[l].weight, g);
    if (l > 0)
      for (std::size_t k = 0; k < g_in.size(); ++k)
        g_in[k] *= 1.0 - inputs[l][k] * inputs[l][k];
    g = std::move(g_in);
  }
  return g;
}

}  // namespace

BranchParams init_branch(const BranchSpec& spec, std::size_t dim, std::uint64_t seed,
                         double init_scale) {
  if (dim < 1) throw ConfigError("branch dimension must be ≥ 1");
  std::mt19937_64 rng(seed);
  switch (spec.kind) {
    case BranchKind::Rank1Tied:
      return Rank1Tied{unit_gaussian(rng, dim)};
    case BranchKind::Rank1Untied: {
      Vector u = unit_gaussian(rng, dim);
      Vector v = unit_gaussian(rng, dim);
      return Rank1Untied{std::move(u), std::move(v)};
    }
    case BranchKind::LinearAE: {
      if (spec.code_width < 1) throw ConfigError("LinearAE code width must be ≥ 1");
      Matrix enc = gaussian_matrix(rng, spec.code_width, dim, init_scale);
      Matrix dec = gaussian_matrix(rng, dim, spec.code_width, init_scale);
      return LinearAE{std::move(enc), std::move(dec)};
    }
    case BranchKind::MlpAE: {
      if (spec.layer_widths.empty()) throw ConfigError("MlpAE needs at least one layer width");
      MlpAE mlp;
      std::size_t in = dim;
      for (std::size_t w : spec.layer_widths) {
        if (w < 1) throw ConfigError("MlpAE layer widths must be ≥ 1");
        mlp.encoder.push_back(make_layer(rng, in, w, init_scale));
        in = w;
      }
      for (std::size_t l = spec.layer_widths.size(); l-- > 0;) {
        const std::size_t out = l == 0 ? dim : spec.layer_widths[l - 1];
        mlp.decoder.push_back(make_layer(rng, in, out, init_scale));
        in = out;
      }
      return mlp;
    }
  }
  throw ConfigError("unknown branch kind");
}

DecomposerModel init_model(const ModelConfig& config, std::size_t dim,
                           std::optional<std::vector<Vector>> masks) {
  auto issues = validate_config(config);
  if (!issues.empty()) throw ConfigError(issues.front());
  DecomposerModel model;
  model.config = config;
  model.dim = dim;
  model.masks = std::move(masks);
  for (int i = 0; i < config.n_branches; ++i) {
    const std::uint64_t seed = splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(i)));
    model.branches.push_back(
        init_branch(config.branch, dim, seed, 1.0 + config.init_spread * i));
  }
  check_model(model);
  return model;
}

std::size_t input_dim(const BranchParams& params) {
  return std::visit(overloaded{
                        [](const Rank1Tied& b) { return b.u.size(); },
                        [](const Rank1Untied& b) { return b.v.size(); },
                        [](const LinearAE& b) { return b.encoder.cols; },
                        [](const MlpAE& b) { return b.encoder.front().weight.cols; },
                    },
                    params);
}

std::size_t code_dim(const BranchParams& params) {
  return std::visit(overloaded{
                        [](const Rank1Tied&) -> std::size_t { return 1; },
                        [](const Rank1Untied&) -> std::size_t { return 1; },
                        [](const LinearAE& b) { return b.encoder.rows; },
                        [](const MlpAE& b) { return b.encoder.back().weight.rows; },
                    },
                    params);
}

BranchOutput branch_forward(const BranchParams& params, std::span<const double> r,
                            std::span<const double> mask) {
  require_dim(r, input_dim(params), "residual");
  const Vector in = masked_input(r, mask);
  return std::visit(
      overloaded{
          [&](const Rank1Tied& b) {
            const double z = linalg::dot(b.u, in);
            Vector recon = b.u;
            linalg::scale(z, recon);
            return BranchOutput{{z}, std::move(recon)};
          },
          [&](const Rank1Untied& b) {
            const double z = linalg::dot(b.v, in);
            Vector recon = b.u;
            linalg::scale(z, recon);
            return BranchOutput{{z}, std::move(recon)};
          },
          [&](const LinearAE& b) {
            Vector z = linalg::matvec(b.encoder, in);
            Vector recon = linalg::matvec(b.decoder, z);
            return BranchOutput{std::move(z), std::move(recon)};
          },
          [&](const MlpAE& b) {
            Vector z = chain_forward(b.encoder, in, nullptr);
            Vector recon = chain_forward(b.decoder, z, nullptr);
            return BranchOutput{std::move(z), std::move(recon)};
          },
      },
      params);
}

void branch_backward_accumulate(const BranchParams& params, std::span<const double> r,
                                std::span<const double> mask,
                                std::span<const double> recon_grad,
                                std::span<const double> code_grad, BranchParams& param_grad,
                                std::span<double> input_grad) {
  const std::size_t d = input_dim(params);
  require_dim(r, d, "residual");
  require_dim(recon_grad, d, "reconstruction gradient");
  require_dim(code_grad, code_dim(params), "code gradient");
  require_dim(input_grad, d, "input gradient");
  if (param_grad.index() != params.index()) throw ShapeError("gradient kind differs from branch");
  const Vector in = masked_input(r, mask);

  // Gradient with respect to the masked input r'.
  Vector g_in = std::visit(
      overloaded{
          [&](const Rank1Tied& b) {
            auto& g = std::get<Rank1Tied>(param_grad);
            const double z = linalg::dot(b.u, in);
            const double gz = code_grad[0] + linalg::dot(recon_grad, b.u);
            // u appears in both the encoder and the decoder.
            linalg::axpy(z, recon_grad, g.u);
            linalg::axpy(gz, in, g.u);
            Vector out = b.u;
            linalg::scale(gz, out);
            return out;
          },
          [&](const Rank1Untied& b) {
            auto& g = std::get<Rank1Untied>(param_grad);
            const double z = linalg::dot(b.v, in);
            const double gz = code_grad[0] + linalg::dot(recon_grad, b.u);
            linalg::axpy(z, recon_grad, g.u);
            linalg::axpy(gz, in, g.v);
            Vector out = b.v;
            linalg::scale(gz, out);
            return out;
          },
          [&](const LinearAE& b) {
            auto& g = std::get<LinearAE>(param_grad);
            const Vector z = linalg::matvec(b.encoder, in);
            linalg::add_outer(1.0, recon_grad, z, g.decoder);
            Vector gz = linalg::matvec_transposed(b.decoder, recon_grad);
            linalg::axpy(1.0, code_grad, gz);
            linalg::add_outer(1.0, gz, in, g.encoder);
            return linalg::matvec_transposed(b.encoder, gz);
          },
          [&](const MlpAE& b) {
            auto& g = std::get<MlpAE>(param_grad);
            std::vector<Vector> enc_inputs, dec_inputs;
            const Vector z = chain_forward(b.encoder, in, &enc_inputs);
            chain_forward(b.decoder, z, &dec_inputs);
            Vector gz = chain_backward(b.decoder, dec_inputs,
                                       Vector(recon_grad.begin(), recon_grad.end()), g.decoder);
            linalg::axpy(1.0, code_grad, gz);
            return chain_backward(b.encoder, enc_inputs, std::move(gz), g.encoder);
          },
      },
      params);

  if (!mask.empty())
    for (std::size_t k = 0; k < d; ++k) g_in[k] *= mask[k];
  linalg::axpy(1.0, g_in, input_grad);
}

BranchGradients branch_backward(const BranchParams& params, std::span<const double> r,
                                std::span<const double> mask,
                                std::span<const double> recon_grad,
                                std::span<const double> code_grad) {
  BranchGradients out{zeros_like(params), Vector(input_dim(params), 0.0)};
  branch_backward_accumulate(params, r, mask, recon_grad, code_grad, out.params, out.input);
  return out;
}

BranchParams zeros_like(const BranchParams& params) {
  BranchParams z = params;
  for (auto block : parameter_blocks(z))
    for (double& v : block) v = 0.0;
  return z;
}

std::vector<std::span<double>> parameter_blocks(BranchParams& params) {
  std::vector<std::span<double>> out;
  std::visit(overloaded{
                 [&](Rank1Tied& b) { out.emplace_back(b.u); },
                 [&](Rank1Untied& b) {
                   out.emplace_back(b.u);
                   out.emplace_back(b.v);
                 },
                 [&](LinearAE& b) {
                   out.emplace_back(b.encoder.data);
                   out.emplace_back(b.decoder.data);
                 },
                 [&](MlpAE& b) {
                   for (auto* chain : {&b.encoder, &b.decoder})
                     for (auto& layer : *chain) {
                       out.emplace_back(layer.weight.data);
                       out.emplace_back(layer.bias);
                     }
                 },
             },
             params);
  return out;
}

std::vector<std::span<const double>> parameter_blocks(const BranchParams& params) {
  auto blocks = parameter_blocks(const_cast<BranchParams&>(params));
  return {blocks.begin(), blocks.end()};
}

std::size_t parameter_count(const BranchParams& params) {
  std::size_t n = 0;
  for (auto block : parameter_blocks(params)) n += block.size();
  return n;
}

Vector flatten(const BranchParams& params) {
  Vector out;
  out.reserve(parameter_count(params));
  for (auto block : parameter_blocks(params)) out.insert(out.end(), block.begin(), block.end());
  return out;
}

void assign_flat(BranchParams& params, std::span<const double> flat) {
  if (flat.size() != parameter_count(params))
    throw ShapeError("flat parameter vector has the wrong length");
  std::size_t offset = 0;
  for (auto block : parameter_blocks(params)) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), block.size(), block.begin());
    offset += block.size();
  }
}

void normalize_rank1(BranchParams& params) {
  if (auto* b = std::get_if<Rank1Tied>(&params)) {
    linalg::normalize(b->u);
  } else if (auto* b = std::get_if<Rank1Untied>(&params)) {
    linalg::normalize(b->u);
    linalg::normalize(b->v);
  }
}

bool is_rank1(const BranchParams& params) {
  return std::holds_alternative<Rank1Tied>(params) || std::holds_alternative<Rank1Untied>(params);
}

const Vector& rank1_direction(const BranchParams& params) {
  if (const auto* b = std::get_if<Rank1Tied>(&params)) return b->u;
  if (const auto* b = std::get_if<Rank1Untied>(&params)) return b->u;
  throw UsageError("branch is not rank-1");
}

}  // namespace decompnet
