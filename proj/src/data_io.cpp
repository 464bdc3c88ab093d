#include "decompnet/data_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "decompnet/errors.hpp"

namespace decompnet {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Unsigned decimal integer preceded by whitespace/comments.
  std::uint64_t read_uint(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw ParseError(pos_, std::string("unexpected end of data reading ") + what);
    if (!std::isdigit(static_cast<unsigned char>(bytes_[pos_])))
      throw ParseError(pos_, std::string("expected an unsigned integer for ") + what);
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (v > (1ull << 40)) throw ParseError(pos_, std::string(what) + " is too large");
      ++pos_;
    }
    if (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) &&
        bytes_[pos_] != '#')
      throw ParseError(pos_, std::string("unexpected character after ") + what);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

void gram_schmidt(std::vector<Vector>& vs) {
  for (std::size_t k = 0; k < vs.size(); ++k) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < k; ++j) linalg::axpy(-linalg::dot(vs[j], vs[k]), vs[j], vs[k]);
    linalg::normalize(vs[k]);
  }
}

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw ParseError(0, "bad magic number, expected P2 or P5");
  const bool binary = bytes[1] == '5';
  HeaderReader in(bytes);
  in.advance(2);
  if (in.pos() < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[2])) && bytes[2] != '#')
    throw ParseError(2, "bad magic number, expected whitespace after P2/P5");

  GrayImage img;
  img.width = in.read_uint("width");
  img.height = in.read_uint("height");
  const std::uint64_t maxval = in.read_uint("maxval");
  if (img.width == 0 || img.height == 0) throw ParseError(in.pos(), "image dimensions must be positive");
  if (maxval == 0 || maxval > 65535) throw ParseError(in.pos(), "maxval must lie in [1, 65535]");
  img.maxval = static_cast<std::uint32_t>(maxval);
  const std::size_t count = img.width * img.height;
  if (count > (1ull << 31)) throw ParseError(in.pos(), "image is too large");
  img.pixels.resize(count);

  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    if (in.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[in.pos()])))
      throw ParseError(in.pos(), "missing whitespace after maxval");
    in.advance(1);
    const std::size_t bps = maxval > 255 ? 2 : 1;
    const std::size_t start = in.pos();
    if (bytes.size() - start < count * bps)
      throw ParseError(bytes.size(), "truncated raster: need " + std::to_string(count * bps) +
                                         " bytes, have " + std::to_string(bytes.size() - start));
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t v;
      if (bps == 1) {
        v = static_cast<unsigned char>(bytes[start + i]);
      } else {
        v = (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[start + 2 * i])) << 8) |
            static_cast<unsigned char>(bytes[start + 2 * i + 1]);
      }
      if (v > maxval) throw ParseError(start + i * bps, "sample exceeds maxval");
      img.pixels[i] = static_cast<std::uint16_t>(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = in.pos();
      const std::uint64_t v = in.read_uint("sample");
      if (v > maxval) throw ParseError(at, "sample exceeds maxval");
      img.pixels[i] = static_cast<std::uint16_t>(v);
    }
  }
  return img;
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_pgm(ss.str());
}

std::string encode_pgm(const GrayImage& img, bool binary) {
  if (img.pixels.size() != img.width * img.height) throw ShapeError("pixel count differs from h x w");
  if (img.maxval == 0 || img.maxval > 65535) throw UsageError("maxval must lie in [1, 65535]");
  std::string out = (binary ? "P5\n" : "P2\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n" + std::to_string(img.maxval) + "\n";
  if (binary) {
    for (std::uint16_t p : img.pixels) {
      if (img.maxval > 255) out.push_back(static_cast<char>(p >> 8));
      out.push_back(static_cast<char>(p & 0xFF));
    }
  } else {
    for (std::size_t r = 0; r < img.height; ++r) {
      for (std::size_t c = 0; c < img.width; ++c) {
        if (c) out.push_back(' ');
        out += std::to_string(img.pixels[r * img.width + c]);
      }
      out.push_back('\n');
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img, bool binary) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  const std::string bytes = encode_pgm(img, binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GrayImage downsample(const GrayImage& img, std::size_t factor) {
  if (factor < 1) throw UsageError("downsample factor must be ≥ 1");
  if (factor == 1) return img;
  GrayImage out;
  out.height = img.height / factor;
  out.width = img.width / factor;
  out.maxval = img.maxval;
  if (out.height == 0 || out.width == 0) throw UsageError("downsample factor exceeds image size");
  out.pixels.resize(out.height * out.width);
  const double area = static_cast<double>(factor * factor);
  for (std::size_t r = 0; r < out.height; ++r)
    for (std::size_t c = 0; c < out.width; ++c) {
      double s = 0.0;
      for (std::size_t dr = 0; dr < factor; ++dr)
        for (std::size_t dc = 0; dc < factor; ++dc)
          s += img.pixels[(r * factor + dr) * img.width + c * factor + dc];
      out.pixels[r * out.width + c] = static_cast<std::uint16_t>(std::lround(s / area));
    }
  return out;
}

Vector image_to_vector(const GrayImage& img) {
  return Vector(img.pixels.begin(), img.pixels.end());
}

Dataset standardize(const std::vector<Vector>& raw, std::optional<ImageShape> image_shape) {
  if (raw.size() < 2) throw UsageError("standardize needs at least 2 samples");
  const std::size_t d = raw.front().size();
  if (d == 0) throw ShapeError("samples must be non-empty");
  for (const auto& v : raw)
    if (v.size() != d) throw ShapeError("all samples must share one length");
  if (image_shape && image_shape->size() != d) throw ShapeError("image shape does not match d");

  const double n = static_cast<double>(raw.size());
  Dataset ds;
  ds.dim = d;
  ds.image_shape = image_shape;
  ds.stats.mean.assign(d, 0.0);
  ds.stats.scale.assign(d, 1.0);
  for (const auto& v : raw) linalg::axpy(1.0, v, ds.stats.mean);
  linalg::scale(1.0 / n, ds.stats.mean);
  for (std::size_t j = 0; j < d; ++j) {
    double ss = 0.0;
    for (const auto& v : raw) {
      const double c = v[j] - ds.stats.mean[j];
      ss += c * c;
    }
    const double sd = std::sqrt(ss / n);
    if (sd > 1e-12 * std::max(1.0, std::abs(ds.stats.mean[j]))) ds.stats.scale[j] = sd;
  }
  for (std::size_t k = 0; k < raw.size(); ++k) {
    Sample s{static_cast<std::int64_t>(k), Vector(d)};
    for (std::size_t j = 0; j < d; ++j) s.x[j] = (raw[k][j] - ds.stats.mean[j]) / ds.stats.scale[j];
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Vector inverse_standardize(const Standardization& stats, std::span<const double> v) {
  if (v.size() != stats.mean.size() || v.size() != stats.scale.size())
    throw ShapeError("vector length differs from standardization statistics");
  Vector out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] * stats.scale[j] + stats.mean[j];
  return out;
}

Matrix data_matrix(const Dataset& ds) {
  Matrix m(ds.dim, ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) m.set_column(k, ds.samples[k].x);
  return m;
}

LowRankData synth_lowrank(std::size_t dim, std::size_t n_samples, std::size_t rank,
                          double noise_std, std::uint64_t seed) {
  if (dim < 1) throw UsageError("dimension must be ≥ 1");
  if (rank > dim) throw UsageError("rank must not exceed d");
  if (n_samples < 1) throw UsageError("need at least one sample");
  if (noise_std < 0.0) throw UsageError("noise_std must be ≥ 0");
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal;

  LowRankData out;
  out.factors.assign(rank, Vector(dim));
  for (auto& a : out.factors)
    for (double& v : a) v = normal(rng);
  gram_schmidt(out.factors);
  for (std::size_t k = 0; k < rank; ++k)
    out.spectrum.push_back(std::ldexp(1.0, static_cast<int>(rank - 1 - k)));

  Dataset& ds = out.dataset;
  ds.dim = dim;
  ds.stats = {Vector(dim, 0.0), Vector(dim, 1.0)};
  for (std::size_t i = 0; i < n_samples; ++i) {
    Sample s{static_cast<std::int64_t>(i), Vector(dim, 0.0)};
    for (std::size_t k = 0; k < rank; ++k) linalg::axpy(normal(rng) * out.spectrum[k], out.factors[k], s.x);
    if (noise_std > 0.0)
      for (double& v : s.x) v += noise_std * normal(rng);
    ds.samples.push_back(std::move(s));
  }
  return out;
}

Dataset synth_two_halves(std::size_t height, std::size_t width, std::size_t n_samples,
                         double noise_std, std::uint64_t seed) {
  if (height < 2 || width < 2) throw UsageError("image must be at least 2 x 2");
  if (n_samples < 1) throw UsageError("need at least one sample");
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal;
  const std::size_t d = height * width;
  const std::size_t half = width / 2;
  const double env_sd = std::max(1.0, std::min(static_cast<double>(height), static_cast<double>(width)) / 5.0);

  // patterns[h][k]: pattern k of half h, zero outside the half.
  std::vector<std::vector<Vector>> patterns(2, std::vector<Vector>(2, Vector(d, 0.0)));
  for (std::size_t h = 0; h < 2; ++h) {
    const std::size_t c0 = h == 0 ? 0 : half, c1 = h == 0 ? half : width;
    const double crow = (static_cast<double>(height) - 1.0) / 2.0;
    const double ccol = (static_cast<double>(c0 + c1) - 1.0) / 2.0;
    for (auto& p : patterns[h]) {
      for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = c0; c < c1; ++c) {
          const double dr = r - crow, dc = c - ccol;
          const double env = std::exp(-(dr * dr + dc * dc) / (2.0 * env_sd * env_sd));
          p[r * width + c] = env * normal(rng);
        }
      linalg::normalize(p);
    }
  }
  const double amp[2] = {3.0, 1.5};

  Dataset ds;
  ds.dim = d;
  ds.image_shape = ImageShape{height, width};
  ds.stats = {Vector(d, 0.0), Vector(d, 1.0)};
  for (std::size_t i = 0; i < n_samples; ++i) {
    Sample s{static_cast<std::int64_t>(i), Vector(d, 0.0)};
    for (std::size_t h = 0; h < 2; ++h)
      for (std::size_t k = 0; k < 2; ++k) linalg::axpy(amp[k] * normal(rng), patterns[h][k], s.x);
    if (noise_std > 0.0)
      for (double& v : s.x) v += noise_std * normal(rng);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

double mask_tau(const MaskSpec& spec) {
  const double area = spec.area_fraction * static_cast<double>(spec.shape.size());
  return std::sqrt(area / (2.0 * std::numbers::pi * std::numbers::ln2));
}

double mask_half_level_radius(const MaskSpec& spec) {
  return mask_tau(spec) * std::sqrt(2.0 * std::numbers::ln2);
}

double mask_value(const MaskSpec& spec, double row, double col) {
  const double tau = mask_tau(spec);
  const double dr = row - spec.center_row, dc = col - spec.center_col;
  return std::min(1.0, std::exp(-(dr * dr + dc * dc) / (2.0 * tau * tau)));
}

Vector gaussian_mask(const MaskSpec& spec) {
  if (!(spec.area_fraction > 0.0 && spec.area_fraction < 1.0))
    throw UsageError("mask area_fraction must lie in (0,1)");
  if (spec.shape.size() == 0) throw UsageError("mask shape must be non-empty");
  if (spec.center_row < 0.0 || spec.center_col < 0.0 ||
      spec.center_row > static_cast<double>(spec.shape.height - 1) ||
      spec.center_col > static_cast<double>(spec.shape.width - 1))
    throw UsageError("mask center must lie inside the image");
  Vector m(spec.shape.size());
  for (std::size_t r = 0; r < spec.shape.height; ++r)
    for (std::size_t c = 0; c < spec.shape.width; ++c)
      m[r * spec.shape.width + c] = mask_value(spec, static_cast<double>(r), static_cast<double>(c));
  return m;
}

std::vector<MaskSpec> random_mask_specs(std::size_t n, ImageShape shape, double area_fraction,
                                        std::uint64_t seed) {
  auto rng = make_rng(seed);
  const double h = static_cast<double>(shape.height - 1), w = static_cast<double>(shape.width - 1);
  std::uniform_real_distribution<double> row(0.0, h), col(0.0, w);
  std::vector<MaskSpec> out;
  while (out.size() < n) {
    const double r = row(rng), c = col(rng);
    if (r < 0.1 * h || r > 0.9 * h || c < 0.1 * w || c > 0.9 * w) continue;
    out.push_back({r, c, area_fraction, shape});
  }
  return out;
}

}  // namespace decompnet
