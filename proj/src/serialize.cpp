#include "decompnet/serialize.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "decompnet/branch.hpp"
#include "decompnet/errors.hpp"
#include "json.hpp"

namespace decompnet {
namespace {

using json = nlohmann::json;

const char* encoding_name(NumberEncoding enc) { return enc == NumberEncoding::Hex ? "hex" : "decimal"; }

// Field access with the dotted path reported on failure.
const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw LoadError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw LoadError(path + "." + key, "missing field");
  return *it;
}

template <class T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw LoadError(path, std::string("wrong type: ") + e.what());
  }
}

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path) {
  return get_as<T>(field(j, key, path), path + "." + key);
}

json encode_array(std::span<const double> v, NumberEncoding enc) {
  json arr = json::array();
  for (double x : v) arr.push_back(encode_double(x, enc));
  return arr;
}

Vector decode_array(const json& j, NumberEncoding enc, const std::string& path) {
  if (!j.is_array()) throw LoadError(path, "expected an array");
  Vector out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    out.push_back(decode_double(get_as<std::string>(j[i], p), enc, p));
  }
  return out;
}

Vector decode_sized(const json& j, const std::string& key, std::size_t n, NumberEncoding enc,
                    const std::string& path) {
  Vector v = decode_array(field(j, key, path), enc, path + "." + key);
  if (v.size() != n)
    throw LoadError(path + "." + key, "expected " + std::to_string(n) + " values, found " +
                                          std::to_string(v.size()));
  return v;
}

json encode_matrix(const Matrix& m, NumberEncoding enc) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"values", encode_array(m.data, enc)}};
}

Matrix decode_matrix(const json& j, NumberEncoding enc, const std::string& path) {
  Matrix m(get_field<std::size_t>(j, "rows", path), get_field<std::size_t>(j, "cols", path));
  m.data = decode_sized(j, "values", m.rows * m.cols, enc, path);
  return m;
}

json encode_chain(const std::vector<AffineLayer>& chain, NumberEncoding enc) {
  json arr = json::array();
  for (const auto& l : chain)
    arr.push_back({{"weight", encode_matrix(l.weight, enc)}, {"bias", encode_array(l.bias, enc)}});
  return arr;
}

std::vector<AffineLayer> decode_chain(const json& j, NumberEncoding enc, const std::string& path) {
  if (!j.is_array() || j.empty()) throw LoadError(path, "expected a non-empty array of layers");
  std::vector<AffineLayer> chain;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    AffineLayer l;
    l.weight = decode_matrix(field(j[i], "weight", p), enc, p + ".weight");
    l.bias = decode_sized(j[i], "bias", l.weight.rows, enc, p);
    if (!chain.empty() && chain.back().weight.rows != l.weight.cols)
      throw LoadError(p + ".weight", "layer input width does not match the previous layer");
    chain.push_back(std::move(l));
  }
  return chain;
}

json encode_branch(const BranchParams& b, NumberEncoding enc) {
  if (const auto* p = std::get_if<Rank1Tied>(&b))
    return {{"kind", to_string(BranchKind::Rank1Tied)}, {"u", encode_array(p->u, enc)}};
  if (const auto* p = std::get_if<Rank1Untied>(&b))
    return {{"kind", to_string(BranchKind::Rank1Untied)},
            {"u", encode_array(p->u, enc)},
            {"v", encode_array(p->v, enc)}};
  if (const auto* p = std::get_if<LinearAE>(&b))
    return {{"kind", to_string(BranchKind::LinearAE)},
            {"encoder", encode_matrix(p->encoder, enc)},
            {"decoder", encode_matrix(p->decoder, enc)}};
  const auto& p = std::get<MlpAE>(b);
  return {{"kind", to_string(BranchKind::MlpAE)},
          {"encoder", encode_chain(p.encoder, enc)},
          {"decoder", encode_chain(p.decoder, enc)}};
}

BranchParams decode_branch(const json& j, std::size_t dim, NumberEncoding enc,
                           const std::string& path) {
  const auto kind_name = get_field<std::string>(j, "kind", path);
  BranchKind kind;
  try {
    kind = parse_branch_kind(kind_name);
  } catch (const ConfigError& e) {
    throw LoadError(path + ".kind", e.what());
  }
  switch (kind) {
    case BranchKind::Rank1Tied:
      return Rank1Tied{decode_sized(j, "u", dim, enc, path)};
    case BranchKind::Rank1Untied:
      return Rank1Untied{decode_sized(j, "u", dim, enc, path), decode_sized(j, "v", dim, enc, path)};
    case BranchKind::LinearAE: {
      LinearAE b{decode_matrix(field(j, "encoder", path), enc, path + ".encoder"),
                 decode_matrix(field(j, "decoder", path), enc, path + ".decoder")};
      if (b.encoder.cols != dim || b.decoder.rows != dim || b.decoder.cols != b.encoder.rows)
        throw LoadError(path, "encoder/decoder shapes are inconsistent with d");
      return b;
    }
    case BranchKind::MlpAE: {
      MlpAE b{decode_chain(field(j, "encoder", path), enc, path + ".encoder"),
              decode_chain(field(j, "decoder", path), enc, path + ".decoder")};
      if (b.encoder.front().weight.cols != dim || b.decoder.back().weight.rows != dim ||
          b.decoder.front().weight.cols != b.encoder.back().weight.rows)
        throw LoadError(path, "layer shapes are inconsistent with d");
      return b;
    }
  }
  throw LoadError(path, "unknown branch kind");
}

json encode_config(const ModelConfig& c, std::size_t dim) {
  json widths = json::array();
  for (auto w : c.branch.layer_widths) widths.push_back(w);
  return {{"dim", dim},
          {"n_branches", c.n_branches},
          {"branch_kind", to_string(c.branch.kind)},
          {"code_width", c.branch.code_width},
          {"layer_widths", widths},
          {"sweeps", c.sweeps},
          {"schedule", to_string(c.schedule)},
          {"damping", c.damping},
          {"lambda_s", c.lambda_s},
          {"lambda_perp", c.lambda_perp},
          {"ridge", c.ridge},
          {"sigma_mode", to_string(c.sigma_mode)},
          {"clamp_sigma", c.clamp_sigma},
          {"normalize_components", c.normalize_components},
          {"residual_grad_mode", to_string(c.grad_mode)},
          {"seed", c.seed},
          {"init_spread", c.init_spread},
          {"nnls_tol", c.nnls_tol},
          {"nnls_max_iter", c.nnls_max_iter}};
}

ModelConfig decode_config(const json& j, const std::string& path) {
  ModelConfig c;
  try {
    c.n_branches = get_field<int>(j, "n_branches", path);
    c.branch.kind = parse_branch_kind(get_field<std::string>(j, "branch_kind", path));
    c.branch.code_width = get_field<std::size_t>(j, "code_width", path);
    c.branch.layer_widths = get_field<std::vector<std::size_t>>(j, "layer_widths", path);
    c.sweeps = get_field<int>(j, "sweeps", path);
    c.schedule = parse_schedule(get_field<std::string>(j, "schedule", path));
    c.damping = get_field<double>(j, "damping", path);
    c.lambda_s = get_field<double>(j, "lambda_s", path);
    c.lambda_perp = get_field<double>(j, "lambda_perp", path);
    c.ridge = get_field<double>(j, "ridge", path);
    c.sigma_mode = parse_sigma_mode(get_field<std::string>(j, "sigma_mode", path));
    c.clamp_sigma = get_field<bool>(j, "clamp_sigma", path);
    c.normalize_components = get_field<bool>(j, "normalize_components", path);
    c.grad_mode = parse_grad_mode(get_field<std::string>(j, "residual_grad_mode", path));
    c.seed = get_field<std::uint64_t>(j, "seed", path);
    c.init_spread = get_field<double>(j, "init_spread", path);
    c.nnls_tol = get_field<double>(j, "nnls_tol", path);
    c.nnls_max_iter = get_field<int>(j, "nnls_max_iter", path);
  } catch (const ConfigError& e) {
    throw LoadError(path, e.what());
  }
  auto issues = validate_config(c);
  if (!issues.empty()) throw LoadError(path, issues.front());
  return c;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte, std::string("invalid JSON: ") + e.what());
  }
}

NumberEncoding read_header(const json& j, const std::string& expected_kind) {
  const int version = get_field<int>(j, "schema_version", "$");
  if (version != kSchemaVersion)
    throw LoadError("$.schema_version", "unsupported schema_version " + std::to_string(version));
  const auto kind = get_field<std::string>(j, "kind", "$");
  if (kind != expected_kind)
    throw LoadError("$.kind", "expected '" + expected_kind + "', found '" + kind + "'");
  const auto enc = get_field<std::string>(j, "encoding", "$");
  if (enc == "hex") return NumberEncoding::Hex;
  if (enc == "decimal") return NumberEncoding::Decimal;
  throw LoadError("$.encoding", "unknown encoding '" + enc + "'");
}

}  // namespace

std::string encode_double(double v, NumberEncoding enc) {
  char buf[40];
  if (enc == NumberEncoding::Hex) {
    std::snprintf(buf, sizeof buf, "0x%016" PRIx64, std::bit_cast<std::uint64_t>(v));
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  return buf;
}

double decode_double(const std::string& s, NumberEncoding enc, const std::string& path) {
  if (enc == NumberEncoding::Hex) {
    if (s.size() != 18 || s[0] != '0' || s[1] != 'x')
      throw LoadError(path, "expected 0x followed by 16 hex digits, found '" + s + "'");
    std::uint64_t bits = 0;
    for (std::size_t i = 2; i < s.size(); ++i) {
      const char c = s[i];
      int digit;
      if (c >= '0' && c <= '9') digit = c - '0';
      else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
      else throw LoadError(path, "invalid hex digit in '" + s + "'");
      bits = (bits << 4) | static_cast<std::uint64_t>(digit);
    }
    return std::bit_cast<double>(bits);
  }
  if (s.empty()) throw LoadError(path, "empty number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw LoadError(path, "invalid decimal number '" + s + "'");
  return v;
}

std::string model_to_string(const DecomposerModel& model, NumberEncoding enc) {
  check_model(model);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "model";
  j["encoding"] = encoding_name(enc);
  j["config"] = encode_config(model.config, model.dim);
  json branches = json::array();
  for (const auto& b : model.branches) branches.push_back(encode_branch(b, enc));
  j["branches"] = std::move(branches);
  if (model.masks) {
    json masks = json::array();
    for (const auto& m : *model.masks) masks.push_back(encode_array(m, enc));
    j["masks"] = std::move(masks);
  }
  return j.dump(1) + "\n";
}

DecomposerModel model_from_string(const std::string& text) {
  const json j = parse_json(text);
  const NumberEncoding enc = read_header(j, "model");
  const json& cfg = field(j, "config", "$");
  DecomposerModel m;
  m.config = decode_config(cfg, "$.config");
  m.dim = get_field<std::size_t>(cfg, "dim", "$.config");
  if (m.dim == 0) throw LoadError("$.config.dim", "must be positive");
  const json& branches = field(j, "branches", "$");
  if (!branches.is_array()) throw LoadError("$.branches", "expected an array");
  if (branches.size() != static_cast<std::size_t>(m.config.n_branches))
    throw LoadError("$.branches", "expected " + std::to_string(m.config.n_branches) +
                                      " branches, found " + std::to_string(branches.size()));
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string p = "$.branches[" + std::to_string(i) + "]";
    BranchParams b = decode_branch(branches[i], m.dim, enc, p);
    if (to_string(m.config.branch.kind) != get_field<std::string>(branches[i], "kind", p))
      throw LoadError(p + ".kind", "differs from config.branch_kind");
    m.branches.push_back(std::move(b));
  }
  if (auto it = j.find("masks"); it != j.end()) {
    if (!it->is_array()) throw LoadError("$.masks", "expected an array");
    std::vector<Vector> masks;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "$.masks[" + std::to_string(i) + "]";
      Vector mask = decode_array((*it)[i], enc, p);
      if (mask.size() != m.dim) throw LoadError(p, "expected " + std::to_string(m.dim) + " values");
      masks.push_back(std::move(mask));
    }
    m.masks = std::move(masks);
  }
  try {
    check_model(m);
  } catch (const Error& e) {
    throw LoadError("$", e.what());
  }
  return m;
}

void export_model(const DecomposerModel& model, const std::filesystem::path& path,
                  NumberEncoding enc) {
  write_text_file(path, model_to_string(model, enc));
}

DecomposerModel load_model(const std::filesystem::path& path) {
  return model_from_string(read_text_file(path));
}

std::string dataset_to_string(const Dataset& ds, NumberEncoding enc) {
  check_dataset(ds);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "dataset";
  j["encoding"] = encoding_name(enc);
  json cfg{{"dim", ds.dim}};
  if (ds.image_shape)
    cfg["image_shape"] = {{"height", ds.image_shape->height}, {"width", ds.image_shape->width}};
  j["config"] = std::move(cfg);
  j["standardization"] = {{"mean", encode_array(ds.stats.mean, enc)},
                          {"scale", encode_array(ds.stats.scale, enc)}};
  json samples = json::array();
  for (const auto& s : ds.samples) samples.push_back({{"id", s.id}, {"x", encode_array(s.x, enc)}});
  j["samples"] = std::move(samples);
  return j.dump(1) + "\n";
}

Dataset dataset_from_string(const std::string& text) {
  const json j = parse_json(text);
  const NumberEncoding enc = read_header(j, "dataset");
  const json& cfg = field(j, "config", "$");
  Dataset ds;
  ds.dim = get_field<std::size_t>(cfg, "dim", "$.config");
  if (ds.dim == 0) throw LoadError("$.config.dim", "must be positive");
  if (auto it = cfg.find("image_shape"); it != cfg.end())
    ds.image_shape = ImageShape{get_field<std::size_t>(*it, "height", "$.config.image_shape"),
                                get_field<std::size_t>(*it, "width", "$.config.image_shape")};
  const json& st = field(j, "standardization", "$");
  ds.stats.mean = decode_sized(st, "mean", ds.dim, enc, "$.standardization");
  ds.stats.scale = decode_sized(st, "scale", ds.dim, enc, "$.standardization");
  const json& samples = field(j, "samples", "$");
  if (!samples.is_array()) throw LoadError("$.samples", "expected an array");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string p = "$.samples[" + std::to_string(i) + "]";
    Sample s;
    s.id = get_field<std::int64_t>(samples[i], "id", p);
    s.x = decode_sized(samples[i], "x", ds.dim, enc, p);
    ds.samples.push_back(std::move(s));
  }
  try {
    check_dataset(ds);
  } catch (const Error& e) {
    throw LoadError("$", e.what());
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path, NumberEncoding enc) {
  write_text_file(path, dataset_to_string(ds, enc));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_string(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
  if (!f) throw UsageError("failed writing " + path.string());
}

}  // namespace decompnet
