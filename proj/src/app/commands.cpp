#include "decompnet/app/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "decompnet/app/presets.hpp"
#include "decompnet/app/render.hpp"
#include "decompnet/app/server.hpp"
#include "decompnet/branch.hpp"
#include "decompnet/data_io.hpp"
#include "decompnet/errors.hpp"
#include "decompnet/serialize.hpp"
#include "decompnet/svd_oracle.hpp"
#include "json.hpp"

namespace decompnet::app {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::map<std::string, std::string> parse_kv(const std::string& text, const std::string& flag) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError(flag + ": expected key=value pairs, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

template <class T>
T kv_number(const std::map<std::string, std::string>& kv, const std::string& key,
            const std::string& flag, std::optional<T> fallback = std::nullopt) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    throw UsageError(flag + ": missing '" + key + "'");
  }
  try {
    std::size_t used = 0;
    T v;
    if constexpr (std::is_floating_point_v<T>) v = static_cast<T>(std::stod(it->second, &used));
    else v = static_cast<T>(std::stoull(it->second, &used));
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError(flag + ": '" + key + "' is not a valid number");
  }
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::size_t sample_index(const Dataset& ds, std::int64_t id) {
  for (std::size_t k = 0; k < ds.size(); ++k)
    if (ds.samples[k].id == id) return k;
  throw UsageError("sample id " + std::to_string(id) + " is not in the dataset");
}

void require_path(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

// Inputs and outputs of one command must not alias each other.
void check_distinct_paths(std::initializer_list<std::pair<const char*, const std::string*>> paths) {
  std::vector<std::pair<const char*, fs::path>> seen;
  for (const auto& [flag, value] : paths) {
    if (value->empty()) continue;
    const fs::path p = fs::weakly_canonical(fs::absolute(*value));
    for (const auto& [other_flag, other] : seen)
      if (other == p)
        throw UsageError(std::string(flag) + " and " + other_flag + " name the same path: " + *value);
    seen.emplace_back(flag, p);
  }
}

void check_dims(const DecomposerModel& model, const Dataset& ds) {
  if (model.dim != ds.dim)
    throw UsageError("model d=" + std::to_string(model.dim) + " differs from dataset d=" +
                     std::to_string(ds.dim));
}

json render_info(const Rendered& r, const std::string& file) {
  json j{{"scale", r.scale}, {"offset", r.offset}};
  if (!file.empty()) j["file"] = file;
  return j;
}

json loss_json(const LossBreakdown& l) {
  return {{"total", l.total},
          {"recon", l.recon},
          {"sparsity", l.sparsity},
          {"orthogonality", l.orthogonality}};
}

std::vector<Vector> gaussian_masks_for(const RunConfig& rc, const Dataset& ds, int n) {
  if (!ds.image_shape) throw UsageError("--masks needs a dataset with an image shape");
  std::vector<Vector> masks;
  for (const auto& spec : random_mask_specs(static_cast<std::size_t>(n), *ds.image_shape,
                                            rc.mask_area, rc.seed ^ 0xA5A5A5A5ull))
    masks.push_back(gaussian_mask(spec));
  return masks;
}

std::vector<fs::path> pgm_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw UsageError("need at least 2 .pgm files under " + dir.string());
  return files;
}

SigmaVector resolve_overrides(const RunConfig& rc, const SigmaVector& estimated,
                              std::int64_t& sample_id) {
  SigmaVector sigma = estimated;
  const std::size_t n = estimated.size();
  if (!rc.overrides_file.empty()) {
    json j;
    try {
      j = json::parse(read_text_file(rc.overrides_file));
    } catch (const json::parse_error& e) {
      throw UsageError("overrides file is not valid JSON: " + std::string(e.what()));
    }
    if (j.contains("sample")) sample_id = j["sample"].get<std::int64_t>();
    if (!j.contains("sigma") || !j["sigma"].is_array())
      throw UsageError("overrides file needs a 'sigma' array");
    sigma = j["sigma"].get<std::vector<double>>();
  }
  if (!rc.sigma.empty()) sigma = parse_number_list(rc.sigma, "--sigma");
  for (const auto& item : rc.set_sigma) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects index=value, got '" + item + "'");
    std::size_t idx;
    try {
      idx = std::stoul(item.substr(0, eq));
    } catch (const std::exception&) {
      throw UsageError("--set index is not an integer: '" + item + "'");
    }
    if (idx >= n) throw UsageError("--set index " + std::to_string(idx) + " out of range");
    sigma[idx] = parse_number_list(item.substr(eq + 1), "--set").at(0);
  }
  if (sigma.size() != n)
    throw UsageError("sigma override has " + std::to_string(sigma.size()) + " entries, model has " +
                     std::to_string(n) + " branches");
  for (double s : sigma)
    if (!(s >= 0.0)) throw UsageError("sigma overrides must be ≥ 0");
  return sigma;
}

}  // namespace

void apply_preset(RunConfig& rc, const std::string& name) {
  const Preset p = preset(name);
  rc.preset = name;
  rc.branches = p.model.n_branches;
  rc.kind = to_string(p.model.branch.kind);
  rc.code_width = p.model.branch.code_width;
  rc.layers.clear();
  for (std::size_t w : p.model.branch.layer_widths)
    rc.layers += (rc.layers.empty() ? "" : ",") + std::to_string(w);
  rc.sweeps = p.model.sweeps;
  rc.schedule = to_string(p.model.schedule);
  rc.damping = p.model.damping;
  rc.lambda_s = p.model.lambda_s;
  rc.lambda_perp = p.model.lambda_perp;
  rc.ridge = p.model.ridge;
  rc.sigma_mode = to_string(p.model.sigma_mode);
  rc.clamp_sigma = p.model.clamp_sigma;
  rc.normalize = p.model.normalize_components;
  rc.grad_mode = to_string(p.model.grad_mode);
  rc.init_spread = p.model.init_spread;
  rc.epochs = p.train.epochs;
  rc.batch_size = p.train.batch_size;
  rc.lr = p.train.adam.learning_rate;
  rc.fixed_sigma_epochs = p.train.fixed_sigma_epochs;
  rc.masks = p.masks;
  rc.mask_area = p.mask_area_fraction;
}

void apply_config_text(RunConfig& rc, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  if (auto it = j.find("preset"); it != j.end()) apply_preset(rc, it->get<std::string>());

  const std::map<std::string, std::function<void(const json&)>> setters = {
      {"preset", [](const json&) {}},
      {"branches", [&](const json& v) { rc.branches = v.get<int>(); }},
      {"kind", [&](const json& v) { rc.kind = v.get<std::string>(); }},
      {"code_width", [&](const json& v) { rc.code_width = v.get<std::size_t>(); }},
      {"layers", [&](const json& v) { rc.layers = v.get<std::string>(); }},
      {"sweeps", [&](const json& v) { rc.sweeps = v.get<int>(); }},
      {"schedule", [&](const json& v) { rc.schedule = v.get<std::string>(); }},
      {"damping", [&](const json& v) { rc.damping = v.get<double>(); }},
      {"lambda_s", [&](const json& v) { rc.lambda_s = v.get<double>(); }},
      {"lambda_perp", [&](const json& v) { rc.lambda_perp = v.get<double>(); }},
      {"ridge", [&](const json& v) { rc.ridge = v.get<double>(); }},
      {"sigma_mode", [&](const json& v) { rc.sigma_mode = v.get<std::string>(); }},
      {"clamp_sigma", [&](const json& v) { rc.clamp_sigma = v.get<bool>(); }},
      {"normalize", [&](const json& v) { rc.normalize = v.get<bool>(); }},
      {"grad_mode", [&](const json& v) { rc.grad_mode = v.get<std::string>(); }},
      {"seed", [&](const json& v) { rc.seed = v.get<std::uint64_t>(); }},
      {"init_spread", [&](const json& v) { rc.init_spread = v.get<double>(); }},
      {"epochs", [&](const json& v) { rc.epochs = v.get<int>(); }},
      {"batch_size", [&](const json& v) { rc.batch_size = v.get<std::size_t>(); }},
      {"tol", [&](const json& v) { rc.tol = v.get<double>(); }},
      {"lr", [&](const json& v) { rc.lr = v.get<double>(); }},
      {"k_start", [&](const json& v) { rc.k_start = v.get<int>(); }},
      {"k_raise_after", [&](const json& v) { rc.k_raise_after = v.get<int>(); }},
      {"fixed_sigma_epochs", [&](const json& v) { rc.fixed_sigma_epochs = v.get<int>(); }},
      {"masks", [&](const json& v) { rc.masks = v.get<bool>(); }},
      {"mask_area", [&](const json& v) { rc.mask_area = v.get<double>(); }},
      {"data", [&](const json& v) { rc.data = v.get<std::string>(); }},
      {"synth", [&](const json& v) { rc.synth = v.get<std::string>(); }},
      {"synth_halves", [&](const json& v) { rc.synth_halves = v.get<std::string>(); }},
      {"pgm_dir", [&](const json& v) { rc.pgm_dir = v.get<std::string>(); }},
      {"downsample", [&](const json& v) { rc.downsample = v.get<std::size_t>(); }},
      {"model", [&](const json& v) { rc.model = v.get<std::string>(); }},
      {"out", [&](const json& v) { rc.out = v.get<std::string>(); }},
      {"report", [&](const json& v) { rc.report = v.get<std::string>(); }},
      {"out_dir", [&](const json& v) { rc.out_dir = v.get<std::string>(); }},
      {"ids", [&](const json& v) { rc.ids = v.get<std::vector<std::int64_t>>(); }},
      {"id", [&](const json& v) { rc.id = v.get<std::int64_t>(); }},
      {"min_cos", [&](const json& v) { rc.min_cos = v.get<double>(); }},
      {"host", [&](const json& v) { rc.host = v.get<std::string>(); }},
      {"port", [&](const json& v) { rc.port = v.get<int>(); }},
      {"static_dir", [&](const json& v) { rc.static_dir = v.get<std::string>(); }},
      {"verbose", [&](const json& v) { rc.verbose = v.get<bool>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw UsageError("config file: unknown field '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw UsageError("config file: field '" + key + "' has the wrong type");
    }
  }
}

ModelConfig model_config(const RunConfig& rc) {
  ModelConfig c;
  try {
    c.n_branches = rc.branches;
    c.branch.kind = parse_branch_kind(rc.kind);
    c.branch.code_width = rc.code_width;
    if (!rc.layers.empty())
      for (double w : parse_number_list(rc.layers, "--layers")) {
        if (w < 1 || w != static_cast<double>(static_cast<std::size_t>(w)))
          throw UsageError("--layers entries must be positive integers");
        c.branch.layer_widths.push_back(static_cast<std::size_t>(w));
      }
    c.sweeps = rc.sweeps;
    c.schedule = parse_schedule(rc.schedule);
    c.damping = rc.damping;
    c.lambda_s = rc.lambda_s;
    c.lambda_perp = rc.lambda_perp;
    c.ridge = rc.ridge;
    c.sigma_mode = parse_sigma_mode(rc.sigma_mode);
    c.clamp_sigma = rc.clamp_sigma;
    c.normalize_components = rc.normalize;
    c.grad_mode = parse_grad_mode(rc.grad_mode);
    c.seed = rc.seed;
    c.init_spread = rc.init_spread;
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  auto issues = validate_config(c);
  if (!issues.empty()) throw UsageError(issues.front());
  return c;
}

TrainOptions train_options(const RunConfig& rc) {
  TrainOptions t;
  t.epochs = rc.epochs;
  t.batch_size = rc.batch_size;
  t.tol = rc.tol;
  t.adam.learning_rate = rc.lr;
  t.fixed_sigma_epochs = rc.fixed_sigma_epochs;
  if (rc.k_start > 0) t.sweep_schedule = SweepSchedule{rc.k_start, rc.k_raise_after};
  return t;
}

int cmd_gen_data(const RunConfig& rc, std::ostream& out) {
  require_path(rc.out, "--out");
  const int sources = !rc.synth.empty() + !rc.synth_halves.empty() + !rc.pgm_dir.empty();
  if (sources != 1)
    throw UsageError("gen-data needs exactly one of --synth, --synth-halves, --pgm-dir");

  Dataset ds;
  if (!rc.synth.empty()) {
    const auto kv = parse_kv(rc.synth, "--synth");
    const auto d = kv_number<std::size_t>(kv, "d", "--synth");
    const auto n = kv_number<std::size_t>(kv, "n", "--synth");
    const auto rank = kv_number<std::size_t>(kv, "rank", "--synth");
    const auto noise = kv_number<double>(kv, "noise", "--synth", 0.0);
    const auto seed = kv_number<std::uint64_t>(kv, "seed", "--synth", rc.seed);
    LowRankData data = synth_lowrank(d, n, rank, noise, seed);
    ds = std::move(data.dataset);
    out << "spectrum:";
    for (double s : data.spectrum) out << ' ' << s;
    out << '\n';
  } else if (!rc.synth_halves.empty()) {
    const auto kv = parse_kv(rc.synth_halves, "--synth-halves");
    ds = synth_two_halves(kv_number<std::size_t>(kv, "h", "--synth-halves"),
                          kv_number<std::size_t>(kv, "w", "--synth-halves"),
                          kv_number<std::size_t>(kv, "n", "--synth-halves"),
                          kv_number<double>(kv, "noise", "--synth-halves", 0.0),
                          kv_number<std::uint64_t>(kv, "seed", "--synth-halves", rc.seed));
  } else {
    std::vector<Vector> raw;
    std::optional<ImageShape> shape;
    for (const auto& file : pgm_files(rc.pgm_dir)) {
      const GrayImage img = downsample(load_pgm(file), rc.downsample);
      const ImageShape s{img.height, img.width};
      if (shape && !(*shape == s))
        throw UsageError("image " + file.string() + " is " + std::to_string(s.height) + "x" +
                         std::to_string(s.width) + ", expected " + std::to_string(shape->height) +
                         "x" + std::to_string(shape->width));
      shape = s;
      raw.push_back(image_to_vector(img));
    }
    ds = standardize(raw, shape);
  }
  save_dataset(ds, rc.out);
  out << "d: " << ds.dim << "\nn: " << ds.size() << '\n';
  if (ds.image_shape) out << "image: " << ds.image_shape->height << "x" << ds.image_shape->width << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  require_path(rc.data, "--data");
  require_path(rc.out, "--out");
  check_distinct_paths({{"--data", &rc.data}, {"--out", &rc.out}, {"--report", &rc.report}});
  const Dataset ds = load_dataset(rc.data);
  const ModelConfig config = model_config(rc);
  std::optional<std::vector<Vector>> masks;
  if (rc.masks) masks = gaussian_masks_for(rc, ds, config.n_branches);
  DecomposerModel model = init_model(config, ds.dim, std::move(masks));

  TrainOptions options = train_options(rc);
  if (options.batch_size > ds.size()) options.batch_size = ds.size();
  if (rc.verbose)
    options.on_epoch = [&](const EpochStats& s) {
      out << "epoch " << s.epoch << " loss " << std::setprecision(6) << s.loss.total << '\n';
    };
  TrainResult result = train(std::move(model), ds, options);
  export_model(result.model, rc.out);

  if (!rc.report.empty()) {
    std::string lines;
    for (const auto& e : result.report.epochs) {
      json j{{"epoch", e.epoch},          {"sweeps", e.sweeps},
             {"loss", loss_json(e.loss)}, {"mean_sigma", e.mean_sigma},
             {"grad_norms", e.grad_norms}, {"wall_seconds", e.wall_seconds}};
      lines += j.dump() + "\n";
    }
    lines += json{{"converged", result.report.converged}, {"reason", result.report.reason}}.dump() + "\n";
    write_text_file(rc.report, lines);
  }
  const auto& epochs = result.report.epochs;
  out << "epochs: " << epochs.size() << "\n";
  if (!epochs.empty()) out << "final loss: " << std::setprecision(10) << epochs.back().loss.total << '\n';
  out << "stop: " << result.report.reason << '\n';
  return kExitOk;
}

int cmd_decompose(const RunConfig& rc, std::ostream& out) {
  require_path(rc.model, "--model");
  require_path(rc.data, "--data");
  require_path(rc.out_dir, "--out-dir");
  check_distinct_paths({{"--model", &rc.model}, {"--data", &rc.data}, {"--out-dir", &rc.out_dir}});
  const DecomposerModel model = load_model(rc.model);
  const Dataset ds = load_dataset(rc.data);
  check_dims(model, ds);
  fs::create_directories(rc.out_dir);
  const std::vector<std::int64_t> ids = rc.ids.empty() ? std::vector<std::int64_t>{rc.id} : rc.ids;
  for (std::int64_t id : ids) {
    const Sample& s = ds.samples[sample_index(ds, id)];
    const Decomposition dec = decompose_sample(model, s.x);
    const std::string stem = "sample_" + std::to_string(id);
    json sidecar{{"sample", id},
                 {"sigma", dec.sigma},
                 {"loss",
                  {{"total", dec.loss_total},
                   {"recon", dec.loss_recon},
                   {"sparsity", dec.loss_sparsity},
                   {"orthogonality", dec.loss_orthogonality}}}};

    auto emit = [&](const Vector& values, const std::string& name) {
      const Rendered r = render_gray(values);
      std::string file;
      if (ds.image_shape) {
        file = stem + "_" + name + ".pgm";
        write_pgm(fs::path(rc.out_dir) / file, to_gray_image(r, *ds.image_shape));
      }
      return render_info(r, file);
    };
    json render;
    render["original"] = emit(inverse_standardize(ds.stats, s.x), "original");
    json comps = json::array();
    for (std::size_t i = 0; i < model.n_branches(); ++i) {
      Vector c = dec.components.column(i);
      // Component images are sigma_i x̂_i in data units, without the mean.
      for (std::size_t p = 0; p < c.size(); ++p) c[p] *= dec.sigma[i] * ds.stats.scale[p];
      comps.push_back(emit(c, "component_" + std::to_string(i + 1)));
    }
    render["components"] = std::move(comps);
    {
      const Rendered r = render_synthesis(ds, dec.components, dec.sigma);
      std::string file;
      if (ds.image_shape) {
        file = stem + "_sum.pgm";
        write_pgm(fs::path(rc.out_dir) / file, to_gray_image(r, *ds.image_shape));
      }
      render["sum"] = render_info(r, file);
    }
    sidecar["render"] = std::move(render);
    if (!ds.image_shape) {
      json vectors = json::array();
      for (std::size_t i = 0; i < model.n_branches(); ++i) vectors.push_back(dec.components.column(i));
      sidecar["components"] = std::move(vectors);
      sidecar["reconstruction"] = dec.reconstruction;
    }
    write_text_file(fs::path(rc.out_dir) / (stem + ".json"), sidecar.dump(1) + "\n");
    out << "sample " << id << ": sigma";
    for (double v : dec.sigma) out << ' ' << v;
    out << '\n';
  }
  return kExitOk;
}

int cmd_synth(const RunConfig& rc, std::ostream& out) {
  require_path(rc.model, "--model");
  require_path(rc.data, "--data");
  require_path(rc.out, "--out");
  const std::string sidecar_path = fs::path(rc.out).replace_extension(".json").string();
  check_distinct_paths({{"--model", &rc.model},
                        {"--data", &rc.data},
                        {"--out", &rc.out},
                        {"--out sidecar", &sidecar_path}});
  const DecomposerModel model = load_model(rc.model);
  const Dataset ds = load_dataset(rc.data);
  check_dims(model, ds);
  if (!ds.image_shape) throw UsageError("synth writes an image; the dataset has no image shape");

  std::int64_t id = rc.id;
  // The overrides file may name the sample; decompose that one.
  if (!rc.overrides_file.empty()) {
    const json j = json::parse(read_text_file(rc.overrides_file), nullptr, false);
    if (j.is_object() && j.contains("sample")) id = j["sample"].get<std::int64_t>();
  }
  const Sample& s = ds.samples[sample_index(ds, id)];
  const Decomposition dec = decompose_sample(model, s.x);
  const SigmaVector sigma = resolve_overrides(rc, dec.sigma, id);

  const Rendered r = render_synthesis(ds, dec.components, sigma);
  write_pgm(rc.out, to_gray_image(r, *ds.image_shape));
  json sidecar{{"sample", id},
               {"sigma", sigma},
               {"estimated_sigma", dec.sigma},
               {"render", {{"synth", render_info(r, fs::path(rc.out).filename().string())}}}};
  write_text_file(fs::path(rc.out).replace_extension(".json"), sidecar.dump(1) + "\n");
  out << "wrote " << rc.out << '\n';
  return kExitOk;
}

int cmd_eval_svd(const RunConfig& rc, std::ostream& out) {
  require_path(rc.model, "--model");
  require_path(rc.data, "--data");
  const DecomposerModel model = load_model(rc.model);
  const Dataset ds = load_dataset(rc.data);
  check_dims(model, ds);
  for (const auto& b : model.branches)
    if (!is_rank1(b)) throw UsageError("eval-svd needs a rank-1 model");

  const Matrix a = data_matrix(ds);
  const std::size_t rank = std::min({model.n_branches(), a.rows, a.cols});
  const SvdOracleResult oracle = svd_deflation(a, rank);
  const AlignmentReport report = compare_branches_to_svd(model, oracle);

  out << std::fixed << std::setprecision(6);
  out << "singular values:";
  for (const auto& t : oracle.triplets) out << ' ' << t.s;
  out << '\n';
  if (!oracle.note.empty()) out << "note: " << oracle.note << '\n';
  for (const auto& m : report.matches)
    out << "branch " << m.branch + 1 << " -> oracle " << m.oracle_index + 1 << " |cos| "
        << m.abs_cos << '\n';
  out << "principal angles (deg):";
  for (double a_deg : report.principal_angles_deg) out << ' ' << a_deg;
  out << '\n';
  const bool all_matched = report.matches.size() == model.n_branches() &&
                           oracle.triplets.size() >= model.n_branches();
  const bool pass = all_matched && report.min_abs_cos() >= rc.min_cos;
  out << (pass ? "PASS" : "FAIL") << " min |cos| " << report.min_abs_cos() << " threshold "
      << rc.min_cos << '\n';
  return pass ? kExitOk : kExitBelowThreshold;
}

int cmd_serve(const RunConfig& rc, std::ostream& out) {
  require_path(rc.model, "--model");
  require_path(rc.data, "--data");
  DecomposerModel model = load_model(rc.model);
  Dataset ds = load_dataset(rc.data);
  check_dims(model, ds);
  StudioServer server(std::move(model), std::move(ds), rc.static_dir);
  if (!server.bind(rc.host, rc.port))
    throw UsageError("cannot bind " + rc.host + ":" + std::to_string(rc.port) + " (port busy?)");
  out << "listening on http://" << rc.host << ":" << rc.port << std::endl;
  server.listen();
  return kExitOk;
}

int run_command(const std::function<int()>& fn, std::ostream& err) {
  auto report = [&](const char* category, const std::string& msg) {
    std::string line = msg;
    std::replace(line.begin(), line.end(), '\n', ' ');
    err << "error: " << category << ": " << line << std::endl;
  };
  try {
    return fn();
  } catch (const DivergenceError& e) {
    report("divergence", e.what());
    return kExitDiverged;
  } catch (const NumericError& e) {
    report("numeric", e.what());
    return kExitDiverged;
  } catch (const ParseError& e) {
    report("parse", e.what());
  } catch (const LoadError& e) {
    report("load", e.what());
  } catch (const ShapeError& e) {
    report("shape", e.what());
  } catch (const Error& e) {
    report("usage", e.what());
  } catch (const std::exception& e) {
    report("io", e.what());
  }
  return kExitUsage;
}

}  // namespace decompnet::app
