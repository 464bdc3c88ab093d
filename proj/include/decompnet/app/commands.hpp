#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "decompnet/model.hpp"
#include "decompnet/trainer.hpp"

namespace decompnet::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitBelowThreshold = 1,
  kExitUsage = 2,
  kExitDiverged = 3,
};

/// Everything a CLI verb can be configured with. Precedence, lowest first:
/// built-in defaults, --preset, --config file, explicit flags.
struct RunConfig {
  std::string preset;

  // Model configuration. Enum-valued fields are kept as their string names.
  int branches = 1;
  std::string kind = "rank1_tied";
  std::size_t code_width = 1;
  std::string layers;  // comma-separated MlpAE widths
  int sweeps = 1;
  std::string schedule = "gauss_seidel";
  double damping = 1.0;
  double lambda_s = 0.0;
  double lambda_perp = 0.0;
  double ridge = 1e-8;
  std::string sigma_mode = "ridge";
  bool clamp_sigma = true;
  bool normalize = false;
  std::string grad_mode = "full_unroll";
  std::uint64_t seed = 0;
  double init_spread = 0.0;

  // Training.
  int epochs = 100;
  std::size_t batch_size = 32;
  double tol = 0.0;
  double lr = 1e-3;
  int k_start = 0;        // > 0 enables the sweep schedule
  int k_raise_after = 0;
  int fixed_sigma_epochs = 0;
  bool masks = false;
  double mask_area = 0.5;

  // Data sources and paths.
  std::string data;
  std::string synth;         // d=..,n=..,rank=..,noise=..,seed=..
  std::string synth_halves;  // h=..,w=..,n=..,noise=..,seed=..
  std::string pgm_dir;
  std::size_t downsample = 1;
  std::string model;
  std::string out;
  std::string report;
  std::string out_dir;

  // decompose / synth / eval-svd / serve
  std::vector<std::int64_t> ids;
  std::int64_t id = 0;
  std::string sigma;                     // comma-separated full override
  std::vector<std::string> set_sigma;    // sparse "i=value", 0-based
  std::string overrides_file;
  double min_cos = 0.99;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  bool verbose = false;
};

void apply_preset(RunConfig& rc, const std::string& name);
/// Applies a JSON object of RunConfig fields; unknown keys are rejected.
void apply_config_text(RunConfig& rc, const std::string& json_text);

ModelConfig model_config(const RunConfig& rc);
TrainOptions train_options(const RunConfig& rc);

int cmd_gen_data(const RunConfig& rc, std::ostream& out);
int cmd_train(const RunConfig& rc, std::ostream& out);
int cmd_decompose(const RunConfig& rc, std::ostream& out);
int cmd_synth(const RunConfig& rc, std::ostream& out);
int cmd_eval_svd(const RunConfig& rc, std::ostream& out);
int cmd_serve(const RunConfig& rc, std::ostream& out);

/// Runs a command, mapping exceptions to exit codes and a single
/// "error: <category>: <message>" line on `err`.
int run_command(const std::function<int()>& fn, std::ostream& err);

}  // namespace decompnet::app
