#include <iostream>
#include <string>
#include <string_view>

#include "CLI11.hpp"
#include "decompnet/app/commands.hpp"
#include "decompnet/serialize.hpp"

using namespace decompnet::app;

namespace {

// --preset and --config are applied before flag parsing so that explicit
// flags win: defaults < preset < config file < flags.
std::string prescan(int argc, char** argv, std::string_view name) {
  std::string value;
  const std::string eq = std::string(name) + "=";
  for (int k = 1; k < argc; ++k) {
    std::string_view arg = argv[k];
    if (arg == name && k + 1 < argc) value = argv[k + 1];
    else if (arg.substr(0, eq.size()) == eq) value = std::string(arg.substr(eq.size()));
  }
  return value;
}

void model_options(CLI::App* cmd, RunConfig& rc) {
  auto* g = cmd->add_option_group("model");
  g->add_option("--branches", rc.branches, "number of branches N");
  g->add_option("--kind", rc.kind, "rank1_tied | rank1_untied | linear_ae | mlp_ae");
  g->add_option("--code-width", rc.code_width, "code width for autoencoder branches");
  g->add_option("--layers", rc.layers, "comma-separated encoder widths for mlp_ae");
  g->add_option("--sweeps", rc.sweeps, "residual sweeps K");
  g->add_option("--schedule", rc.schedule, "gauss_seidel | jacobi");
  g->add_option("--damping", rc.damping, "damping in (0,1]");
  g->add_option("--lambda-s", rc.lambda_s, "code sparsity weight");
  g->add_option("--lambda-perp", rc.lambda_perp, "component orthogonality weight");
  g->add_option("--ridge", rc.ridge, "ridge term for the sigma solve");
  g->add_option("--sigma-mode", rc.sigma_mode, "ridge | nnls | fixed_ones");
  g->add_flag("--clamp-sigma,!--no-clamp-sigma", rc.clamp_sigma, "clamp ridge sigma at 0");
  g->add_flag("--normalize,!--no-normalize", rc.normalize, "unit-norm rank-1 vectors after each step");
  g->add_option("--grad-mode", rc.grad_mode, "full_unroll | detach_cross");
  g->add_option("--init-spread", rc.init_spread, "per-branch init scale increment");
}

void training_options(CLI::App* cmd, RunConfig& rc) {
  auto* g = cmd->add_option_group("training");
  g->add_option("--epochs", rc.epochs);
  g->add_option("--batch-size", rc.batch_size);
  g->add_option("--tol", rc.tol, "relative loss change for early stopping (0 disables)");
  g->add_option("--lr", rc.lr, "Adam learning rate");
  g->add_option("--k-start", rc.k_start, "sweeps before --k-raise-after epochs (0 disables)");
  g->add_option("--k-raise-after", rc.k_raise_after);
  g->add_option("--fixed-sigma-epochs", rc.fixed_sigma_epochs, "leading epochs with sigma held at 1");
  g->add_flag("--masks,!--no-masks", rc.masks, "attach random Gaussian input masks");
  g->add_option("--mask-area", rc.mask_area, "area fraction of the 0.5-level disc");
  g->add_option("--report", rc.report, "per-epoch JSON lines report");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  const int early = run_command(
      [&] {
        if (auto p = prescan(argc, argv, "--preset"); !p.empty()) apply_preset(rc, p);
        if (auto c = prescan(argc, argv, "--config"); !c.empty())
          apply_config_text(rc, decompnet::read_text_file(c));
        return 0;
      },
      std::cerr);
  if (early != 0) return early;

  CLI::App app{"Decomposer networks: training, decomposition and sigma editing"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, preset_name;
  app.add_option("--config", config_path, "JSON file of run settings");
  app.add_option("--preset", preset_name, "exp1 | exp2 | exp3");
  app.add_option("--seed", rc.seed);
  app.add_option("--out", rc.out, "output file");
  app.add_option("--data", rc.data, "dataset file");
  app.add_option("--model", rc.model, "model file");
  app.add_flag("--verbose,-v", rc.verbose);

  auto* gen = app.add_subcommand("gen-data", "write a dataset file");
  gen->add_option("--synth", rc.synth, "d=..,n=..,rank=..,noise=..,seed=..");
  gen->add_option("--synth-halves", rc.synth_halves, "h=..,w=..,n=..,noise=..,seed=..");
  gen->add_option("--pgm-dir", rc.pgm_dir, "directory searched recursively for .pgm files");
  gen->add_option("--downsample", rc.downsample, "block-average factor");

  auto* tr = app.add_subcommand("train", "train a model");
  model_options(tr, rc);
  training_options(tr, rc);

  auto* dec = app.add_subcommand("decompose", "write component images and sigma");
  dec->add_option("--ids", rc.ids, "sample ids")->delimiter(',');
  dec->add_option("--id", rc.id, "single sample id");
  dec->add_option("--out-dir", rc.out_dir)->required();

  auto* syn = app.add_subcommand("synth", "re-synthesize a sample with edited sigma");
  syn->add_option("--id", rc.id, "sample id");
  syn->add_option("--sigma", rc.sigma, "comma-separated sigma for every branch");
  syn->add_option("--set", rc.set_sigma, "index=value, 0-based; repeatable");
  syn->add_option("--overrides-file", rc.overrides_file, "JSON {sample, sigma}");

  auto* ev = app.add_subcommand("eval-svd", "compare rank-1 branches with the SVD");
  ev->add_option("--min-cos", rc.min_cos, "pass threshold on every |cos|");

  auto* srv = app.add_subcommand("serve", "HTTP API for sigma editing");
  srv->add_option("--host", rc.host);
  srv->add_option("--port", rc.port);
  srv->add_option("--static-dir", rc.static_dir, "directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << std::endl;
    return kExitUsage;
  }

  return run_command(
      [&] {
        if (*gen) return cmd_gen_data(rc, std::cout);
        if (*tr) return cmd_train(rc, std::cout);
        if (*dec) return cmd_decompose(rc, std::cout);
        if (*syn) return cmd_synth(rc, std::cout);
        if (*ev) return cmd_eval_svd(rc, std::cout);
        return cmd_serve(rc, std::cout);
      },
      std::cerr);
}
