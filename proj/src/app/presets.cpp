#include "decompnet/app/presets.hpp"

#include "decompnet/errors.hpp"

namespace decompnet::app {

Preset preset(const std::string& name) {
  Preset p;
  ModelConfig& c = p.model;
  if (name == "exp1") {
    c.n_branches = 3;
    c.branch.kind = BranchKind::Rank1Tied;
    c.sweeps = 3;
    c.damping = 0.7;
    c.sigma_mode = SigmaMode::RidgeClosedForm;
    c.normalize_components = false;
    p.train.epochs = 300;
    p.train.batch_size = 50;
    p.train.adam.learning_rate = 3e-3;
    // Per-sample sigma only after the branches have settled near the data span.
    p.train.fixed_sigma_epochs = 100;
  } else if (name == "exp2" || name == "exp3") {
    c.n_branches = 5;
    c.branch.kind = BranchKind::MlpAE;
    c.branch.layer_widths = {32, 8};
    c.sweeps = 3;
    c.damping = 0.5;
    c.sigma_mode = SigmaMode::RidgeClosedForm;
    c.lambda_perp = 0.0;
    p.train.epochs = 100;
    p.train.batch_size = 32;
    p.train.adam.learning_rate = 3e-3;
    p.masks = name == "exp3";
  } else {
    throw UsageError("unknown preset '" + name + "' (expected exp1, exp2 or exp3)");
  }
  return p;
}

}  // namespace decompnet::app
