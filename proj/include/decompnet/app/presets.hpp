#pragma once

#include <string>

#include "decompnet/model.hpp"
#include "decompnet/trainer.hpp"

namespace decompnet::app {

struct Preset {
  ModelConfig model;
  TrainOptions train;
  bool masks = false;
  double mask_area_fraction = 0.5;
};

/// exp1: three rank-1 tied branches, sigma held at 1 then ridge, no penalties.
/// exp2: dense tanh autoencoder branches, no masks.
/// exp3: exp2 branches behind fixed Gaussian masks.
Preset preset(const std::string& name);

}  // namespace decompnet::app
