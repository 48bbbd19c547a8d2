#pragma once

#include <map>
#include <string>

#include "gcn/trainer.hpp"

namespace gcn {

/// Flat text config: one dotted.key=value per line, '#' comments, blank
/// lines ignored. Unknown keys are hard errors so typos never fall back to
/// silent defaults.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::string& path);

/// Builds a TrainConfig, rejecting unknown keys. space.vocab_size and
/// space.max_len are required; everything else has documented defaults.
TrainConfig train_config_from(const ConfigMap& map);

/// Canonical snapshot containing every key; round-trips through
/// train_config_from to an identical config.
ConfigMap train_config_to_map(const TrainConfig& cfg);

struct ExactRunConfig {
  SpaceConfig space;
  TargetSpec p_d;
  TargetSpec p_0{TargetKindCfg::uniform, 1.0, 0, {}};
  int max_steps = 50;
  double stop_kl = 1e-12;
};

ExactRunConfig exact_config_from(const ConfigMap& map);

}  // namespace gcn
