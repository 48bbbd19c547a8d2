#pragma once

#include <string>

#include "gcn/trainer.hpp"

#include "json.hpp"

namespace gcn {

using Json = nlohmann::ordered_json;

/// Dash-joined token ids; the empty prefix serializes as "".
std::string prefix_key(PrefixView prefix);
Prefix parse_prefix_key(const std::string& key);

Json space_to_json(const SpaceConfig& space);
SpaceConfig space_from_json(const Json& j);

Json target_to_json(const TargetSpec& target);
TargetSpec target_from_json(const Json& j);

/// Layout: context id -> prefix key -> logit array (vocab+EOS wide).
Json generator_to_json(const TabularGenerator& gen);
TabularGenerator generator_from_json(const SpaceConfig& space, const Json& j);

/// Layout: context id -> prefix key -> scalar logit.
Json discriminator_to_json(const PrefixDiscriminator& disc);
PrefixDiscriminator discriminator_from_json(const SpaceConfig& space, const Json& j);

struct Checkpoint {
  SpaceConfig space;
  TargetSpec target;
  TabularGenerator gen;
  PrefixDiscriminator disc;
};

Json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gcn
