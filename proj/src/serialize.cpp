#include "gcn/serialize.hpp"

#include <algorithm>
#include <sstream>

#include "gcn/io.hpp"

namespace gcn {

namespace {
constexpr int kCheckpointVersion = 1;
}

std::string prefix_key(PrefixView prefix) {
  std::ostringstream out;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i) out << '-';
    out << prefix[i];
  }
  return out.str();
}

Prefix parse_prefix_key(const std::string& key) {
  Prefix out;
  if (key.empty()) return out;
  std::istringstream in(key);
  std::string part;
  while (std::getline(in, part, '-')) {
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw Error("malformed prefix key: " + key);
    }
  }
  return out;
}

Json space_to_json(const SpaceConfig& space) {
  return Json{{"vocab_size", space.vocab.size},
              {"max_len", space.max_len},
              {"num_contexts", space.num_contexts}};
}

SpaceConfig space_from_json(const Json& j) {
  SpaceConfig space;
  space.vocab.size = j.at("vocab_size").get<int>();
  space.max_len = j.at("max_len").get<int>();
  space.num_contexts = j.at("num_contexts").get<int>();
  space.sequence_count();
  return space;
}

namespace {

const char* target_kind_name(TargetKindCfg k) {
  switch (k) {
    case TargetKindCfg::uniform: return "uniform";
    case TargetKindCfg::dirichlet: return "dirichlet";
    case TargetKindCfg::table: return "table";
  }
  throw Error("unknown target kind");
}

TargetKindCfg target_kind_from(const std::string& s) {
  if (s == "uniform") return TargetKindCfg::uniform;
  if (s == "dirichlet") return TargetKindCfg::dirichlet;
  if (s == "table") return TargetKindCfg::table;
  throw Error("unknown target kind: " + s);
}

}  // namespace

Json target_to_json(const TargetSpec& target) {
  Json j{{"kind", target_kind_name(target.kind)},
         {"alpha", target.alpha},
         {"seed", target.seed}};
  if (target.kind == TargetKindCfg::table) j["values"] = target.values;
  return j;
}

TargetSpec target_from_json(const Json& j) {
  TargetSpec t;
  t.kind = target_kind_from(j.at("kind").get<std::string>());
  t.alpha = j.value("alpha", 1.0);
  t.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("values")) t.values = j.at("values").get<std::vector<double>>();
  if (t.kind == TargetKindCfg::table && t.values.empty())
    throw Error("table target without values");
  return t;
}

namespace {

// Context tables keyed by stringified ids with prefix keys sorted, so equal
// models serialize to identical bytes.
template <typename Table, typename EntryFn>
Json table_to_json(int contexts, const Table& stored_of, EntryFn&& entry) {
  Json out = Json::object();
  for (int ctx = 0; ctx < contexts; ++ctx) {
    const auto& table = stored_of(ctx);
    std::vector<std::string> keys;
    keys.reserve(table.size());
    for (const auto& [prefix, value] : table) keys.push_back(prefix_key(prefix));
    std::sort(keys.begin(), keys.end());
    Json ctx_obj = Json::object();
    for (const std::string& key : keys) {
      const Prefix p = parse_prefix_key(key);
      ctx_obj[key] = entry(ctx, p);
    }
    out[std::to_string(ctx)] = std::move(ctx_obj);
  }
  return out;
}

}  // namespace

Json generator_to_json(const TabularGenerator& gen) {
  return table_to_json(
      gen.space().context_count(), [&](int ctx) -> const auto& { return gen.stored(ctx); },
      [&](int ctx, const Prefix& p) { return Json(gen.logits(ctx, p)); });
}

TabularGenerator generator_from_json(const SpaceConfig& space, const Json& j) {
  TabularGenerator gen(space);
  for (const auto& [ctx_key, table] : j.items()) {
    const int ctx = std::stoi(ctx_key);
    for (const auto& [key, logits] : table.items())
      gen.set_logits(ctx, parse_prefix_key(key), logits.get<std::vector<double>>());
  }
  return gen;
}

Json discriminator_to_json(const PrefixDiscriminator& disc) {
  return table_to_json(
      disc.space().context_count(),
      [&](int ctx) -> const auto& { return disc.stored(ctx); },
      [&](int ctx, const Prefix& p) { return Json(disc.logit(ctx, p)); });
}

PrefixDiscriminator discriminator_from_json(const SpaceConfig& space, const Json& j) {
  PrefixDiscriminator disc(space);
  for (const auto& [ctx_key, table] : j.items()) {
    const int ctx = std::stoi(ctx_key);
    for (const auto& [key, logit] : table.items())
      disc.set_logit(ctx, parse_prefix_key(key), logit.get<double>());
  }
  return disc;
}

Json checkpoint_to_json(const Checkpoint& ckpt) {
  return Json{{"format", "gcnlab-checkpoint"},
              {"version", kCheckpointVersion},
              {"space", space_to_json(ckpt.space)},
              {"target", target_to_json(ckpt.target)},
              {"generator", generator_to_json(ckpt.gen)},
              {"discriminator", discriminator_to_json(ckpt.disc)}};
}

Checkpoint checkpoint_from_json(const Json& j) {
  if (j.value("format", "") != "gcnlab-checkpoint")
    throw Error("not a gcnlab checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw Error("unsupported checkpoint version");
  const SpaceConfig space = space_from_json(j.at("space"));
  return Checkpoint{space, target_from_json(j.at("target")),
                    generator_from_json(space, j.at("generator")),
                    discriminator_from_json(space, j.at("discriminator"))};
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  atomic_write_file(path, checkpoint_to_json(ckpt).dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed checkpoint " + path + ": " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed checkpoint " + path + ": " + e.what());
  }
}

}  // namespace gcn
