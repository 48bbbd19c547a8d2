#include "gcn/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "gcn/io.hpp"

namespace gcn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class Reader {
 public:
  explicit Reader(const ConfigMap& map) : map_(map) {}

  bool has(const std::string& key) {
    seen_.insert(key);
    return map_.count(key) > 0;
  }

  std::string get(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    auto it = map_.find(key);
    return it == map_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) {
    seen_.insert(key);
    auto it = map_.find(key);
    if (it == map_.end()) throw ConfigError("missing required config key: " + key);
    return it->second;
  }

  int get_int(const std::string& key, int fallback) {
    return has(key) ? to_int(key, map_.at(key)) : fallback;
  }
  double get_double(const std::string& key, double fallback) {
    return has(key) ? to_double(key, map_.at(key)) : fallback;
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    return has(key) ? to_u64(key, map_.at(key)) : fallback;
  }

  std::vector<double> get_doubles(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    std::istringstream in(map_.at(key));
    std::string part;
    while (std::getline(in, part, ',')) out.push_back(to_double(key, trim(part)));
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : map_)
      if (!seen_.count(key)) throw ConfigError("unknown config key: " + key);
  }

  static int to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const int x = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " needs an integer, got '" + v + "'");
    }
  }
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " needs a number, got '" + v + "'");
    }
  }
  static std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const std::uint64_t x = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " needs an unsigned integer, got '" + v + "'");
    }
  }

 private:
  const ConfigMap& map_;
  std::set<std::string> seen_;
};

TargetSpec read_target(Reader& r, const std::string& section,
                       const std::string& default_kind = "dirichlet") {
  TargetSpec t;
  const std::string kind = r.get(section + ".kind", default_kind);
  if (kind == "uniform") {
    t.kind = TargetKindCfg::uniform;
  } else if (kind == "dirichlet") {
    t.kind = TargetKindCfg::dirichlet;
  } else if (kind == "table") {
    t.kind = TargetKindCfg::table;
  } else {
    throw ConfigError("config key " + section + ".kind has unknown value '" + kind + "'");
  }
  t.alpha = r.get_double(section + ".alpha", 1.0);
  t.seed = r.get_u64(section + ".seed", 0);
  t.values = r.get_doubles(section + ".values");
  if (t.kind == TargetKindCfg::table && t.values.empty())
    throw ConfigError(section + ".kind=table requires " + section + ".values");
  return t;
}

SpaceConfig read_space(Reader& r) {
  SpaceConfig space;
  space.vocab.size = Reader::to_int("space.vocab_size", r.require("space.vocab_size"));
  space.max_len = Reader::to_int("space.max_len", r.require("space.max_len"));
  space.num_contexts = r.get_int("space.num_contexts", 0);
  return space;
}

std::string doubles_to_string(const std::vector<double>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ',';
    out << format_double(xs[i]);
  }
  return out.str();
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
    if (map.count(key)) throw ConfigError("duplicate config key: " + key);
    map[key] = value;
  }
  return map;
}

ConfigMap load_config_file(const std::string& path) {
  return parse_config_text(read_file(path));
}

TrainConfig train_config_from(const ConfigMap& map) {
  Reader r(map);
  TrainConfig cfg;
  cfg.space = read_space(r);
  cfg.target = read_target(r, "target");

  const std::string variant = r.get("trainer.variant", "gcn");
  if (variant == "gcn") cfg.variant = Variant::gcn;
  else if (variant == "gan") cfg.variant = Variant::gan;
  else if (variant == "gan_scheduler") cfg.variant = Variant::gan_scheduler;
  else if (variant == "maligan") cfg.variant = Variant::maligan;
  else if (variant == "exp_d") cfg.variant = Variant::exp_d;
  else throw ConfigError("config key trainer.variant has unknown value '" + variant + "'");

  const std::string qhat = r.get("trainer.qhat", "p");
  if (qhat == "p") cfg.qhat = QhatKind::p;
  else if (qhat == "nucleus") cfg.qhat = QhatKind::nucleus;
  else if (qhat == "mcts") cfg.qhat = QhatKind::mcts;
  else throw ConfigError("config key trainer.qhat has unknown value '" + qhat + "'");

  cfg.epsilon = r.get_double("trainer.epsilon", 0.1);
  cfg.sigma = r.get_double("trainer.sigma", 0.1);
  cfg.batch_size = r.get_int("trainer.batch_size", 512);
  cfg.iters = r.get_int("trainer.iters", 100);
  cfg.disc_steps_per_iter = r.get_int("trainer.disc_steps_per_iter", 1);
  cfg.lr_gen = r.get_double("trainer.lr_gen", 0.5);
  cfg.lr_disc = r.get_double("trainer.lr_disc", 0.05);
  cfg.seed = r.get_u64("trainer.seed", 0);

  const std::string sched = r.get("trainer.scheduler", "none");
  if (sched == "none") cfg.scheduler.kind = SchedulerKind::none;
  else if (sched == "linear") cfg.scheduler.kind = SchedulerKind::linear;
  else throw ConfigError("config key trainer.scheduler has unknown value '" + sched + "'");
  cfg.scheduler.start = r.get_double("trainer.scheduler_start", 1.0);
  cfg.scheduler.end = r.get_double("trainer.scheduler_end", 0.0);

  const std::string init = r.get("trainer.gen_init", "zeros");
  if (init == "zeros") cfg.gen_init = GenInit::zeros;
  else if (init == "target") cfg.gen_init = GenInit::target;
  else throw ConfigError("config key trainer.gen_init has unknown value '" + init + "'");

  cfg.weight_disc_scale = r.get_double("trainer.weight_disc_scale", 1.0);
  cfg.maligan_clip = r.get_double("trainer.maligan_clip", 10.0);
  cfg.divergence_factor = r.get_double("trainer.divergence_factor", 10.0);

  cfg.mcts.rounds = r.get_int("mcts.rounds", 50);
  cfg.mcts.c_puct = r.get_double("mcts.c_puct", 1.0);
  cfg.mcts.sigma = r.get_double("mcts.sigma", 0.1);

  r.finish();
  cfg.validate();
  return cfg;
}

ConfigMap train_config_to_map(const TrainConfig& cfg) {
  ConfigMap map;
  map["space.vocab_size"] = std::to_string(cfg.space.vocab.size);
  map["space.max_len"] = std::to_string(cfg.space.max_len);
  map["space.num_contexts"] = std::to_string(cfg.space.num_contexts);
  switch (cfg.target.kind) {
    case TargetKindCfg::uniform: map["target.kind"] = "uniform"; break;
    case TargetKindCfg::dirichlet: map["target.kind"] = "dirichlet"; break;
    case TargetKindCfg::table: map["target.kind"] = "table"; break;
  }
  map["target.alpha"] = format_double(cfg.target.alpha);
  map["target.seed"] = std::to_string(cfg.target.seed);
  if (!cfg.target.values.empty()) map["target.values"] = doubles_to_string(cfg.target.values);
  switch (cfg.variant) {
    case Variant::gcn: map["trainer.variant"] = "gcn"; break;
    case Variant::gan: map["trainer.variant"] = "gan"; break;
    case Variant::gan_scheduler: map["trainer.variant"] = "gan_scheduler"; break;
    case Variant::maligan: map["trainer.variant"] = "maligan"; break;
    case Variant::exp_d: map["trainer.variant"] = "exp_d"; break;
  }
  switch (cfg.qhat) {
    case QhatKind::p: map["trainer.qhat"] = "p"; break;
    case QhatKind::nucleus: map["trainer.qhat"] = "nucleus"; break;
    case QhatKind::mcts: map["trainer.qhat"] = "mcts"; break;
  }
  map["trainer.epsilon"] = format_double(cfg.epsilon);
  map["trainer.sigma"] = format_double(cfg.sigma);
  map["trainer.batch_size"] = std::to_string(cfg.batch_size);
  map["trainer.iters"] = std::to_string(cfg.iters);
  map["trainer.disc_steps_per_iter"] = std::to_string(cfg.disc_steps_per_iter);
  map["trainer.lr_gen"] = format_double(cfg.lr_gen);
  map["trainer.lr_disc"] = format_double(cfg.lr_disc);
  map["trainer.seed"] = std::to_string(cfg.seed);
  map["trainer.scheduler"] =
      cfg.scheduler.kind == SchedulerKind::none ? "none" : "linear";
  map["trainer.scheduler_start"] = format_double(cfg.scheduler.start);
  map["trainer.scheduler_end"] = format_double(cfg.scheduler.end);
  map["trainer.gen_init"] = cfg.gen_init == GenInit::zeros ? "zeros" : "target";
  map["trainer.weight_disc_scale"] = format_double(cfg.weight_disc_scale);
  map["trainer.maligan_clip"] = format_double(cfg.maligan_clip);
  map["trainer.divergence_factor"] = format_double(cfg.divergence_factor);
  map["mcts.rounds"] = std::to_string(cfg.mcts.rounds);
  map["mcts.c_puct"] = format_double(cfg.mcts.c_puct);
  map["mcts.sigma"] = format_double(cfg.mcts.sigma);
  return map;
}

ExactRunConfig exact_config_from(const ConfigMap& map) {
  Reader r(map);
  ExactRunConfig cfg;
  cfg.space = read_space(r);
  cfg.p_d = read_target(r, "target");
  cfg.p_0 = read_target(r, "p0", "uniform");
  cfg.max_steps = r.get_int("exact.max_steps", 50);
  cfg.stop_kl = r.get_double("exact.stop_kl", 1e-12);
  r.finish();
  if (cfg.max_steps < 1) throw ConfigError("exact.max_steps must be >= 1");
  if (cfg.space.num_contexts != 0)
    throw ConfigError("the exact oracle command runs on unconditional spaces "
                      "(space.num_contexts = 0)");
  return cfg;
}

}  // namespace gcn
