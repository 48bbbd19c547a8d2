#include "gcn/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>

#include "gcn/config.hpp"
#include "gcn/io.hpp"
#include "gcn/serialize.hpp"

namespace gcn::cli {

namespace {

namespace fs = std::filesystem;

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory: " + dir);
}

int report_error(const char* cmd, const std::exception& e) {
  std::cerr << "gcnlab " << cmd << ": " << e.what() << "\n";
  return kExitError;
}

std::vector<Sequence> draw_from(const ExactDist& dist, int n, Rng& rng) {
  std::vector<double> cum;
  cum.reserve(dist.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist.prob(i);
    cum.push_back(acc);
  }
  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01() * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t idx =
        std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    out.push_back(dist.space()->at(idx));
  }
  return out;
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  const std::string started = iso_timestamp();
  try {
    TrainConfig cfg = train_config_from(load_config_file(args.config_path));
    if (args.seed) cfg.seed = *args.seed;
    ensure_out_dir(args.out_dir);

    RunResult run = train(cfg);

    const fs::path out(args.out_dir);
    const std::string iters_path = (out / "iters.csv").string();
    const std::string ckpt_path = (out / "checkpoint.json").string();
    const std::string manifest_path = (out / "manifest.json").string();

    atomic_write_file(iters_path, iters_csv(run.records));
    save_checkpoint(ckpt_path, Checkpoint{cfg.space, cfg.target, run.gen, run.disc});

    Json manifest;
    manifest["artifact"] = "gcnlab";
    manifest["version"] = kVersion;
    manifest["status"] = run.status == RunStatus::completed ? "completed" : "diverged";
    manifest["seed"] = cfg.seed;
    manifest["started_at"] = started;
    manifest["finished_at"] = iso_timestamp();
    manifest["initial_kl"] = run.initial_kl;
    manifest["initial_tv"] = run.initial_tv;
    manifest["final_kl"] = run.records.empty() ? run.initial_kl : run.records.back().kl_exact;
    manifest["iterations_run"] = run.records.size();
    manifest["skipped_updates"] = run.skipped_updates;
    manifest["outputs"] = Json{{"iters_csv", iters_path}, {"checkpoint", ckpt_path}};
    Json cfg_json = Json::object();
    for (const auto& [k, v] : train_config_to_map(cfg)) cfg_json[k] = v;
    manifest["config"] = std::move(cfg_json);
    atomic_write_file(manifest_path, manifest.dump(2) + "\n");

    return run.status == RunStatus::completed ? kExitOk : kExitDiverged;
  } catch (const std::exception& e) {
    return report_error("train", e);
  }
}

int cmd_exact(const ExactArgs& args) {
  try {
    const ExactRunConfig cfg = exact_config_from(load_config_file(args.config_path));
    ensure_out_dir(args.out_dir);
    SpacePtr space = make_space(cfg.space);
    const ExactDist p_d = cfg.p_d.build(space, 0);
    const ExactDist p_0 = cfg.p_0.build(space, 0);

    const ExactDynamics dyn = run_exact_dynamics(p_d, p_0, cfg.max_steps, cfg.stop_kl);

    int violations = 0;
    for (std::size_t i = 0; i < dyn.reports.size(); ++i) {
      const StepReport& r = dyn.reports[i];
      if (r.t > 1 && !(r.z < 1.0)) {
        std::cerr << "gcnlab exact: z_" << r.t << " = " << r.z << " is not < 1\n";
        ++violations;
      }
      if (dyn.lemma_a1_deviation[i] > 1e-9) {
        std::cerr << "gcnlab exact: recursion equivalence off by "
                  << dyn.lemma_a1_deviation[i] << " at t = " << r.t << "\n";
        ++violations;
      }
      if (dyn.spread_identity_gap[i] > 1e-9) {
        std::cerr << "gcnlab exact: spread identity off by "
                  << dyn.spread_identity_gap[i] << " at t = " << r.t << "\n";
        ++violations;
      }
    }

    atomic_write_file((fs::path(args.out_dir) / "exact_dynamics.csv").string(),
                      exact_dynamics_csv(dyn));
    if (violations > 0) {
      std::cerr << "gcnlab exact: " << violations << " invariant violation(s)\n";
      return kExitError;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error("exact", e);
  }
}

int cmd_curves(const CurvesArgs& args) {
  try {
    const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    ensure_out_dir(args.out_dir);
    SpacePtr space = make_space(ckpt.space);
    const ExactDist p_d = ckpt.target.build(space, 0);

    std::vector<double> temps = args.temperatures;
    if (temps.empty()) temps = {0.5, 0.7, 1.0, 1.3, 1.6};

    Rng ref_rng(mix_seed(args.seed, 0x4ef5));
    const std::vector<Sequence> references =
        draw_from(p_d, args.n_references, ref_rng);

    Rng curve_rng(mix_seed(args.seed, 0xc04fe));
    const std::vector<CurvePoint> points = temperature_curve(
        ckpt.gen, 0, references, temps, args.n_samples, BleuSpec{}, curve_rng);

    atomic_write_file((fs::path(args.out_dir) / "curves.csv").string(),
                      curves_csv(points));
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error("curves", e);
  }
}

int cmd_dump_mcts(const DumpMctsArgs& args) {
  try {
    const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    MctsConfig cfg;
    cfg.rounds = args.rounds;
    cfg.c_puct = args.c_puct;
    cfg.sigma = args.sigma;
    cfg.mode = ckpt.space.num_contexts == 0 ? MctsMode::unconditional
                                            : MctsMode::conditional;
    MctsSampler sampler(ckpt.gen, ckpt.disc, args.context, cfg,
                        mix_seed(args.seed, 0xdec0de));
    Rng rng(mix_seed(args.seed, 0xdec0de));
    std::vector<MctsStepTrace> trace;
    const MctsDecodeOutput out = sampler.decode(rng, &trace);

    Json doc;
    doc["artifact"] = "gcnlab";
    doc["version"] = kVersion;
    doc["context"] = args.context;
    doc["config"] = Json{{"rounds", cfg.rounds},
                         {"c_puct", cfg.c_puct},
                         {"sigma", cfg.sigma},
                         {"mode", cfg.mode == MctsMode::conditional ? "conditional"
                                                                    : "unconditional"},
                         {"seed", args.seed}};
    doc["decoded"] = out.y.tokens;
    Json steps = Json::array();
    for (const MctsStepTrace& s : trace) {
      Json children = Json::array();
      for (const MctsChildStat& c : s.children)
        children.push_back(Json{{"token", c.token},
                                {"visits", c.visits},
                                {"value", c.value},
                                {"prior", c.prior},
                                {"evaluated", c.evaluated}});
      steps.push_back(Json{{"root_prefix", s.root_prefix},
                           {"root_visits", s.root_visits},
                           {"root_value", s.root_value},
                           {"children", std::move(children)},
                           {"visit_dist", s.visit_dist},
                           {"chosen", s.chosen}});
    }
    doc["steps"] = std::move(steps);
    atomic_write_file(args.out_path, doc.dump(2) + "\n");
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error("dump-mcts", e);
  }
}

}  // namespace gcn::cli
