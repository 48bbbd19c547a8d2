#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gcn::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiverged = 2;

struct TrainArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // overrides trainer.seed
};

/// Writes iters.csv, checkpoint.json and manifest.json under out_dir.
/// Returns 0 when completed, 2 when the run hit the divergence abort,
/// 1 on configuration or IO errors.
int cmd_train(const TrainArgs& args);

struct ExactArgs {
  std::string config_path;
  std::string out_dir;
};

/// Writes exact_dynamics.csv and verifies the recursion invariants inline
/// (z_t < 1 for t > 1, the zhat equivalence, the spread identity); any
/// violation is reported and exits 1.
int cmd_exact(const ExactArgs& args);

struct CurvesArgs {
  std::string checkpoint_path;
  std::string out_dir;
  std::vector<double> temperatures;  // empty = default grid
  int n_samples = 200;
  int n_references = 200;
  std::uint64_t seed = 0;
};

int cmd_curves(const CurvesArgs& args);

struct DumpMctsArgs {
  std::string checkpoint_path;
  int context = 0;
  std::string out_path;
  std::uint64_t seed = 0;
  int rounds = 50;
  double c_puct = 1.0;
  double sigma = 0.1;
};

int cmd_dump_mcts(const DumpMctsArgs& args);

}  // namespace gcn::cli
