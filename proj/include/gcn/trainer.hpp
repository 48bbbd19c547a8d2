#pragma once

#include <cstdint>
#include <vector>

#include "gcn/exact.hpp"
#include "gcn/sampling.hpp"

namespace gcn {

enum class Variant { gcn, gan, gan_scheduler, maligan, exp_d };
enum class QhatKind { p, nucleus, mcts };
enum class SchedulerKind { none, linear };
enum class GenInit { zeros, target };

struct SchedulerSpec {
  SchedulerKind kind = SchedulerKind::none;
  double start = 1.0;
  double end = 0.0;
};

/// kind=none returns base; kind=linear interpolates base*(start + (end-start)*iter/total).
double scheduler_lr(double base, int iter, int total, const SchedulerSpec& spec);

enum class TargetKindCfg { uniform, dirichlet, table };

/// Synthetic data distribution; conditional spaces get an independent draw
/// per context (seed mixed with the context id).
struct TargetSpec {
  TargetKindCfg kind = TargetKindCfg::dirichlet;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // kind == table

  ExactDist build(const SpacePtr& space, int ctx) const;
};

struct TrainConfig {
  SpaceConfig space;
  TargetSpec target;
  Variant variant = Variant::gcn;
  QhatKind qhat = QhatKind::p;
  double epsilon = 0.1;  // mixture mass on the raw generator branch
  double sigma = 0.1;    // nucleus mass of the mixture's guided branch
  MctsConfig mcts;       // rounds/c_puct/sigma for qhat=mcts; mode derived from the space
  int batch_size = 512;
  int iters = 100;
  int disc_steps_per_iter = 1;
  double lr_gen = 0.5;
  double lr_disc = 0.05;
  std::uint64_t seed = 0;
  SchedulerSpec scheduler;
  GenInit gen_init = GenInit::zeros;
  double weight_disc_scale = 1.0;  // rescales D inside IS weights only (diagnostics)
  double maligan_clip = 10.0;
  double divergence_factor = 10.0;

  void validate() const;
};

struct IterRecord {
  int iter = 0;
  double kl_exact = 0.0;  // KL(p_d || p_theta) by enumeration (mean over contexts)
  double tv = 0.0;
  double z_est = 0.0;     // mean raw weight, estimates Z_t
  double eta_mc = 0.0;
  double grad_norm = 0.0;  // magnitude of the applied parameter change
  double weight_max = 0.0;
  double weight_ess = 0.0;
  double wall_ms = 0.0;    // not serialized to CSV (kept reproducible)
};

enum class RunStatus { completed, diverged };

struct RunResult {
  RunStatus status = RunStatus::completed;
  double initial_kl = 0.0;
  double initial_tv = 0.0;
  std::vector<IterRecord> records;
  TabularGenerator gen;
  PrefixDiscriminator disc;
  std::vector<ExactDist> target;  // per context
  SpacePtr space;
  int skipped_updates = 0;
};

struct EvalResult {
  double kl = 0.0;
  double tv = 0.0;
  Sequence modal;  // context 0; ties resolve to the enumeration-first sequence
};

EvalResult evaluate_checkpoint(const TabularGenerator& gen,
                               const std::vector<ExactDist>& target,
                               const SpacePtr& space);

/// Runs the cooperative training loop: per iteration draws training pairs,
/// takes disc_steps_per_iter prefix-discriminator steps against fresh
/// generator samples, draws a behavior batch from q-hat, forms the variant's
/// importance weights, and applies the (optionally self-normalized) weighted
/// likelihood step. Deterministic given the seed. Aborts with a diverged
/// status once exact KL exceeds divergence_factor times its initial value.
RunResult train(const TrainConfig& cfg);

}  // namespace gcn
