#include "gcn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

namespace gcn {

double scheduler_lr(double base, int iter, int total, const SchedulerSpec& spec) {
  if (iter < 0 || iter > total) throw Error("scheduler iter outside [0, total]");
  switch (spec.kind) {
    case SchedulerKind::none:
      return base;
    case SchedulerKind::linear: {
      const double frac = total == 0 ? 0.0 : static_cast<double>(iter) / total;
      return base * (spec.start + (spec.end - spec.start) * frac);
    }
  }
  throw Error("unknown scheduler kind");
}

ExactDist TargetSpec::build(const SpacePtr& space, int ctx) const {
  switch (kind) {
    case TargetKindCfg::uniform:
      return ExactDist::uniform(space);
    case TargetKindCfg::dirichlet:
      return ExactDist::dirichlet(space, alpha, mix_seed(seed, 0x7a26e7, ctx));
    case TargetKindCfg::table:
      return ExactDist::from_linear(space, values);
  }
  throw Error("unknown target kind");
}

void TrainConfig::validate() const {
  space.sequence_count();
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (iters < 0) throw Error("iters must be >= 0");
  if (disc_steps_per_iter < 1) throw Error("disc_steps_per_iter must be >= 1");
  if (!(lr_gen > 0.0) || !(lr_disc > 0.0)) throw Error("learning rates must be positive");
  if (!(epsilon > 0.0) || epsilon > 1.0) throw Error("epsilon must lie in (0,1]");
  if (!(sigma > 0.0) || sigma > 1.0) throw Error("sigma must lie in (0,1]");
  if (!(weight_disc_scale > 0.0) || weight_disc_scale > 1.0)
    throw Error("weight_disc_scale must lie in (0,1]");
  if (!(divergence_factor > 1.0)) throw Error("divergence_factor must exceed 1");
  if (variant == Variant::gan_scheduler && scheduler.kind == SchedulerKind::none)
    throw Error("gan_scheduler requires a scheduler");
  if (variant != Variant::gan_scheduler && scheduler.kind != SchedulerKind::none)
    throw Error("only gan_scheduler uses a scheduler; the normalized variants "
                "are stabilized by the partition term");
  if (qhat == QhatKind::mcts && mcts.rounds < 1) throw Error("mcts rounds must be >= 1");
  if (target.kind == TargetKindCfg::dirichlet && !(target.alpha > 0.0))
    throw Error("dirichlet alpha must be positive");
}

EvalResult evaluate_checkpoint(const TabularGenerator& gen,
                               const std::vector<ExactDist>& target,
                               const SpacePtr& space) {
  if (target.size() != static_cast<std::size_t>(gen.space().context_count()))
    throw Error("one target distribution per context required");
  EvalResult out;
  for (int ctx = 0; ctx < gen.space().context_count(); ++ctx) {
    const ExactDist model = generator_dist(gen, ctx, space);
    out.kl += kl_divergence(target[static_cast<std::size_t>(ctx)], model);
    out.tv += total_variation(target[static_cast<std::size_t>(ctx)], model);
    if (ctx == 0) out.modal = space->at(model.modal_index());
  }
  const double n = static_cast<double>(gen.space().context_count());
  out.kl /= n;
  out.tv /= n;
  return out;
}

namespace {

// Inverse-CDF table for repeated draws from a fixed exact distribution.
struct Cdf {
  std::vector<double> cum;

  explicit Cdf(const ExactDist& d) {
    cum.reserve(d.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      acc += d.prob(i);
      cum.push_back(acc);
    }
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform01() * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()),
                                 cum.size() - 1);
  }
};

constexpr std::uint64_t kPhaseReals = 0x01;
constexpr std::uint64_t kPhaseFakes = 0x02;
constexpr std::uint64_t kPhaseQhat = 0x03;

}  // namespace

RunResult train(const TrainConfig& cfg) {
  cfg.validate();
  SpacePtr space = make_space(cfg.space);
  const int C = cfg.space.context_count();
  const int m = cfg.batch_size;

  std::vector<ExactDist> p_d;
  std::vector<Cdf> p_d_cdf;
  for (int ctx = 0; ctx < C; ++ctx) {
    p_d.push_back(cfg.target.build(space, ctx));
    p_d_cdf.emplace_back(p_d.back());
  }

  TabularGenerator gen =
      cfg.gen_init == GenInit::target ? fit_generator(cfg.space, p_d)
                                      : TabularGenerator(cfg.space);
  PrefixDiscriminator disc(cfg.space);

  MctsConfig mcts_cfg = cfg.mcts;
  mcts_cfg.mode =
      cfg.space.num_contexts == 0 ? MctsMode::unconditional : MctsMode::conditional;

  RunResult run{RunStatus::completed, 0.0, 0.0, {}, gen, disc, p_d, space, 0};
  {
    const EvalResult ev = evaluate_checkpoint(gen, p_d, space);
    run.initial_kl = ev.kl;
    run.initial_tv = ev.tv;
  }
  const bool divergence_guard = run.initial_kl > 1e-9;

  const bool self_normalize =
      cfg.variant == Variant::gcn || cfg.variant == Variant::maligan ||
      cfg.variant == Variant::exp_d;

  for (int t = 1; t <= cfg.iters; ++t) {
    const auto clock0 = std::chrono::steady_clock::now();

    // (a) Training pairs: uniform context, y ~ p_d(.|x).
    Batch reals(static_cast<std::size_t>(m));
    parallel_for(m, [&](int i) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t), kPhaseReals,
                       static_cast<std::uint64_t>(i)));
      const int ctx = C == 1 ? 0
                             : std::min(C - 1, static_cast<int>(rng.uniform01() * C));
      const std::size_t idx = p_d_cdf[static_cast<std::size_t>(ctx)].draw(rng);
      reals[static_cast<std::size_t>(i)] = {ctx, space->at(idx)};
    });

    // (b) Discriminator phase on every prefix, fresh fakes per step.
    Batch fakes(static_cast<std::size_t>(m));
    for (int step = 0; step < cfg.disc_steps_per_iter; ++step) {
      parallel_for(m, [&](int i) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t),
                         kPhaseFakes + (static_cast<std::uint64_t>(step) << 8),
                         static_cast<std::uint64_t>(i)));
        const int ctx = reals[static_cast<std::size_t>(i)].ctx;
        fakes[static_cast<std::size_t>(i)] = {ctx, gen_sample(gen, ctx, 1.0, rng)};
      });
      disc_update(disc, reals, fakes, cfg.lr_disc);
    }

    // (c) Behavior batch from q-hat with the post-update discriminator.
    std::vector<BehaviorDist> qdist;
    qdist.reserve(static_cast<std::size_t>(C));
    for (int ctx = 0; ctx < C; ++ctx) {
      switch (cfg.qhat) {
        case QhatKind::p:
          qdist.push_back(BehaviorDist::pure(gen, disc, ctx));
          break;
        case QhatKind::nucleus:
          qdist.push_back(BehaviorDist::nucleus_mixture(
              gen, disc, ctx, MixtureSpec{cfg.epsilon, GuidedKind::nucleus},
              NucleusSpec{cfg.sigma}));
          break;
        case QhatKind::mcts:
          qdist.push_back(BehaviorDist::mcts_mixture(
              gen, disc, ctx, MixtureSpec{cfg.epsilon, GuidedKind::mcts}, mcts_cfg,
              mix_seed(cfg.seed, static_cast<std::uint64_t>(t), 0xDECu,
                       static_cast<std::uint64_t>(ctx))));
          break;
      }
    }
    Batch samples(static_cast<std::size_t>(m));
    std::vector<double> w_raw(static_cast<std::size_t>(m));
    std::vector<double> qhat(static_cast<std::size_t>(m));
    parallel_for(m, [&](int i) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t), kPhaseQhat,
                       static_cast<std::uint64_t>(i)));
      const int ctx = reals[static_cast<std::size_t>(i)].ctx;
      DrawResult r = qdist[static_cast<std::size_t>(ctx)].sample_with_weight(rng);
      samples[static_cast<std::size_t>(i)] = {ctx, std::move(r.y)};
      w_raw[static_cast<std::size_t>(i)] = r.w_raw;
      qhat[static_cast<std::size_t>(i)] = r.qhat;
    });

    // (d) Variant weighting.
    std::vector<double> w(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      const double scaled = cfg.weight_disc_scale * w_raw[k];
      switch (cfg.variant) {
        case Variant::gcn:
        case Variant::gan:
        case Variant::gan_scheduler:
          w[k] = scaled;
          break;
        case Variant::maligan: {
          const double d = disc_score(disc, samples[k].ctx, samples[k].y);
          if (!(d < 1.0)) throw Error("maligan weight with D = 1");
          w[k] = std::min(scaled / (1.0 - d), cfg.maligan_clip);
          break;
        }
        case Variant::exp_d: {
          const double d = disc_score(disc, samples[k].ctx, samples[k].y);
          if (!(qhat[k] > 0.0)) throw Error("exp_d weight with zero behavior density");
          w[k] = std::exp(d) / qhat[k];
          break;
        }
      }
    }

    double w_sum = 0.0;
    double w_sq = 0.0;
    double w_max = 0.0;
    double z_est = 0.0;
    for (int i = 0; i < m; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      w_sum += w[k];
      w_sq += w[k] * w[k];
      w_max = std::max(w_max, w[k]);
      z_est += w_raw[k];
    }
    z_est /= static_cast<double>(m);

    // (e) Generator step.
    double lr_eff = cfg.lr_gen;
    if (cfg.variant == Variant::gan_scheduler)
      lr_eff = scheduler_lr(cfg.lr_gen, t - 1, cfg.iters, cfg.scheduler);
    double grad_norm = 0.0;
    if (self_normalize && !(w_sum > 0.0)) {
      std::cerr << "[gcnlab] iter " << t
                << ": all importance weights zero, skipping generator step\n";
      ++run.skipped_updates;
    } else if (lr_eff > 0.0) {
      const GradTable step = weighted_logprob_grad(gen, samples, w, self_normalize);
      grad_norm = lr_eff * std::sqrt(step.squared_norm());
      apply_gradient(gen, step, lr_eff);
    }

    // (f) Record.
    const EvalResult ev = evaluate_checkpoint(gen, p_d, space);
    std::vector<double> d_reals(reals.size());
    std::vector<double> d_fakes(fakes.size());
    for (std::size_t i = 0; i < reals.size(); ++i)
      d_reals[i] = disc_score(disc, reals[i].ctx, reals[i].y);
    for (std::size_t i = 0; i < fakes.size(); ++i)
      d_fakes[i] = disc_score(disc, fakes[i].ctx, fakes[i].y);

    IterRecord rec;
    rec.iter = t;
    rec.kl_exact = ev.kl;
    rec.tv = ev.tv;
    rec.z_est = z_est;
    rec.eta_mc = eta_mc(d_reals, d_fakes);
    rec.grad_norm = grad_norm;
    rec.weight_max = w_max;
    rec.weight_ess = w_sum > 0.0 ? (w_sum * w_sum) / w_sq : 0.0;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - clock0)
                      .count();
    run.records.push_back(rec);

    if (!std::isfinite(ev.kl) ||
        (divergence_guard && ev.kl > cfg.divergence_factor * run.initial_kl)) {
      run.status = RunStatus::diverged;
      break;
    }
  }

  run.gen = std::move(gen);
  run.disc = std::move(disc);
  return run;
}

}  // namespace gcn
