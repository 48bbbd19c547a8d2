#pragma once

#include <utility>
#include <vector>

#include "gcn/seqspace.hpp"

namespace gcn {

/// Per-step record of the exact cooperative update.
struct StepReport {
  int t = 0;
  double z = 0.0;          // partition of q_t = p_{t-1} D_t / z
  double kl_before = 0.0;  // KL(p_d || p_{t-1})
  double kl_after = 0.0;   // KL(p_d || p_t)
  double delta = 0.0;      // kl_after - kl_before
  double eta = 0.0;        // exp(min of the two discriminator expectations)
  double bound = 0.0;      // log(1/eta - 1)
};

/// D*(y) = p_d(y) / (p_d(y) + p_prev(y)), indexed by enumeration order.
/// Requires p_d(y) + p_prev(y) > 0 for every y.
std::vector<double> optimal_discriminator(const ExactDist& p_d, const ExactDist& p_prev);

/// q(y) = p_prev(y) D(y) / z with z = sum p_prev D. Throws DegenerateTarget
/// when z = 0.
std::pair<ExactDist, double> cooperative_target(const ExactDist& p_prev,
                                                const std::vector<double>& D);

/// eta = exp(min(E_{p_d}[log D], E_{p_prev}[log(1-D)])). Terms with zero
/// expectation weight are skipped; a boundary D value under positive weight
/// raises Error (log of zero).
double eta_of(const std::vector<double>& D, const ExactDist& p_d, const ExactDist& p_prev);

/// Monte-Carlo eta from discriminator scores on real and generated samples.
double eta_mc(const std::vector<double>& d_on_reals, const std::vector<double>& d_on_fakes);

/// One optimal-play iteration: p_next proportional to p_prev * D*(p_d, p_prev),
/// with the full step report. Requires p_prev(y) > 0 wherever p_d(y) > 0.
std::pair<ExactDist, StepReport> exact_step(const ExactDist& p_d, const ExactDist& p_prev);

enum class TargetKind { cooperative, maligan, exp_d };

/// Normalized target for the selected h-function: p_prev*D, p_prev*D/(1-D),
/// or exp(D) (the last ignores p_prev beyond its support shape).
ExactDist variant_target(const ExactDist& p_prev, const std::vector<double>& D,
                         TargetKind kind);

/// Auxiliary sequence of the convergence proof; spread contracts by z each step.
struct ZhatTable {
  std::vector<double> values;  // aligned with the enumeration
  int step = 0;
};

/// zhat_0(y) = p_d(y)/p_0(y); requires p_0 > 0 wherever p_d > 0.
ZhatTable zhat_init(const ExactDist& p_d, const ExactDist& p_0);

/// zhat_t = z_t (zhat_{t-1} + 1); requires z_t in (0, 1].
ZhatTable zhat_step(const ZhatTable& prev, double z_t);

double zhat_spread(const ZhatTable& z);

/// Iterated exact dynamics with the recursion cross-checks evaluated inline.
struct ExactDynamics {
  std::vector<StepReport> reports;
  std::vector<double> zhat_spreads;        // after each step
  std::vector<double> lemma_a1_deviation;  // max |p_t - normalized p_d/(zhat_{t-1}+1)|
  std::vector<double> spread_identity_gap; // |spread_t - spread_0 * prod z_s|
  ExactDist final;
};

/// Runs exact_step until kl_after < stop_kl or max_steps is reached; always
/// performs at least one step.
ExactDynamics run_exact_dynamics(const ExactDist& p_d, const ExactDist& p_0,
                                 int max_steps, double stop_kl = 1e-12);

}  // namespace gcn
