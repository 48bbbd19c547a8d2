#include "gcn/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gcn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<double> optimal_discriminator(const ExactDist& p_d, const ExactDist& p_prev) {
  if (!(p_d.space()->config() == p_prev.space()->config()))
    throw SupportViolation("distributions defined over different spaces");
  std::vector<double> D(p_d.size());
  for (std::size_t i = 0; i < D.size(); ++i) {
    const double a = p_d.prob(i);
    const double b = p_prev.prob(i);
    if (a + b <= 0.0)
      throw SupportViolation("p_d(y) + p_prev(y) = 0 for an enumerated sequence");
    D[i] = a / (a + b);
  }
  return D;
}

std::pair<ExactDist, double> cooperative_target(const ExactDist& p_prev,
                                                const std::vector<double>& D) {
  if (D.size() != p_prev.size()) throw Error("discriminator table size mismatch");
  std::vector<double> logw(D.size(), kNegInf);
  double z = 0.0;
  for (std::size_t i = 0; i < D.size(); ++i) {
    if (D[i] < 0.0 || D[i] > 1.0) throw Error("discriminator value outside [0,1]");
    const double lp = p_prev.log_prob(i);
    if (std::isfinite(lp) && D[i] > 0.0) {
      logw[i] = lp + std::log(D[i]);
      z += std::exp(lp) * D[i];
    }
  }
  if (!(z > 0.0)) throw DegenerateTarget("cooperative target has zero mass");
  return {ExactDist::from_log_unnormalized(p_prev.space(), std::move(logw)), z};
}

double eta_of(const std::vector<double>& D, const ExactDist& p_d, const ExactDist& p_prev) {
  if (D.size() != p_d.size() || D.size() != p_prev.size())
    throw Error("discriminator table size mismatch");
  double e_log_d = 0.0;
  double e_log_1md = 0.0;
  for (std::size_t i = 0; i < D.size(); ++i) {
    const double wd = p_d.prob(i);
    if (wd > 0.0) {
      if (!(D[i] > 0.0)) throw Error("log of zero: D(y) = 0 under p_d support");
      e_log_d += wd * std::log(D[i]);
    }
    const double wp = p_prev.prob(i);
    if (wp > 0.0) {
      if (!(D[i] < 1.0)) throw Error("log of zero: D(y) = 1 under p_prev support");
      e_log_1md += wp * std::log1p(-D[i]);
    }
  }
  return std::exp(std::min(e_log_d, e_log_1md));
}

double eta_mc(const std::vector<double>& d_on_reals, const std::vector<double>& d_on_fakes) {
  if (d_on_reals.empty() || d_on_fakes.empty()) throw Error("empty eta sample set");
  double a = 0.0;
  for (double d : d_on_reals) {
    if (!(d > 0.0)) throw Error("log of zero in eta estimate");
    a += std::log(d);
  }
  a /= static_cast<double>(d_on_reals.size());
  double b = 0.0;
  for (double d : d_on_fakes) {
    if (!(d < 1.0)) throw Error("log of zero in eta estimate");
    b += std::log1p(-d);
  }
  b /= static_cast<double>(d_on_fakes.size());
  return std::exp(std::min(a, b));
}

std::pair<ExactDist, StepReport> exact_step(const ExactDist& p_d, const ExactDist& p_prev) {
  for (std::size_t i = 0; i < p_d.size(); ++i)
    if (p_d.prob(i) > 0.0 && !(p_prev.prob(i) > 0.0))
      throw SupportViolation(
          "p_prev(y) = 0 where p_d(y) > 0: the convergence hypothesis requires "
          "p_0 positive on the support of p_d");
  const std::vector<double> D = optimal_discriminator(p_d, p_prev);
  auto [p_next, z] = cooperative_target(p_prev, D);
  StepReport report;
  report.z = z;
  report.kl_before = kl_divergence(p_d, p_prev);
  report.kl_after = kl_divergence(p_d, p_next);
  report.delta = report.kl_after - report.kl_before;
  report.eta = eta_of(D, p_d, p_prev);
  report.bound = std::log(1.0 / report.eta - 1.0);
  return {std::move(p_next), report};
}

ExactDist variant_target(const ExactDist& p_prev, const std::vector<double>& D,
                         TargetKind kind) {
  if (D.size() != p_prev.size()) throw Error("discriminator table size mismatch");
  switch (kind) {
    case TargetKind::cooperative:
      return cooperative_target(p_prev, D).first;
    case TargetKind::maligan: {
      std::vector<double> logw(D.size(), kNegInf);
      for (std::size_t i = 0; i < D.size(); ++i) {
        const double lp = p_prev.log_prob(i);
        if (!std::isfinite(lp) || D[i] <= 0.0) continue;
        if (!(D[i] < 1.0))
          throw Error("division by zero: maligan target needs D < 1 on the support");
        logw[i] = lp + std::log(D[i]) - std::log1p(-D[i]);
      }
      return ExactDist::from_log_unnormalized(p_prev.space(), std::move(logw));
    }
    case TargetKind::exp_d: {
      std::vector<double> logw(D.size());
      for (std::size_t i = 0; i < D.size(); ++i) logw[i] = D[i];
      return ExactDist::from_log_unnormalized(p_prev.space(), std::move(logw));
    }
  }
  throw Error("unknown target kind");
}

ZhatTable zhat_init(const ExactDist& p_d, const ExactDist& p_0) {
  if (!(p_d.space()->config() == p_0.space()->config()))
    throw SupportViolation("distributions defined over different spaces");
  ZhatTable t;
  t.step = 0;
  t.values.resize(p_d.size());
  for (std::size_t i = 0; i < p_d.size(); ++i) {
    const double a = p_d.prob(i);
    const double b = p_0.prob(i);
    if (a > 0.0 && !(b > 0.0))
      throw SupportViolation("p_0(y) = 0 where p_d(y) > 0 in zhat_init");
    t.values[i] = b > 0.0 ? a / b : 0.0;
  }
  return t;
}

ZhatTable zhat_step(const ZhatTable& prev, double z_t) {
  if (!(z_t > 0.0) || z_t > 1.0) throw Error("z_t must lie in (0, 1]");
  ZhatTable t;
  t.step = prev.step + 1;
  t.values.resize(prev.values.size());
  for (std::size_t i = 0; i < prev.values.size(); ++i)
    t.values[i] = z_t * (prev.values[i] + 1.0);
  return t;
}

double zhat_spread(const ZhatTable& z) {
  const auto [mn, mx] = std::minmax_element(z.values.begin(), z.values.end());
  return *mx - *mn;
}

ExactDynamics run_exact_dynamics(const ExactDist& p_d, const ExactDist& p_0,
                                 int max_steps, double stop_kl) {
  if (max_steps < 1) throw Error("max_steps must be >= 1");
  ZhatTable zhat = zhat_init(p_d, p_0);
  const double spread0 = zhat_spread(zhat);
  double zprod = 1.0;

  ExactDynamics dyn{{}, {}, {}, {}, p_0};
  ExactDist p_prev = p_0;
  for (int t = 1; t <= max_steps; ++t) {
    auto [p_next, report] = exact_step(p_d, p_prev);
    report.t = t;

    // Lemma check: p_t equals p_d / (zhat_{t-1} + 1) after normalization.
    std::vector<double> predicted(p_d.size(), kNegInf);
    for (std::size_t i = 0; i < p_d.size(); ++i) {
      const double lp = p_d.log_prob(i);
      if (std::isfinite(lp)) predicted[i] = lp - std::log1p(zhat.values[i]);
    }
    const ExactDist p_pred =
        ExactDist::from_log_unnormalized(p_d.space(), std::move(predicted));
    double dev = 0.0;
    for (std::size_t i = 0; i < p_d.size(); ++i)
      dev = std::max(dev, std::abs(p_next.prob(i) - p_pred.prob(i)));
    dyn.lemma_a1_deviation.push_back(dev);

    zhat = zhat_step(zhat, report.z);
    zprod *= report.z;
    const double spread = zhat_spread(zhat);
    dyn.zhat_spreads.push_back(spread);
    dyn.spread_identity_gap.push_back(std::abs(spread - spread0 * zprod));

    dyn.reports.push_back(report);
    dyn.final = p_next;
    p_prev = std::move(p_next);
    if (report.kl_after < stop_kl) break;
  }
  return dyn;
}

}  // namespace gcn
