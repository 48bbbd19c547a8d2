#include "gcn/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gcn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kArgmaxTemperature = 1e-6;
constexpr double kMinFitLogit = -700.0;  // keeps fitted logits finite

Prefix to_key(PrefixView p) { return Prefix(p.begin(), p.end()); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularGenerator
// ---------------------------------------------------------------------------

TabularGenerator::TabularGenerator(SpaceConfig space) : space_(space) {
  space_.sequence_count();  // validates the space
  theta_.resize(static_cast<std::size_t>(space_.context_count()));
}

int TabularGenerator::check_context(int ctx) const {
  if (ctx < 0 || ctx >= space_.context_count())
    throw Error("unknown context id " + std::to_string(ctx));
  return ctx;
}

std::vector<double> TabularGenerator::logits(int ctx, PrefixView prefix) const {
  const auto& table = theta_[check_context(ctx)];
  auto it = table.find(to_key(prefix));
  if (it != table.end()) return it->second;
  return std::vector<double>(static_cast<std::size_t>(num_symbols()), 0.0);
}

void TabularGenerator::set_logits(int ctx, PrefixView prefix, std::vector<double> l) {
  if (l.size() != static_cast<std::size_t>(num_symbols()))
    throw Error("logit vector has wrong arity");
  for (double x : l)
    if (!std::isfinite(x)) throw Error("non-finite logit");
  theta_[check_context(ctx)][to_key(prefix)] = std::move(l);
}

void TabularGenerator::add_to_logit(int ctx, PrefixView prefix, int symbol, double delta) {
  auto& table = theta_[check_context(ctx)];
  auto [it, inserted] = table.try_emplace(
      to_key(prefix), std::vector<double>(static_cast<std::size_t>(num_symbols()), 0.0));
  it->second.at(static_cast<std::size_t>(symbol)) += delta;
}

std::vector<double> TabularGenerator::step_dist(int ctx, PrefixView prefix,
                                                double temperature) const {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  if (static_cast<int>(prefix.size()) >= space_.max_len)
    throw Error("no step distribution at or beyond max_len");
  std::vector<double> l = logits(ctx, prefix);
  const int n = num_symbols();
  const bool mask_eos = prefix.empty();  // first token is always ordinary
  const int limit = mask_eos ? n - 1 : n;
  double m = kNegInf;
  for (int i = 0; i < limit; ++i) m = std::max(m, l[i] / temperature);
  double z = 0.0;
  std::vector<double> p(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < limit; ++i) {
    p[i] = std::exp(l[i] / temperature - m);
    z += p[i];
  }
  for (int i = 0; i < limit; ++i) p[i] /= z;
  return p;
}

std::vector<double> TabularGenerator::step_log_dist(int ctx, PrefixView prefix) const {
  std::vector<double> p = step_dist(ctx, prefix);
  for (double& x : p) x = x > 0.0 ? std::log(x) : kNegInf;
  return p;
}

const TabularGenerator::Table& TabularGenerator::stored(int ctx) const {
  return theta_[check_context(ctx)];
}

// ---------------------------------------------------------------------------
// PrefixDiscriminator
// ---------------------------------------------------------------------------

PrefixDiscriminator::PrefixDiscriminator(SpaceConfig space) : space_(space) {
  space_.sequence_count();
  phi_.resize(static_cast<std::size_t>(space_.context_count()));
}

int PrefixDiscriminator::check_context(int ctx) const {
  if (ctx < 0 || ctx >= space_.context_count())
    throw Error("unknown context id " + std::to_string(ctx));
  return ctx;
}

double PrefixDiscriminator::logit(int ctx, PrefixView prefix) const {
  const auto& table = phi_[check_context(ctx)];
  auto it = table.find(to_key(prefix));
  return it == table.end() ? 0.0 : it->second;
}

void PrefixDiscriminator::set_logit(int ctx, PrefixView prefix, double l) {
  if (!std::isfinite(l)) throw Error("non-finite logit");
  phi_[check_context(ctx)][to_key(prefix)] = l;
}

void PrefixDiscriminator::add_to_logit(int ctx, PrefixView prefix, double delta) {
  phi_[check_context(ctx)][to_key(prefix)] += delta;
}

const PrefixDiscriminator::Table& PrefixDiscriminator::stored(int ctx) const {
  return phi_[check_context(ctx)];
}

double disc_score(const PrefixDiscriminator& disc, int ctx, PrefixView prefix) {
  if (static_cast<int>(prefix.size()) > disc.space().max_len + 1)
    throw Error("prefix longer than any sequence in the space");
  return sigmoid(disc.logit(ctx, prefix));
}

// ---------------------------------------------------------------------------
// Gradient containers
// ---------------------------------------------------------------------------

void GradTable::accumulate(int ctx, PrefixView prefix, const std::vector<double>& g,
                           double scale) {
  auto& table = entries[ctx];
  auto [it, inserted] = table.try_emplace(to_key(prefix), std::vector<double>(g.size(), 0.0));
  for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += scale * g[i];
}

void GradTable::axpy(double a, const GradTable& other) {
  for (const auto& [ctx, table] : other.entries)
    for (const auto& [prefix, g] : table) accumulate(ctx, prefix, g, a);
}

double GradTable::squared_norm() const {
  double s = 0.0;
  for (const auto& [ctx, table] : entries)
    for (const auto& [prefix, g] : table)
      for (double x : g) s += x * x;
  return s;
}

void DiscGrad::accumulate(int ctx, PrefixView prefix, double g) {
  entries[ctx][to_key(prefix)] += g;
}

double DiscGrad::squared_norm() const {
  double s = 0.0;
  for (const auto& [ctx, table] : entries)
    for (const auto& [prefix, g] : table) s += g * g;
  return s;
}

// ---------------------------------------------------------------------------
// Generator operations
// ---------------------------------------------------------------------------

double gen_logprob(const TabularGenerator& gen, int ctx, const Sequence& y) {
  gen.check_context(ctx);
  validate_sequence(gen.space(), y);
  double lp = 0.0;
  for (std::size_t j = 0; j < y.tokens.size(); ++j) {
    const PrefixView prefix(y.tokens.data(), j);
    lp += gen.step_log_dist(ctx, prefix)[static_cast<std::size_t>(y.tokens[j])];
  }
  return lp;
}

Sequence gen_sample(const TabularGenerator& gen, int ctx, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  gen.check_context(ctx);
  const SpaceConfig& space = gen.space();
  Sequence y;
  while (static_cast<int>(y.tokens.size()) < space.max_len) {
    const PrefixView prefix(y.tokens);
    int symbol;
    if (temperature < kArgmaxTemperature) {
      const std::vector<double> p = gen.step_dist(ctx, prefix, 1.0);
      symbol = 0;
      for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[symbol]) symbol = static_cast<int>(i);
    } else {
      symbol = rng.categorical(gen.step_dist(ctx, prefix, temperature));
    }
    y.tokens.push_back(symbol);
    if (symbol == space.vocab.eos()) break;
  }
  return y;
}

GradTable gen_grad_logprob(const TabularGenerator& gen, int ctx, const Sequence& y) {
  gen.check_context(ctx);
  validate_sequence(gen.space(), y);
  GradTable grad;
  std::vector<double> g(static_cast<std::size_t>(gen.num_symbols()));
  for (std::size_t j = 0; j < y.tokens.size(); ++j) {
    const PrefixView prefix(y.tokens.data(), j);
    const std::vector<double> p = gen.step_dist(ctx, prefix);
    for (std::size_t i = 0; i < p.size(); ++i) g[i] = -p[i];
    g[static_cast<std::size_t>(y.tokens[j])] += 1.0;
    grad.accumulate(ctx, prefix, g, 1.0);
  }
  return grad;
}

ExactDist generator_dist(const TabularGenerator& gen, int ctx, const SpacePtr& space) {
  if (!(space->config() == gen.space()))
    throw Error("space does not match generator configuration");
  std::vector<double> logp(space->size());
  for (std::size_t i = 0; i < space->size(); ++i)
    logp[i] = gen_logprob(gen, ctx, space->at(i));
  return ExactDist::from_log_unnormalized(space, std::move(logp));
}

TabularGenerator fit_generator(const SpaceConfig& space, const std::vector<ExactDist>& per_ctx) {
  if (per_ctx.size() != static_cast<std::size_t>(space.context_count()))
    throw Error("fit_generator needs one distribution per context");
  TabularGenerator gen(space);
  const int n = gen.num_symbols();
  for (int ctx = 0; ctx < space.context_count(); ++ctx) {
    const ExactDist& dist = per_ctx[static_cast<std::size_t>(ctx)];
    if (!(dist.space()->config() == space)) throw Error("distribution space mismatch");
    // Mass of each (prefix, next symbol) pair, accumulated over sequences.
    std::unordered_map<Prefix, std::vector<double>, TokenVecHash> mass;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const double p = dist.prob(i);
      if (p <= 0.0) continue;
      const Sequence& y = dist.space()->at(i);
      for (std::size_t j = 0; j < y.tokens.size(); ++j) {
        Prefix prefix(y.tokens.begin(), y.tokens.begin() + static_cast<std::ptrdiff_t>(j));
        auto [it, ins] = mass.try_emplace(std::move(prefix),
                                          std::vector<double>(static_cast<std::size_t>(n), 0.0));
        it->second[static_cast<std::size_t>(y.tokens[j])] += p;
      }
    }
    for (auto& [prefix, w] : mass) {
      std::vector<double> logits(static_cast<std::size_t>(n), kMinFitLogit);
      for (int s = 0; s < n; ++s)
        if (w[static_cast<std::size_t>(s)] > 0.0)
          logits[static_cast<std::size_t>(s)] =
              std::max(std::log(w[static_cast<std::size_t>(s)]), kMinFitLogit);
      gen.set_logits(ctx, prefix, std::move(logits));
    }
  }
  return gen;
}

GradTable weighted_logprob_grad(const TabularGenerator& gen, const Batch& samples,
                                const std::vector<double>& weights, bool self_normalize) {
  if (samples.size() != weights.size()) throw Error("batch/weight size mismatch");
  if (samples.empty()) throw Error("empty batch");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw Error("weights must be finite and non-negative");
    total += w;
  }
  if (self_normalize && !(total > 0.0))
    throw AllZeroWeights("all importance weights are zero");
  GradTable step;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double c = self_normalize ? weights[i] / total : weights[i];
    step.axpy(c, gen_grad_logprob(gen, samples[i].ctx, samples[i].y));
  }
  return step;
}

void apply_gradient(TabularGenerator& gen, const GradTable& grad, double lr) {
  for (const auto& [ctx, table] : grad.entries)
    for (const auto& [prefix, g] : table)
      for (std::size_t s = 0; s < g.size(); ++s)
        if (g[s] != 0.0) gen.add_to_logit(ctx, prefix, static_cast<int>(s), lr * g[s]);
}

void gen_update_weighted(TabularGenerator& gen, const Batch& samples,
                         const std::vector<double>& weights, double lr,
                         bool self_normalize) {
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  apply_gradient(gen, weighted_logprob_grad(gen, samples, weights, self_normalize), lr);
}

// ---------------------------------------------------------------------------
// Discriminator operations
// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_prefix(const Sequence& y, Fn&& fn) {
  for (std::size_t j = 1; j <= y.tokens.size(); ++j)
    fn(PrefixView(y.tokens.data(), j));
}

}  // namespace

double disc_prefix_objective(const PrefixDiscriminator& disc, const Batch& reals,
                             const Batch& fakes) {
  if (reals.empty() || fakes.empty()) throw Error("empty discriminator batch");
  double obj = 0.0;
  for (const Example& ex : reals)
    for_each_prefix(ex.y, [&](PrefixView p) { obj += std::log(disc_score(disc, ex.ctx, p)); });
  for (const Example& ex : fakes)
    for_each_prefix(ex.y, [&](PrefixView p) {
      obj += std::log(1.0 - disc_score(disc, ex.ctx, p));
    });
  return obj;
}

DiscGrad disc_prefix_grad(const PrefixDiscriminator& disc, const Batch& reals,
                          const Batch& fakes) {
  if (reals.empty() || fakes.empty()) throw Error("empty discriminator batch");
  DiscGrad grad;
  // d/dphi log sigmoid(phi) = 1 - D;  d/dphi log(1 - sigmoid(phi)) = -D.
  for (const Example& ex : reals)
    for_each_prefix(ex.y, [&](PrefixView p) {
      grad.accumulate(ex.ctx, p, 1.0 - disc_score(disc, ex.ctx, p));
    });
  for (const Example& ex : fakes)
    for_each_prefix(ex.y, [&](PrefixView p) {
      grad.accumulate(ex.ctx, p, -disc_score(disc, ex.ctx, p));
    });
  return grad;
}

void apply_gradient(PrefixDiscriminator& disc, const DiscGrad& grad, double lr) {
  for (const auto& [ctx, table] : grad.entries)
    for (const auto& [prefix, g] : table)
      if (g != 0.0) disc.add_to_logit(ctx, prefix, lr * g);
}

void disc_update(PrefixDiscriminator& disc, const Batch& reals, const Batch& fakes,
                 double lr) {
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  apply_gradient(disc, disc_prefix_grad(disc, reals, fakes), lr);
}

double max_param_delta(const TabularGenerator& a, const TabularGenerator& b) {
  if (!(a.space() == b.space())) throw Error("space mismatch");
  double worst = 0.0;
  auto scan = [&](const TabularGenerator& x, const TabularGenerator& y) {
    for (int ctx = 0; ctx < x.space().context_count(); ++ctx) {
      for (const auto& [prefix, lx] : x.stored(ctx)) {
        const std::vector<double> ly = y.logits(ctx, prefix);
        for (std::size_t s = 0; s < lx.size(); ++s)
          worst = std::max(worst, std::abs(lx[s] - ly[s]));
      }
    }
  };
  scan(a, b);
  scan(b, a);
  return worst;
}

}  // namespace gcn
