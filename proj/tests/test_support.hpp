#pragma once

// Shared helpers for the unit and acceptance suites. The oracles here are
// deliberately independent of the library code paths they check: plain-loop
// enumeration and central finite differences.

#include <cmath>
#include <map>
#include <vector>

#include "gcn/exact.hpp"
#include "gcn/models.hpp"

namespace gcn::testing {

inline Sequence seq(std::initializer_list<TokenId> toks) {
  return Sequence{std::vector<TokenId>(toks)};
}

/// Every content prefix (ordinary tokens only) of length 0..max_len-1, i.e.
/// every point where the generator owns a step distribution.
inline std::vector<Prefix> all_step_prefixes(const SpaceConfig& space) {
  std::vector<Prefix> out;
  std::vector<Prefix> frontier{Prefix{}};
  for (int len = 0; len < space.max_len; ++len) {
    std::vector<Prefix> next;
    for (const Prefix& p : frontier) {
      out.push_back(p);
      for (TokenId t = 0; t < space.vocab.size; ++t) {
        Prefix q = p;
        q.push_back(t);
        next.push_back(std::move(q));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

inline TabularGenerator random_generator(const SpaceConfig& space, std::uint64_t seed,
                                         double scale = 1.0) {
  TabularGenerator gen(space);
  Rng rng(mix_seed(seed, 0x6e9));
  for (int ctx = 0; ctx < space.context_count(); ++ctx) {
    for (const Prefix& p : all_step_prefixes(space)) {
      std::vector<double> logits(static_cast<std::size_t>(space.vocab.num_symbols()));
      for (double& l : logits) l = scale * (2.0 * rng.uniform01() - 1.0);
      gen.set_logits(ctx, p, std::move(logits));
    }
  }
  return gen;
}

inline PrefixDiscriminator random_discriminator(const SpaceConfig& space,
                                                std::uint64_t seed, double scale = 1.0) {
  PrefixDiscriminator disc(space);
  Rng rng(mix_seed(seed, 0xd15c));
  SpacePtr sp = make_space(space);
  for (int ctx = 0; ctx < space.context_count(); ++ctx) {
    for (const Sequence& y : sp->sequences()) {
      for (std::size_t j = 1; j <= y.tokens.size(); ++j) {
        const Prefix p(y.tokens.begin(), y.tokens.begin() + static_cast<std::ptrdiff_t>(j));
        disc.set_logit(ctx, p, scale * (2.0 * rng.uniform01() - 1.0));
      }
    }
  }
  return disc;
}

/// Central finite difference of gen_logprob w.r.t. one logit entry.
inline double fd_logprob_entry(const TabularGenerator& gen, int ctx, const Sequence& y,
                               const Prefix& prefix, int symbol, double h = 1e-5) {
  TabularGenerator up = gen;
  up.add_to_logit(ctx, prefix, symbol, h);
  TabularGenerator down = gen;
  down.add_to_logit(ctx, prefix, symbol, -h);
  return (gen_logprob(up, ctx, y) - gen_logprob(down, ctx, y)) / (2.0 * h);
}

/// Largest relative error between an analytic gradient table and finite
/// differences, over every entry the analytic table touches.
inline double gen_grad_max_rel_err(const TabularGenerator& gen, int ctx, const Sequence& y,
                                   double h = 1e-5) {
  const GradTable analytic = gen_grad_logprob(gen, ctx, y);
  double worst = 0.0;
  for (const auto& [c, table] : analytic.entries) {
    for (const auto& [prefix, g] : table) {
      for (std::size_t s = 0; s < g.size(); ++s) {
        const double fd = fd_logprob_entry(gen, c, y, prefix, static_cast<int>(s), h);
        const double denom = std::max(std::abs(g[s]), 1e-6);
        worst = std::max(worst, std::abs(fd - g[s]) / denom);
      }
    }
  }
  return worst;
}

/// Central finite difference of the prefix-discriminator objective.
inline double fd_disc_entry(const PrefixDiscriminator& disc, const Batch& reals,
                            const Batch& fakes, int ctx, const Prefix& prefix,
                            double h = 1e-5) {
  PrefixDiscriminator up = disc;
  up.add_to_logit(ctx, prefix, h);
  PrefixDiscriminator down = disc;
  down.add_to_logit(ctx, prefix, -h);
  return (disc_prefix_objective(up, reals, fakes) -
          disc_prefix_objective(down, reals, fakes)) /
         (2.0 * h);
}

/// Flattens a GradTable over a fixed key set for norm comparisons.
inline std::map<std::pair<int, Prefix>, std::vector<double>> grad_as_map(
    const GradTable& g) {
  std::map<std::pair<int, Prefix>, std::vector<double>> out;
  for (const auto& [ctx, table] : g.entries)
    for (const auto& [prefix, vec] : table) out[{ctx, prefix}] = vec;
  return out;
}

inline double grad_rel_l2_err(const GradTable& got, const GradTable& want) {
  auto a = grad_as_map(got);
  auto b = grad_as_map(want);
  double diff2 = 0.0;
  double ref2 = 0.0;
  auto visit = [&](const std::pair<int, Prefix>& key, std::size_t arity) {
    const auto ia = a.find(key);
    const auto ib = b.find(key);
    for (std::size_t s = 0; s < arity; ++s) {
      const double x = ia == a.end() ? 0.0 : ia->second[s];
      const double y = ib == b.end() ? 0.0 : ib->second[s];
      diff2 += (x - y) * (x - y);
      ref2 += y * y;
    }
  };
  for (const auto& [key, vec] : a) visit(key, vec.size());
  for (const auto& [key, vec] : b)
    if (!a.count(key)) visit(key, vec.size());
  return std::sqrt(diff2) / std::sqrt(std::max(ref2, 1e-300));
}

/// Enumeration oracle for the cooperative gradient: sum_y q(y) grad log p(y)
/// with q proportional to p_theta * D, all computed with plain loops.
inline GradTable enumerated_cooperative_gradient(const TabularGenerator& gen,
                                                 const PrefixDiscriminator& disc, int ctx,
                                                 const SpacePtr& space) {
  std::vector<double> mass(space->size());
  double z = 0.0;
  for (std::size_t i = 0; i < space->size(); ++i) {
    mass[i] = std::exp(gen_logprob(gen, ctx, space->at(i))) *
              disc_score(disc, ctx, space->at(i));
    z += mass[i];
  }
  GradTable out;
  for (std::size_t i = 0; i < space->size(); ++i)
    out.axpy(mass[i] / z, gen_grad_logprob(gen, ctx, space->at(i)));
  return out;
}

}  // namespace gcn::testing
