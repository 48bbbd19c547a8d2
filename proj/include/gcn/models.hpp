#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "gcn/seqspace.hpp"

namespace gcn {

using Prefix = std::vector<TokenId>;
using PrefixView = std::span<const TokenId>;

/// Autoregressive categorical model with one logit vector per reachable
/// (context, prefix). Unstored prefixes behave as all-zero logits. EOS is
/// masked out of the first step, and sequences reaching max_len terminate
/// without an EOS factor, so the induced sequence distribution sums to 1.
class TabularGenerator {
 public:
  using Table = std::unordered_map<Prefix, std::vector<double>, TokenVecHash>;

  explicit TabularGenerator(SpaceConfig space);

  const SpaceConfig& space() const { return space_; }
  int num_symbols() const { return space_.vocab.num_symbols(); }

  std::vector<double> logits(int ctx, PrefixView prefix) const;
  void set_logits(int ctx, PrefixView prefix, std::vector<double> logits);
  void add_to_logit(int ctx, PrefixView prefix, int symbol, double delta);

  /// Per-step categorical over vocab+EOS at this prefix, softmax(logits/T).
  /// Requires prefix length < max_len.
  std::vector<double> step_dist(int ctx, PrefixView prefix, double temperature = 1.0) const;
  std::vector<double> step_log_dist(int ctx, PrefixView prefix) const;

  const Table& stored(int ctx) const;
  int check_context(int ctx) const;

 private:
  SpaceConfig space_;
  std::vector<Table> theta_;  // one table per context
};

/// Sigmoid scorer over every (context, prefix), including prefixes ending in
/// EOS. Unseen prefixes score 0.5 (logit 0).
class PrefixDiscriminator {
 public:
  using Table = std::unordered_map<Prefix, double, TokenVecHash>;

  explicit PrefixDiscriminator(SpaceConfig space);

  const SpaceConfig& space() const { return space_; }

  double logit(int ctx, PrefixView prefix) const;
  void set_logit(int ctx, PrefixView prefix, double logit);
  void add_to_logit(int ctx, PrefixView prefix, double delta);

  const Table& stored(int ctx) const;
  int check_context(int ctx) const;

 private:
  SpaceConfig space_;
  std::vector<Table> phi_;
};

struct Example {
  int ctx = 0;
  Sequence y;
};
using Batch = std::vector<Example>;

/// Partial derivatives w.r.t. generator logits; absent keys mean zero.
struct GradTable {
  std::unordered_map<int, TabularGenerator::Table> entries;

  void accumulate(int ctx, PrefixView prefix, const std::vector<double>& g, double scale);
  void axpy(double a, const GradTable& other);
  double squared_norm() const;
};

/// Partial derivatives w.r.t. discriminator logits.
struct DiscGrad {
  std::unordered_map<int, PrefixDiscriminator::Table> entries;

  void accumulate(int ctx, PrefixView prefix, double g);
  double squared_norm() const;
};

// --------------------------------------------------------------------------
// Generator operations
// --------------------------------------------------------------------------

/// log p_theta(y|ctx) as the sum of per-step log softmax factors.
double gen_logprob(const TabularGenerator& gen, int ctx, const Sequence& y);

/// Ancestral draw at the given softmax temperature; argmax below 1e-6.
Sequence gen_sample(const TabularGenerator& gen, int ctx, double temperature, Rng& rng);

/// Analytic d log p_theta(y) / d logits: onehot(chosen) - softmax per visited
/// prefix.
GradTable gen_grad_logprob(const TabularGenerator& gen, int ctx, const Sequence& y);

/// The full sequence distribution induced by the generator, by enumeration.
ExactDist generator_dist(const TabularGenerator& gen, int ctx, const SpacePtr& space);

/// Generator whose conditionals realize the given per-context distributions.
TabularGenerator fit_generator(const SpaceConfig& space, const std::vector<ExactDist>& per_ctx);

/// Ascent step on the weighted log-likelihood. With self_normalize, weights
/// are divided by their sum (throws AllZeroWeights when that sum is zero);
/// otherwise the raw weighted sum of gradients is used.
void gen_update_weighted(TabularGenerator& gen, const Batch& samples,
                         const std::vector<double>& weights, double lr,
                         bool self_normalize);

/// The step direction used by gen_update_weighted, exposed for diagnostics.
GradTable weighted_logprob_grad(const TabularGenerator& gen, const Batch& samples,
                                const std::vector<double>& weights, bool self_normalize);

void apply_gradient(TabularGenerator& gen, const GradTable& grad, double lr);

// --------------------------------------------------------------------------
// Discriminator operations
// --------------------------------------------------------------------------

double disc_score(const PrefixDiscriminator& disc, int ctx, PrefixView prefix);

inline double disc_score(const PrefixDiscriminator& disc, int ctx, const Sequence& y) {
  return disc_score(disc, ctx, PrefixView(y.tokens));
}

/// sum_i sum_j [log D(real prefix_j) + log(1 - D(fake prefix_j))] over every
/// non-empty starting sub-sequence of each sample.
double disc_prefix_objective(const PrefixDiscriminator& disc, const Batch& reals,
                             const Batch& fakes);

DiscGrad disc_prefix_grad(const PrefixDiscriminator& disc, const Batch& reals,
                          const Batch& fakes);

/// One ascent step on the prefix objective.
void disc_update(PrefixDiscriminator& disc, const Batch& reals, const Batch& fakes,
                 double lr);

void apply_gradient(PrefixDiscriminator& disc, const DiscGrad& grad, double lr);

/// Largest absolute logit difference between two generators (union of stored
/// and implicit-zero entries).
double max_param_delta(const TabularGenerator& a, const TabularGenerator& b);

}  // namespace gcn
