#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gcn/models.hpp"

namespace gcn {

// --------------------------------------------------------------------------
// Nucleus truncation
// --------------------------------------------------------------------------

struct NucleusSpec {
  double sigma = 0.1;  // smallest probability mass the nucleus must hold
};

/// Minimal token set (by descending probability, then ascending id) whose
/// total mass reaches sigma. Returned ids are sorted ascending.
std::vector<int> nucleus_set(const std::vector<double>& dist, const NucleusSpec& spec);

/// Renormalized within-nucleus probability of `symbol`, 0 when outside.
double nucleus_step_factor(const std::vector<double>& dist, const NucleusSpec& spec,
                           int symbol);

/// Full-sequence density of per-step nucleus sampling; 0 the moment any token
/// leaves its step nucleus.
double nucleus_density(const TabularGenerator& gen, int ctx, const Sequence& y,
                       const NucleusSpec& spec);

Sequence nucleus_sample(const TabularGenerator& gen, int ctx, const NucleusSpec& spec,
                        Rng& rng);

// --------------------------------------------------------------------------
// Monte-Carlo tree search (PUCT) guided by the discriminator
// --------------------------------------------------------------------------

enum class MctsMode { conditional, unconditional };

struct MctsConfig {
  double c_puct = 1.0;
  int rounds = 50;
  double sigma = 0.1;  // nucleus mass for expansion
  MctsMode mode = MctsMode::unconditional;
};

struct PuctChild {
  double value = 0.0;  // 0 until first evaluated
  int visits = 0;
  double prior = 0.0;
};

/// Index maximizing V + c_puct * prior * sqrt(parent_visits) / (1 + visits);
/// ties resolve to the lowest index.
int puct_select(const std::vector<PuctChild>& children, double c_puct, int parent_visits);

struct MctsNode {
  Prefix prefix;          // absolute token prefix (may end in EOS => terminal)
  TokenId token = -1;     // edge token from parent, -1 at the root
  int parent = -1;
  double prior = 0.0;     // generator step probability of `token` at the parent
  double value = 0.0;
  int visits = 0;
  bool terminal = false;
  bool expanded = false;
  bool evaluated = false;
  std::vector<int> children;  // ascending token order
};

/// One search tree rooted at a prefix. Rounds are deterministic given the
/// models (selection ties break on token order, evaluation is the
/// discriminator score, no rollouts), so repeated runs agree exactly.
class MctsTree {
 public:
  MctsTree(const TabularGenerator& gen, const PrefixDiscriminator& disc, int ctx,
           const MctsConfig& cfg, Prefix root_prefix);

  void run(int rounds);

  const std::vector<MctsNode>& nodes() const { return nodes_; }
  const MctsNode& root() const { return nodes_[0]; }

  /// Root-child visit shares over vocab+EOS symbols; sums to 1 after run().
  std::vector<double> root_visit_dist() const;

  /// Most-visited root move, ties to the lowest token id.
  TokenId best_root_move() const;

 private:
  int expand(int id);

  const TabularGenerator& gen_;
  const PrefixDiscriminator& disc_;
  int ctx_;
  MctsConfig cfg_;
  int rounds_run_ = 0;
  std::vector<MctsNode> nodes_;
};

struct MctsChildStat {
  TokenId token;
  int visits;
  double value;
  double prior;
  bool evaluated;
};

struct MctsStepTrace {
  Prefix root_prefix;
  int root_visits = 0;
  double root_value = 0.0;
  std::vector<MctsChildStat> children;
  std::vector<double> visit_dist;
  TokenId chosen = -1;
};

struct MctsDecodeOutput {
  Sequence y;
  std::vector<std::vector<double>> step_visit_dists;  // one per emitted position
  int ctx = 0;
  MctsMode mode = MctsMode::unconditional;
  std::uint64_t tag = 0;
};

/// Runs per-position searches over a shared visit-distribution cache. The
/// per-prefix distributions are deterministic in (gen, disc, ctx, cfg), which
/// makes the guided sequence density well defined everywhere.
class MctsSampler {
 public:
  MctsSampler(const TabularGenerator& gen, const PrefixDiscriminator& disc, int ctx,
              MctsConfig cfg, std::uint64_t tag = 0);

  const MctsConfig& config() const { return cfg_; }

  /// Cached root-child visit distribution at a content prefix.
  std::vector<double> visit_dist(const Prefix& prefix);

  /// Emits tokens until EOS or max_len. Conditional mode picks the most
  /// visited child (deterministic); unconditional mode samples children
  /// proportionally to visits. rng is consumed only in unconditional mode.
  MctsDecodeOutput decode(Rng& rng, std::vector<MctsStepTrace>* trace = nullptr);

  /// Product of per-prefix visit distributions along y (the unconditional
  /// guided sampling law).
  double guided_density(const Sequence& y);

 private:
  const TabularGenerator& gen_;
  const PrefixDiscriminator& disc_;
  int ctx_;
  MctsConfig cfg_;
  std::uint64_t tag_;
  std::mutex mu_;
  std::unordered_map<Prefix, std::vector<double>, TokenVecHash> cache_;
};

/// Single decode per the four-step search (spec-level convenience wrapper).
MctsDecodeOutput mcts_decode(const TabularGenerator& gen, const PrefixDiscriminator& disc,
                             int ctx, const MctsConfig& cfg, Rng& rng,
                             std::vector<MctsStepTrace>* trace = nullptr);

// --------------------------------------------------------------------------
// Behavior mixtures for importance sampling
// --------------------------------------------------------------------------

enum class GuidedKind { nucleus, mcts };

struct MixtureSpec {
  double epsilon = 0.1;  // mass on the raw generator branch; must be positive
  GuidedKind guided = GuidedKind::nucleus;
};

/// Mixture density eps * p_theta(y) + (1-eps) * guided(y) for the MCTS
/// guided component, evaluated against a frozen decode: a Dirac on the
/// decoded sequence (conditional) or the product of the recorded root visit
/// distributions while y follows them, zero once it leaves the recorded path
/// (unconditional). Throws StaleDecode when the decode belongs to a
/// different context or tag.
double mcts_mixture_density(const TabularGenerator& gen, int ctx, const Sequence& y,
                            const MixtureSpec& spec, const MctsDecodeOutput& decode,
                            std::optional<std::uint64_t> expected_tag = std::nullopt);

struct DrawResult {
  Sequence y;
  double qhat = 0.0;   // behavior density at y (both mixture branches)
  double w_raw = 0.0;  // p_theta(y) * D(y) / qhat
};

/// A behavior distribution q-hat with evaluable density: the raw generator,
/// the Eq.-style nucleus mixture, or the MCTS mixture. One instance is meant
/// to live for a single (models, context) snapshot; conditional MCTS decodes
/// once at construction and keeps the Dirac frozen.
class BehaviorDist {
 public:
  static BehaviorDist pure(const TabularGenerator& gen, const PrefixDiscriminator& disc,
                           int ctx);
  static BehaviorDist nucleus_mixture(const TabularGenerator& gen,
                                      const PrefixDiscriminator& disc, int ctx,
                                      const MixtureSpec& spec, const NucleusSpec& nucleus);
  static BehaviorDist mcts_mixture(const TabularGenerator& gen,
                                   const PrefixDiscriminator& disc, int ctx,
                                   const MixtureSpec& spec, const MctsConfig& cfg,
                                   std::uint64_t tag = 0);

  Sequence sample(Rng& rng);
  double density(const Sequence& y);
  DrawResult sample_with_weight(Rng& rng);

  /// Frozen decode backing a conditional MCTS mixture, if any.
  const MctsDecodeOutput* frozen_decode() const;

 private:
  BehaviorDist(const TabularGenerator& gen, const PrefixDiscriminator& disc, int ctx);

  const TabularGenerator* gen_;
  const PrefixDiscriminator* disc_;
  int ctx_;
  enum class Kind { pure, nucleus, mcts } kind_ = Kind::pure;
  MixtureSpec mixture_;
  NucleusSpec nucleus_;
  std::shared_ptr<MctsSampler> mcts_;
  std::optional<MctsDecodeOutput> frozen_;
};

/// Draws one sample with its mixture density and raw importance weight
/// (spec-level convenience wrapper; the guarantee w_raw <= D(y)/eps holds by
/// construction because qhat >= eps * p_theta(y) > 0).
DrawResult mixture_sample_and_density(const TabularGenerator& gen,
                                      const PrefixDiscriminator& disc, int ctx,
                                      const MixtureSpec& spec,
                                      const NucleusSpec& nucleus,
                                      const MctsConfig* mcts_cfg, Rng& rng);

}  // namespace gcn
