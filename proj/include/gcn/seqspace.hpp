#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "gcn/common.hpp"

namespace gcn {

using TokenId = int;

/// Finite token alphabet. Ordinary tokens are 0..size-1; the reserved
/// end-of-sequence id is `size` (always the last id).
struct Vocab {
  int size = 1;

  TokenId eos() const { return size; }
  int num_symbols() const { return size + 1; }  // ordinary tokens + EOS
};

inline constexpr std::uint64_t kEnumerationBudget = 10'000'000;

struct SpaceConfig {
  Vocab vocab;
  int max_len = 1;
  int num_contexts = 0;  // 0 = unconditional (a single empty context, id 0)

  /// Number of complete sequences: sum_{k=1..max_len} size^k.
  /// Throws BudgetExceeded when it does not fit the enumeration budget.
  std::uint64_t sequence_count() const;

  int context_count() const { return num_contexts == 0 ? 1 : num_contexts; }

  bool operator==(const SpaceConfig& o) const {
    return vocab.size == o.vocab.size && max_len == o.max_len &&
           num_contexts == o.num_contexts;
  }
};

/// A complete sequence. Token list holds 1..max_len-1 content tokens followed
/// by EOS, or exactly max_len content tokens with no EOS (termination forced
/// at the length cap). EOS never appears before the last position.
struct Sequence {
  std::vector<TokenId> tokens;

  bool operator==(const Sequence& o) const { return tokens == o.tokens; }

  bool ends_with_eos(const Vocab& v) const {
    return !tokens.empty() && tokens.back() == v.eos();
  }
  int content_length(const Vocab& v) const {
    return static_cast<int>(tokens.size()) - (ends_with_eos(v) ? 1 : 0);
  }
};

/// Throws Error unless y is a valid complete sequence of the space.
void validate_sequence(const SpaceConfig& space, const Sequence& y);

/// All complete sequences, shortest first, lexicographic within each length.
std::vector<Sequence> enumerate_sequences(const SpaceConfig& space);

/// Enumerated universe with index lookup; shared by all exact distributions.
class SequenceSpace {
 public:
  explicit SequenceSpace(SpaceConfig cfg);

  const SpaceConfig& config() const { return cfg_; }
  const std::vector<Sequence>& sequences() const { return seqs_; }
  std::size_t size() const { return seqs_.size(); }
  const Sequence& at(std::size_t i) const { return seqs_[i]; }

  /// Enumeration index of y; throws Error when y is not in the space.
  std::size_t index_of(const Sequence& y) const;

 private:
  SpaceConfig cfg_;
  std::vector<Sequence> seqs_;
  std::unordered_map<std::vector<TokenId>, std::size_t, TokenVecHash> index_;
};

using SpacePtr = std::shared_ptr<const SequenceSpace>;

SpacePtr make_space(const SpaceConfig& cfg);

/// Explicit probability table over an enumerated space. Masses are stored in
/// log space; constructors normalize so total linear mass is 1 (zero-mass
/// entries allowed).
class ExactDist {
 public:
  static ExactDist from_linear(SpacePtr space, std::vector<double> masses);
  static ExactDist from_log_unnormalized(SpacePtr space, std::vector<double> logw);
  static ExactDist uniform(SpacePtr space);
  /// Dirichlet(alpha,...,alpha) draw over the space, deterministic in seed.
  static ExactDist dirichlet(SpacePtr space, double alpha, std::uint64_t seed);

  const SpacePtr& space() const { return space_; }
  std::size_t size() const { return logp_.size(); }

  double prob(std::size_t i) const { return std::exp(logp_[i]); }
  double log_prob(std::size_t i) const { return logp_[i]; }
  const std::vector<double>& log_probs() const { return logp_; }
  std::vector<double> linear() const;

  double prob_of(const Sequence& y) const { return prob(space_->index_of(y)); }

  /// Index of the largest mass; ties resolved to the enumeration-first
  /// (lexicographically smallest) sequence.
  std::size_t modal_index() const;

 private:
  ExactDist(SpacePtr space, std::vector<double> logp)
      : space_(std::move(space)), logp_(std::move(logp)) {}

  SpacePtr space_;
  std::vector<double> logp_;
};

/// KL(p||q) in nats over identical supports; terms with p(y)=0 contribute 0.
/// Throws SupportViolation when p(y) > 0 and q(y) = 0.
double kl_divergence(const ExactDist& p, const ExactDist& q);

/// Total variation distance (1/2) sum |p - q|, in [0,1].
double total_variation(const ExactDist& p, const ExactDist& q);

/// log(sum(exp(x))) guarded against empty/-inf input.
double log_sum_exp(std::span<const double> xs);

}  // namespace gcn
