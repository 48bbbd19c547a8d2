#include "gcn/seqspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

namespace gcn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// common.hpp out-of-line pieces
// ---------------------------------------------------------------------------

int thread_cap() {
  if (const char* env = std::getenv("GCNLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(n, thread_cap());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// SpaceConfig / Sequence
// ---------------------------------------------------------------------------

std::uint64_t SpaceConfig::sequence_count() const {
  if (vocab.size < 1) throw Error("vocab size must be >= 1");
  if (max_len < 1) throw Error("max_len must be >= 1");
  if (num_contexts < 0) throw Error("num_contexts must be >= 0");
  std::uint64_t total = 0;
  std::uint64_t pow = 1;
  const std::uint64_t base = static_cast<std::uint64_t>(vocab.size);
  for (int k = 1; k <= max_len; ++k) {
    if (pow > kEnumerationBudget / base) {
      throw BudgetExceeded("sequence space exceeds enumeration budget of " +
                           std::to_string(kEnumerationBudget));
    }
    pow *= base;
    total += pow;
    if (total > kEnumerationBudget) {
      throw BudgetExceeded("sequence space exceeds enumeration budget of " +
                           std::to_string(kEnumerationBudget));
    }
  }
  return total;
}

void validate_sequence(const SpaceConfig& space, const Sequence& y) {
  const Vocab& v = space.vocab;
  if (y.tokens.empty()) throw Error("empty sequence");
  for (std::size_t i = 0; i < y.tokens.size(); ++i) {
    const TokenId t = y.tokens[i];
    if (t < 0 || t > v.eos()) throw Error("token id out of range");
    if (t == v.eos() && i + 1 != y.tokens.size())
      throw Error("EOS not in final position");
  }
  const int k = y.content_length(v);
  if (y.ends_with_eos(v)) {
    if (k < 1 || k > space.max_len - 1)
      throw Error("EOS-terminated sequence has invalid content length");
  } else {
    if (k != space.max_len)
      throw Error("unterminated sequence shorter than max_len");
  }
}

std::vector<Sequence> enumerate_sequences(const SpaceConfig& space) {
  const std::uint64_t total = space.sequence_count();
  std::vector<Sequence> out;
  out.reserve(total);
  const int V = space.vocab.size;
  const TokenId eos = space.vocab.eos();
  std::vector<TokenId> buf;
  // Lengths ascending; lexicographic within a length via odometer increment.
  for (int k = 1; k <= space.max_len; ++k) {
    buf.assign(k, 0);
    while (true) {
      Sequence s{buf};
      if (k < space.max_len) s.tokens.push_back(eos);
      out.push_back(std::move(s));
      int pos = k - 1;
      while (pos >= 0 && buf[pos] == V - 1) buf[pos--] = 0;
      if (pos < 0) break;
      ++buf[pos];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SequenceSpace
// ---------------------------------------------------------------------------

SequenceSpace::SequenceSpace(SpaceConfig cfg) : cfg_(cfg) {
  seqs_ = enumerate_sequences(cfg_);
  index_.reserve(seqs_.size());
  for (std::size_t i = 0; i < seqs_.size(); ++i) index_.emplace(seqs_[i].tokens, i);
}

std::size_t SequenceSpace::index_of(const Sequence& y) const {
  auto it = index_.find(y.tokens);
  if (it == index_.end()) throw Error("sequence not in enumerated space");
  return it->second;
}

SpacePtr make_space(const SpaceConfig& cfg) {
  return std::make_shared<const SequenceSpace>(cfg);
}

// ---------------------------------------------------------------------------
// ExactDist
// ---------------------------------------------------------------------------

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

ExactDist ExactDist::from_linear(SpacePtr space, std::vector<double> masses) {
  if (masses.size() != space->size())
    throw Error("mass table size does not match enumerated space");
  std::vector<double> logw(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (masses[i] < 0.0 || !std::isfinite(masses[i]))
      throw Error("negative or non-finite probability mass");
    logw[i] = masses[i] > 0.0 ? std::log(masses[i]) : kNegInf;
  }
  return from_log_unnormalized(std::move(space), std::move(logw));
}

ExactDist ExactDist::from_log_unnormalized(SpacePtr space, std::vector<double> logw) {
  if (logw.size() != space->size())
    throw Error("log-mass table size does not match enumerated space");
  const double lz = log_sum_exp(logw);
  if (!std::isfinite(lz)) throw DegenerateTarget("distribution has zero total mass");
  for (double& lw : logw) lw -= lz;
  return ExactDist(std::move(space), std::move(logw));
}

ExactDist ExactDist::uniform(SpacePtr space) {
  std::vector<double> logw(space->size(), 0.0);
  return from_log_unnormalized(std::move(space), std::move(logw));
}

namespace {

// Marsaglia-Tsang gamma draw on the portable Rng; alpha < 1 boosted through
// the alpha+1 trick.
double gamma_draw(Rng& rng, double alpha) {
  if (alpha < 1.0) {
    const double u = std::max(rng.uniform01(), 1e-300);
    return gamma_draw(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    // Box-Muller normal from two uniforms.
    const double u1 = std::max(rng.uniform01(), 1e-300);
    const double u2 = rng.uniform01();
    const double x = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    const double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    const double v3 = v * v * v;
    const double u = std::max(rng.uniform01(), 1e-300);
    if (std::log(u) < 0.5 * x * x + d - d * v3 + d * std::log(v3)) return d * v3;
  }
}

}  // namespace

ExactDist ExactDist::dirichlet(SpacePtr space, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw Error("dirichlet alpha must be positive");
  Rng rng(mix_seed(seed, 0xd1d1ULL));
  std::vector<double> masses(space->size());
  for (double& m : masses) m = gamma_draw(rng, alpha);
  return from_linear(std::move(space), std::move(masses));
}

std::vector<double> ExactDist::linear() const {
  std::vector<double> p(logp_.size());
  for (std::size_t i = 0; i < logp_.size(); ++i) p[i] = std::exp(logp_[i]);
  return p;
}

std::size_t ExactDist::modal_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logp_.size(); ++i)
    if (logp_[i] > logp_[best]) best = i;
  return best;
}

namespace {

void require_same_support(const ExactDist& p, const ExactDist& q) {
  if (!(p.space()->config() == q.space()->config()))
    throw SupportViolation("distributions defined over different spaces");
}

}  // namespace

double kl_divergence(const ExactDist& p, const ExactDist& q) {
  require_same_support(p, q);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lp = p.log_prob(i);
    if (!std::isfinite(lp)) continue;  // p(y) = 0
    const double lq = q.log_prob(i);
    if (!std::isfinite(lq))
      throw SupportViolation("q(y) = 0 where p(y) > 0 in KL(p||q)");
    kl += std::exp(lp) * (lp - lq);
  }
  return std::max(kl, 0.0);
}

double total_variation(const ExactDist& p, const ExactDist& q) {
  require_same_support(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p.prob(i) - q.prob(i));
  return 0.5 * s;
}

}  // namespace gcn
