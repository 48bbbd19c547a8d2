#include "gcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gcn {

namespace {

std::vector<TokenId> content_tokens(const Sequence& s, const Vocab& v) {
  std::vector<TokenId> out = s.tokens;
  while (!out.empty() && out.back() == v.eos()) out.pop_back();
  return out;
}

using NgramCounts = std::map<std::vector<TokenId>, int>;

NgramCounts count_ngrams(const std::vector<TokenId>& toks, int n) {
  NgramCounts counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i)
    ++counts[std::vector<TokenId>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                  toks.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  return counts;
}

}  // namespace

double bleu(const Sequence& candidate, const std::vector<Sequence>& references,
            const BleuSpec& spec, const Vocab& vocab) {
  if (spec.max_n < 1) throw Error("bleu max_n must be >= 1");
  if (references.empty()) throw Error("bleu needs at least one reference");
  const std::vector<TokenId> cand = content_tokens(candidate, vocab);
  if (cand.empty()) return 0.0;
  std::vector<std::vector<TokenId>> refs;
  refs.reserve(references.size());
  int shortest = static_cast<int>(cand.size());
  for (const Sequence& r : references) {
    refs.push_back(content_tokens(r, vocab));
    shortest = std::min(shortest, static_cast<int>(refs.back().size()));
  }
  const int order = std::max(1, std::min(spec.max_n, shortest));

  double log_precisions = 0.0;
  for (int n = 1; n <= order; ++n) {
    const NgramCounts cand_counts = count_ngrams(cand, n);
    int total = 0;
    int matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      int best_ref = 0;
      for (const auto& ref : refs) {
        const NgramCounts rc = count_ngrams(ref, n);
        auto it = rc.find(gram);
        if (it != rc.end()) best_ref = std::max(best_ref, it->second);
      }
      matched += std::min(count, best_ref);
    }
    double precision;
    if (n == 1) {
      if (matched == 0) return 0.0;
      precision = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      precision = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    log_precisions += std::log(precision);
  }

  // Brevity penalty against the reference length closest to the candidate
  // (ties resolve to the shorter reference).
  const int c = static_cast<int>(cand.size());
  int r = static_cast<int>(refs.front().size());
  for (const auto& ref : refs) {
    const int len = static_cast<int>(ref.size());
    const int cur = std::abs(len - c);
    const int best = std::abs(r - c);
    if (cur < best || (cur == best && len < r)) r = len;
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / c);
  return bp * std::exp(log_precisions / order);
}

double self_bleu(const std::vector<Sequence>& samples, const BleuSpec& spec,
                 const Vocab& vocab) {
  if (samples.size() < 2) throw Error("self_bleu needs at least 2 samples");
  double total = 0.0;
  std::vector<Sequence> others;
  others.reserve(samples.size() - 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    others.clear();
    for (std::size_t j = 0; j < samples.size(); ++j)
      if (j != i) others.push_back(samples[j]);
    total += bleu(samples[i], others, spec, vocab);
  }
  return total / static_cast<double>(samples.size());
}

std::vector<CurvePoint> temperature_curve(const TabularGenerator& gen, int ctx,
                                          const std::vector<Sequence>& references,
                                          const std::vector<double>& temperatures,
                                          int n_samples, const BleuSpec& spec, Rng& rng) {
  if (!std::is_sorted(temperatures.begin(), temperatures.end()))
    throw Error("temperatures must be sorted ascending");
  if (n_samples < 2) throw Error("temperature_curve needs n_samples >= 2");
  if (references.empty()) throw Error("temperature_curve needs reference samples");
  const Vocab& vocab = gen.space().vocab;
  std::vector<CurvePoint> out;
  out.reserve(temperatures.size());
  std::vector<Sequence> draws(static_cast<std::size_t>(n_samples));
  for (double t : temperatures) {
    if (!(t > 0.0)) throw Error("temperature must be positive");
    for (auto& d : draws) d = gen_sample(gen, ctx, t, rng);
    double mean_bleu = 0.0;
    for (const auto& d : draws) mean_bleu += bleu(d, references, spec, vocab);
    mean_bleu /= static_cast<double>(n_samples);
    out.push_back({t, -mean_bleu, self_bleu(draws, spec, vocab)});
  }
  return out;
}

}  // namespace gcn
