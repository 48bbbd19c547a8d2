#pragma once

#include <vector>

#include "gcn/models.hpp"

namespace gcn {

/// Sentence-level BLEU with add-one smoothing on n-gram counts for n >= 2;
/// the order is clipped to the shortest sequence involved.
struct BleuSpec {
  int max_n = 4;
};

struct CurvePoint {
  double temperature = 0.0;
  double neg_bleu = 0.0;
  double self_bleu = 0.0;
};

/// Geometric mean of modified n-gram precisions times the brevity penalty
/// exp(min(0, 1 - r/c)). EOS tokens are stripped before n-gram extraction.
/// An empty candidate scores 0.
double bleu(const Sequence& candidate, const std::vector<Sequence>& references,
            const BleuSpec& spec, const Vocab& vocab);

/// Mean over samples of bleu(sample_i, all other samples). Needs >= 2 samples.
double self_bleu(const std::vector<Sequence>& samples, const BleuSpec& spec,
                 const Vocab& vocab);

/// For each temperature (ascending), draws n_samples from the generator and
/// scores negative BLEU against the reference pool plus self-BLEU among the
/// draws.
std::vector<CurvePoint> temperature_curve(const TabularGenerator& gen, int ctx,
                                          const std::vector<Sequence>& references,
                                          const std::vector<double>& temperatures,
                                          int n_samples, const BleuSpec& spec, Rng& rng);

}  // namespace gcn
