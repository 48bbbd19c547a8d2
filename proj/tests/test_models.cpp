#include "doctest.h"

#include <cmath>

#include "gcn/models.hpp"
#include "test_support.hpp"

using namespace gcn;
using gcn::testing::seq;

namespace {

const SpaceConfig kTiny{Vocab{1}, 2, 0};     // sequences [0,eos], [0,0]
const SpaceConfig kPair{Vocab{2}, 1, 0};     // sequences [0], [1]
const SpaceConfig kMedium{Vocab{3}, 3, 0};

}  // namespace

TEST_CASE("gen_logprob: uniform per-step softmax over the unmasked steps") {
  TabularGenerator gen(kTiny);
  // Step 1 admits only the ordinary token; steps 2.. mix token and EOS.
  CHECK(gen_logprob(gen, 0, seq({0, 1})) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(gen_logprob(gen, 0, seq({0, 0})) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

  TabularGenerator deep({Vocab{1}, 3, 0});
  // Two free binary steps: log(0.5) + log(0.5).
  CHECK(gen_logprob(deep, 0, seq({0, 0, 1})) ==
        doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("gen_logprob: degenerate single-sequence space scores certainty") {
  TabularGenerator gen({Vocab{1}, 1, 0});
  CHECK(gen_logprob(gen, 0, seq({0})) == 0.0);
}

TEST_CASE("gen_logprob: masses sum to one over the enumeration") {
  for (std::uint64_t s = 0; s < 8; ++s) {
    for (const SpaceConfig& cfg : {kTiny, kPair, kMedium, SpaceConfig{Vocab{4}, 2, 3}}) {
      const TabularGenerator gen = testing::random_generator(cfg, s, 2.0);
      SpacePtr sp = make_space(cfg);
      for (int ctx = 0; ctx < cfg.context_count(); ++ctx) {
        double total = 0.0;
        for (const Sequence& y : sp->sequences()) total += std::exp(gen_logprob(gen, ctx, y));
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("gen_logprob: unknown context rejected") {
  TabularGenerator gen(kPair);
  CHECK_THROWS_AS(gen_logprob(gen, 1, seq({0})), Error);
  TabularGenerator cond({Vocab{2}, 1, 3});
  CHECK_NOTHROW(gen_logprob(cond, 2, seq({0})));
  CHECK_THROWS_AS(gen_logprob(cond, 3, seq({0})), Error);
}

TEST_CASE("gen_sample: empirical frequencies match exact masses within 3 SE") {
  const TabularGenerator gen = testing::random_generator({Vocab{2}, 2, 0}, 42, 1.0);
  SpacePtr sp = make_space(gen.space());
  const ExactDist exact = generator_dist(gen, 0, sp);
  const int n = 100000;
  std::vector<int> counts(sp->size(), 0);
  Rng rng(777);
  for (int i = 0; i < n; ++i) ++counts[sp->index_of(gen_sample(gen, 0, 1.0, rng))];
  for (std::size_t i = 0; i < sp->size(); ++i) {
    const double p = exact.prob(i);
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(counts[i] / static_cast<double>(n) - p) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("gen_sample: vanishing temperature takes the modal sequence") {
  TabularGenerator gen({Vocab{2}, 2, 0});
  gen.set_logits(0, Prefix{}, {5.0, 0.0, 0.0});
  gen.set_logits(0, Prefix{0}, {0.0, 0.0, 5.0});
  Rng rng(1);
  const Sequence greedy = gen_sample(gen, 0, 1e-9, rng);
  CHECK(greedy == seq({0, 2}));
  SpacePtr sp = make_space(gen.space());
  CHECK(sp->index_of(greedy) == generator_dist(gen, 0, sp).modal_index());
}

TEST_CASE("gen_sample: identical seeds give identical draws") {
  const TabularGenerator gen = testing::random_generator(kMedium, 5, 1.5);
  Rng a(123456);
  Rng b(123456);
  for (int i = 0; i < 50; ++i) {
    CHECK(gen_sample(gen, 0, 0.9, a) == gen_sample(gen, 0, 0.9, b));
  }
}

TEST_CASE("gen_grad_logprob: every entry row sums to zero") {
  const TabularGenerator gen = testing::random_generator(kMedium, 11, 1.0);
  SpacePtr sp = make_space(kMedium);
  for (const Sequence& y : sp->sequences()) {
    const GradTable g = gen_grad_logprob(gen, 0, y);
    for (const auto& [ctx, table] : g.entries) {
      for (const auto& [prefix, row] : table) {
        double sum = 0.0;
        for (double x : row) sum += x;
        CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("gen_grad_logprob: uniform two-symbol step gives +-0.5") {
  TabularGenerator gen(kTiny);
  const GradTable g = gen_grad_logprob(gen, 0, seq({0, 1}));
  const auto& row = g.entries.at(0).at(Prefix{0});  // step over {token, EOS}, EOS chosen
  CHECK(row[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(row[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gen_grad_logprob: matches central finite differences on 20 seeded configs") {
  int checked = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SpaceConfig cfg = (s % 2 == 0) ? kMedium : SpaceConfig{Vocab{2}, 2, 2};
    const TabularGenerator gen = testing::random_generator(cfg, 100 + s, 1.5);
    SpacePtr sp = make_space(cfg);
    Rng rng(s);
    const int ctx = static_cast<int>(s) % cfg.context_count();
    const Sequence y = gen_sample(gen, ctx, 1.0, rng);
    CHECK(testing::gen_grad_max_rel_err(gen, ctx, y) < 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("disc_score: sigmoid anchor points") {
  PrefixDiscriminator disc(kPair);
  CHECK(disc_score(disc, 0, seq({0})) == 0.5);  // unseen prefix
  disc.set_logit(0, Prefix{0}, 20.0);
  CHECK(disc_score(disc, 0, seq({0})) == doctest::Approx(1.0).epsilon(1e-8));
  disc.set_logit(0, Prefix{1}, std::log(3.0));
  CHECK(disc_score(disc, 0, seq({1})) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("disc_update: identical real and fake batches are a fixed point at phi=0") {
  PrefixDiscriminator disc(kMedium);
  const Batch batch{{0, seq({0, 1, 3})}, {0, seq({2, 2, 0})}};
  disc_update(disc, batch, batch, 1.0);
  for (const Example& ex : batch)
    for (std::size_t j = 1; j <= ex.y.tokens.size(); ++j)
      CHECK(disc.logit(0, PrefixView(ex.y.tokens.data(), j)) == 0.0);
}

TEST_CASE("disc_update: single real prefix at phi=0 with lr=1 lands on 0.5") {
  PrefixDiscriminator disc(kPair);
  disc_update(disc, {{0, seq({0})}}, {{0, seq({1})}}, 1.0);
  CHECK(disc.logit(0, Prefix{0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(disc.logit(0, Prefix{1}) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("disc gradient matches finite differences of the prefix objective") {
  const SpaceConfig cfg = kMedium;
  PrefixDiscriminator disc = testing::random_discriminator(cfg, 3, 1.0);
  const TabularGenerator gen = testing::random_generator(cfg, 4, 1.0);
  Rng rng(9);
  Batch reals;
  Batch fakes;
  for (int i = 0; i < 4; ++i) {
    reals.push_back({0, gen_sample(gen, 0, 1.0, rng)});
    fakes.push_back({0, gen_sample(gen, 0, 1.0, rng)});
  }
  const DiscGrad g = disc_prefix_grad(disc, reals, fakes);
  for (const auto& [ctx, table] : g.entries) {
    for (const auto& [prefix, got] : table) {
      const double fd = testing::fd_disc_entry(disc, reals, fakes, ctx, prefix);
      CHECK(std::abs(fd - got) / std::max(std::abs(got), 1e-6) < 1e-4);
    }
  }
}

TEST_CASE("disc_update strictly increases the objective at small lr") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    PrefixDiscriminator disc = testing::random_discriminator(kMedium, 20 + s, 1.0);
    const TabularGenerator gen = testing::random_generator(kMedium, 30 + s, 1.0);
    Rng rng(40 + s);
    Batch reals;
    Batch fakes;
    for (int i = 0; i < 6; ++i) {
      reals.push_back({0, gen_sample(gen, 0, 1.0, rng)});
      fakes.push_back({0, gen_sample(gen, 0, 1.0, rng)});
    }
    const double before = disc_prefix_objective(disc, reals, fakes);
    disc_update(disc, reals, fakes, 1e-3);
    CHECK(disc_prefix_objective(disc, reals, fakes) > before);
  }
}

TEST_CASE("gen_update_weighted: equal weights reduce to the mean MLE step") {
  const Batch samples{{0, seq({0})}, {0, seq({1})}, {0, seq({0})}};
  const std::vector<double> equal(samples.size(), 0.37);

  TabularGenerator a = testing::random_generator(kPair, 51, 0.5);
  TabularGenerator b = a;
  gen_update_weighted(a, samples, equal, 0.1, true);
  GradTable mean;
  for (const Example& ex : samples)
    mean.axpy(1.0 / static_cast<double>(samples.size()),
              gen_grad_logprob(b, ex.ctx, ex.y));
  apply_gradient(b, mean, 0.1);
  CHECK(max_param_delta(a, b) < 1e-12);
}

TEST_CASE("gen_update_weighted: zero weight masks a sample out") {
  const Batch samples{{0, seq({0})}, {0, seq({1})}};
  TabularGenerator a(kPair);
  gen_update_weighted(a, samples, {1.0, 0.0}, 0.25, true);
  TabularGenerator b(kPair);
  gen_update_weighted(b, {samples[0]}, {1.0}, 0.25, true);
  CHECK(max_param_delta(a, b) < 1e-15);
}

TEST_CASE("gen_update_weighted: all-zero weights raise AllZeroWeights") {
  TabularGenerator gen(kPair);
  const Batch samples{{0, seq({0})}};
  CHECK_THROWS_AS(gen_update_weighted(gen, samples, {0.0}, 0.1, true), AllZeroWeights);
  CHECK_NOTHROW(gen_update_weighted(gen, samples, {0.0}, 0.1, false));
}

TEST_CASE("self-normalized IS step matches the enumerated cooperative gradient") {
  // Two-outcome space, q-hat = p_theta, 1e5 draws, 5% relative error.
  const TabularGenerator gen = testing::random_generator(kPair, 61, 0.7);
  PrefixDiscriminator disc = testing::random_discriminator(kPair, 62, 1.0);
  SpacePtr sp = make_space(kPair);
  const GradTable want = testing::enumerated_cooperative_gradient(gen, disc, 0, sp);

  const int n = 100000;
  Batch samples;
  samples.reserve(n);
  std::vector<double> weights(n);
  Rng rng(63);
  for (int i = 0; i < n; ++i) {
    Sequence y = gen_sample(gen, 0, 1.0, rng);
    weights[static_cast<std::size_t>(i)] = disc_score(disc, 0, y);
    samples.push_back({0, std::move(y)});
  }
  const GradTable got = weighted_logprob_grad(gen, samples, weights, true);
  CHECK(testing::grad_rel_l2_err(got, want) < 0.05);
}

TEST_CASE("generator stays normalized after weighted updates") {
  TabularGenerator gen = testing::random_generator(kMedium, 71, 1.0);
  SpacePtr sp = make_space(kMedium);
  Rng rng(72);
  for (int step = 0; step < 5; ++step) {
    Batch samples;
    std::vector<double> w;
    for (int i = 0; i < 8; ++i) {
      samples.push_back({0, gen_sample(gen, 0, 1.0, rng)});
      w.push_back(rng.uniform01());
    }
    gen_update_weighted(gen, samples, w, 0.3, true);
    double total = 0.0;
    for (const Sequence& y : sp->sequences()) total += std::exp(gen_logprob(gen, 0, y));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("identical seeds give bit-identical parameter trajectories") {
  auto run_once = [] {
    TabularGenerator gen(kMedium);
    PrefixDiscriminator disc(kMedium);
    Rng rng(9001);
    for (int step = 0; step < 4; ++step) {
      Batch reals;
      Batch fakes;
      std::vector<double> w;
      for (int i = 0; i < 6; ++i) {
        reals.push_back({0, gen_sample(gen, 0, 1.0, rng)});
        fakes.push_back({0, gen_sample(gen, 0, 1.0, rng)});
        w.push_back(disc_score(disc, 0, fakes.back().y));
      }
      disc_update(disc, reals, fakes, 0.05);
      gen_update_weighted(gen, fakes, w, 0.2, true);
    }
    return gen;
  };
  CHECK(max_param_delta(run_once(), run_once()) == 0.0);
}

TEST_CASE("fit_generator realizes an exact distribution") {
  SpacePtr sp = make_space(kMedium);
  const ExactDist target = ExactDist::dirichlet(sp, 0.6, 99);
  const TabularGenerator gen = fit_generator(kMedium, {target});
  const ExactDist realized = generator_dist(gen, 0, sp);
  CHECK(kl_divergence(target, realized) < 1e-12);
  CHECK(total_variation(target, realized) < 1e-9);
}
