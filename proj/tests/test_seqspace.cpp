#include "doctest.h"

#include <cmath>
#include <set>

#include "gcn/seqspace.hpp"
#include "test_support.hpp"

using namespace gcn;
using gcn::testing::seq;

namespace {

SpacePtr two_outcome_space() {
  return make_space({Vocab{2}, 1, 0});
}

ExactDist table_dist(const SpacePtr& sp, std::vector<double> masses) {
  return ExactDist::from_linear(sp, std::move(masses));
}

}  // namespace

TEST_CASE("enumerate: singleton space has exactly one forced-terminal sequence") {
  const auto seqs = enumerate_sequences({Vocab{1}, 1, 0});
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0] == seq({0}));  // length cap reached, no EOS emitted
}

TEST_CASE("enumerate: two tokens, max_len 2 gives the six sequences in order") {
  const SpaceConfig cfg{Vocab{2}, 2, 0};
  const auto seqs = enumerate_sequences(cfg);
  REQUIRE(seqs.size() == 6);
  const TokenId e = cfg.vocab.eos();
  CHECK(seqs[0] == seq({0, e}));
  CHECK(seqs[1] == seq({1, e}));
  CHECK(seqs[2] == seq({0, 0}));
  CHECK(seqs[3] == seq({0, 1}));
  CHECK(seqs[4] == seq({1, 0}));
  CHECK(seqs[5] == seq({1, 1}));
}

TEST_CASE("enumerate: budget guard rejects vocab 10 max_len 8") {
  CHECK_THROWS_AS(enumerate_sequences({Vocab{10}, 8, 0}), BudgetExceeded);
}

TEST_CASE("enumerate: duplicate-free and counts match the closed form") {
  for (const auto& [v, l] : std::vector<std::pair<int, int>>{
           {1, 1}, {1, 4}, {2, 3}, {3, 3}, {5, 2}, {4, 4}}) {
    const SpaceConfig cfg{Vocab{v}, l, 0};
    const auto seqs = enumerate_sequences(cfg);
    std::uint64_t expect = 0;
    std::uint64_t pw = 1;
    for (int k = 1; k <= l; ++k) {
      pw *= static_cast<std::uint64_t>(v);
      expect += pw;
    }
    CHECK(seqs.size() == expect);
    CHECK(cfg.sequence_count() == expect);
    std::set<std::vector<TokenId>> uniq;
    for (const auto& s : seqs) {
      validate_sequence(cfg, s);
      uniq.insert(s.tokens);
    }
    CHECK(uniq.size() == seqs.size());
  }
}

TEST_CASE("validate_sequence rejects malformed token lists") {
  const SpaceConfig cfg{Vocab{2}, 2, 0};
  CHECK_THROWS_AS(validate_sequence(cfg, seq({})), Error);
  CHECK_THROWS_AS(validate_sequence(cfg, seq({2, 0})), Error);     // EOS not last
  CHECK_THROWS_AS(validate_sequence(cfg, seq({0})), Error);        // unterminated short
  CHECK_THROWS_AS(validate_sequence(cfg, seq({0, 0, 2})), Error);  // EOS past the cap
  CHECK_THROWS_AS(validate_sequence(cfg, seq({0, 0, 0})), Error);  // too long
  CHECK_THROWS_AS(validate_sequence(cfg, seq({5, 2})), Error);     // unknown token
  CHECK_NOTHROW(validate_sequence(cfg, seq({1, 2})));
  CHECK_NOTHROW(validate_sequence(cfg, seq({1, 0})));
}

TEST_CASE("kl: identical distributions give exactly zero") {
  auto sp = two_outcome_space();
  const auto p = table_dist(sp, {0.3, 0.7});
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK(total_variation(p, p) == 0.0);
}

TEST_CASE("kl: hand-derived two-outcome value") {
  auto sp = two_outcome_space();
  const auto p = table_dist(sp, {0.8, 0.2});
  const auto q = table_dist(sp, {0.5, 0.5});
  const double expect = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
  CHECK(kl_divergence(p, q) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(kl_divergence(p, q) == doctest::Approx(0.19274).epsilon(1e-4));
}

TEST_CASE("kl: disjoint support raises the support violation") {
  auto sp = two_outcome_space();
  const auto p = table_dist(sp, {1.0, 0.0});
  const auto q = table_dist(sp, {0.0, 1.0});
  CHECK_THROWS_AS(kl_divergence(p, q), SupportViolation);
  CHECK(total_variation(p, q) == doctest::Approx(1.0));
}

TEST_CASE("total variation: hand value") {
  auto sp = two_outcome_space();
  const auto p = table_dist(sp, {0.8, 0.2});
  const auto q = table_dist(sp, {0.5, 0.5});
  CHECK(total_variation(p, q) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("kl is non-negative and positive off the diagonal") {
  auto sp = make_space({Vocab{3}, 2, 0});
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = ExactDist::dirichlet(sp, 0.7, s);
    const auto q = ExactDist::dirichlet(sp, 0.7, s + 1000);
    const double kl = kl_divergence(p, q);
    CHECK(kl >= 0.0);
    CHECK(kl > 1e-9);  // independent draws never coincide
    CHECK(kl_divergence(p, p) == 0.0);
  }
}

TEST_CASE("ExactDist constructors normalize to unit mass") {
  auto sp = make_space({Vocab{3}, 3, 0});
  const auto d1 = ExactDist::from_linear(sp, std::vector<double>(sp->size(), 3.25));
  const auto d2 = ExactDist::dirichlet(sp, 0.5, 7);
  const auto d3 = ExactDist::uniform(sp);
  for (const ExactDist* d : {&d1, &d2, &d3}) {
    double total = 0.0;
    for (std::size_t i = 0; i < d->size(); ++i) {
      total += d->prob(i);
      CHECK(d->prob(i) >= 0.0);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(ExactDist::from_linear(sp, {1.0, 2.0}), Error);  // size mismatch
  CHECK_THROWS_AS(ExactDist::from_linear(sp, std::vector<double>(sp->size(), 0.0)),
                  DegenerateTarget);
}

TEST_CASE("modal index ties resolve to the enumeration-first sequence") {
  auto sp = make_space({Vocab{2}, 2, 0});
  std::vector<double> masses(sp->size(), 0.1);
  masses[1] = 0.3;
  masses[4] = 0.3;
  const auto d = ExactDist::from_linear(sp, masses);
  CHECK(d.modal_index() == 1);
}

TEST_CASE("index_of round-trips and rejects foreign sequences") {
  auto sp = make_space({Vocab{2}, 2, 0});
  for (std::size_t i = 0; i < sp->size(); ++i) CHECK(sp->index_of(sp->at(i)) == i);
  CHECK_THROWS_AS(sp->index_of(seq({0})), Error);
}
