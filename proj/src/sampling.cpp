#include "gcn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gcn {

// ---------------------------------------------------------------------------
// Nucleus
// ---------------------------------------------------------------------------

std::vector<int> nucleus_set(const std::vector<double>& dist, const NucleusSpec& spec) {
  if (!(spec.sigma > 0.0) || spec.sigma > 1.0) throw Error("sigma must lie in (0,1]");
  std::vector<int> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] > dist[b];
    return a < b;
  });
  std::vector<int> chosen;
  double mass = 0.0;
  for (int id : order) {
    if (dist[static_cast<std::size_t>(id)] <= 0.0) break;
    chosen.push_back(id);
    mass += dist[static_cast<std::size_t>(id)];
    if (mass >= spec.sigma) break;
  }
  if (chosen.empty()) throw Error("nucleus of an all-zero distribution");
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

double nucleus_step_factor(const std::vector<double>& dist, const NucleusSpec& spec,
                           int symbol) {
  const std::vector<int> set = nucleus_set(dist, spec);
  if (!std::binary_search(set.begin(), set.end(), symbol)) return 0.0;
  double mass = 0.0;
  for (int id : set) mass += dist[static_cast<std::size_t>(id)];
  return dist[static_cast<std::size_t>(symbol)] / mass;
}

double nucleus_density(const TabularGenerator& gen, int ctx, const Sequence& y,
                       const NucleusSpec& spec) {
  gen.check_context(ctx);
  validate_sequence(gen.space(), y);
  double density = 1.0;
  for (std::size_t j = 0; j < y.tokens.size(); ++j) {
    const std::vector<double> dist = gen.step_dist(ctx, PrefixView(y.tokens.data(), j));
    const double f = nucleus_step_factor(dist, spec, y.tokens[j]);
    if (f == 0.0) return 0.0;
    density *= f;
  }
  return density;
}

Sequence nucleus_sample(const TabularGenerator& gen, int ctx, const NucleusSpec& spec,
                        Rng& rng) {
  gen.check_context(ctx);
  const SpaceConfig& space = gen.space();
  Sequence y;
  while (static_cast<int>(y.tokens.size()) < space.max_len) {
    const std::vector<double> dist = gen.step_dist(ctx, PrefixView(y.tokens));
    const std::vector<int> set = nucleus_set(dist, spec);
    std::vector<double> w(set.size());
    for (std::size_t i = 0; i < set.size(); ++i)
      w[i] = dist[static_cast<std::size_t>(set[i])];
    const int symbol = set[static_cast<std::size_t>(rng.categorical(w))];
    y.tokens.push_back(symbol);
    if (symbol == space.vocab.eos()) break;
  }
  return y;
}

// ---------------------------------------------------------------------------
// PUCT tree
// ---------------------------------------------------------------------------

int puct_select(const std::vector<PuctChild>& children, double c_puct, int parent_visits) {
  if (children.empty()) throw Error("selection over an empty child set");
  const double sqrt_parent = std::sqrt(static_cast<double>(parent_visits));
  int best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < children.size(); ++i) {
    const PuctChild& c = children[i];
    const double score =
        c.value + c_puct * c.prior * sqrt_parent / (1.0 + static_cast<double>(c.visits));
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

namespace {

bool prefix_is_terminal(const SpaceConfig& space, const Prefix& prefix) {
  if (!prefix.empty() && prefix.back() == space.vocab.eos()) return true;
  return static_cast<int>(prefix.size()) == space.max_len;
}

}  // namespace

MctsTree::MctsTree(const TabularGenerator& gen, const PrefixDiscriminator& disc, int ctx,
                   const MctsConfig& cfg, Prefix root_prefix)
    : gen_(gen), disc_(disc), ctx_(ctx), cfg_(cfg) {
  if (cfg_.rounds < 1) throw Error("mcts rounds must be >= 1");
  if (cfg_.c_puct < 0.0) throw Error("c_puct must be non-negative");
  MctsNode root;
  root.prefix = std::move(root_prefix);
  root.terminal = prefix_is_terminal(gen_.space(), root.prefix);
  nodes_.push_back(std::move(root));
  if (nodes_[0].terminal) throw Error("mcts rooted at a terminal prefix");
  // Setup pass: the root is expanded and evaluated before any round, so the
  // first selection already sees sqrt(N(root)) = 1.
  expand(0);
  nodes_[0].value = disc_score(disc_, ctx_, PrefixView(nodes_[0].prefix));
  nodes_[0].evaluated = true;
  nodes_[0].visits = 1;
}

int MctsTree::expand(int id) {
  MctsNode& node = nodes_[static_cast<std::size_t>(id)];
  const std::vector<double> step = gen_.step_dist(ctx_, PrefixView(node.prefix));
  const std::vector<int> symbols = nucleus_set(step, NucleusSpec{cfg_.sigma});
  const Prefix base = node.prefix;
  std::vector<int> children;
  children.reserve(symbols.size());
  for (int s : symbols) {
    MctsNode child;
    child.prefix = base;
    child.prefix.push_back(s);
    child.token = s;
    child.parent = id;
    child.prior = step[static_cast<std::size_t>(s)];
    child.terminal = prefix_is_terminal(gen_.space(), child.prefix);
    children.push_back(static_cast<int>(nodes_.size()));
    nodes_.push_back(std::move(child));
  }
  nodes_[static_cast<std::size_t>(id)].children = std::move(children);
  nodes_[static_cast<std::size_t>(id)].expanded = true;
  return id;
}

void MctsTree::run(int rounds) {
  std::vector<int> path;
  std::vector<PuctChild> slate;
  for (int r = 0; r < rounds; ++r) {
    path.assign(1, 0);
    int cur = 0;
    while (nodes_[static_cast<std::size_t>(cur)].expanded &&
           !nodes_[static_cast<std::size_t>(cur)].terminal) {
      const MctsNode& node = nodes_[static_cast<std::size_t>(cur)];
      slate.clear();
      for (int cid : node.children) {
        const MctsNode& c = nodes_[static_cast<std::size_t>(cid)];
        slate.push_back({c.evaluated ? c.value : 0.0, c.visits, c.prior});
      }
      cur = node.children[static_cast<std::size_t>(
          puct_select(slate, cfg_.c_puct, node.visits))];
      path.push_back(cur);
    }
    MctsNode& leaf = nodes_[static_cast<std::size_t>(cur)];
    if (!leaf.terminal && !leaf.expanded) expand(cur);
    const double v = disc_score(disc_, ctx_, PrefixView(nodes_[static_cast<std::size_t>(cur)].prefix));
    if (!nodes_[static_cast<std::size_t>(cur)].evaluated) {
      nodes_[static_cast<std::size_t>(cur)].value = v;
      nodes_[static_cast<std::size_t>(cur)].evaluated = true;
    }
    // Max back-propagation to ancestors; every traversed node gains a visit.
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      MctsNode& a = nodes_[static_cast<std::size_t>(path[i])];
      a.value = std::max(a.value, v);
    }
    for (int id : path) ++nodes_[static_cast<std::size_t>(id)].visits;
  }
  rounds_run_ += rounds;
}

std::vector<double> MctsTree::root_visit_dist() const {
  if (rounds_run_ <= 0) throw Error("visit distribution requested before any round");
  std::vector<double> dist(static_cast<std::size_t>(gen_.space().vocab.num_symbols()), 0.0);
  for (int cid : nodes_[0].children) {
    const MctsNode& c = nodes_[static_cast<std::size_t>(cid)];
    dist[static_cast<std::size_t>(c.token)] =
        static_cast<double>(c.visits) / static_cast<double>(rounds_run_);
  }
  return dist;
}

TokenId MctsTree::best_root_move() const {
  int best = -1;
  int best_visits = -1;
  for (int cid : nodes_[0].children) {
    const MctsNode& c = nodes_[static_cast<std::size_t>(cid)];
    if (c.visits > best_visits) {  // children are in ascending token order
      best_visits = c.visits;
      best = c.token;
    }
  }
  if (best < 0) throw Error("root has no children");
  return best;
}

// ---------------------------------------------------------------------------
// MctsSampler
// ---------------------------------------------------------------------------

MctsSampler::MctsSampler(const TabularGenerator& gen, const PrefixDiscriminator& disc,
                         int ctx, MctsConfig cfg, std::uint64_t tag)
    : gen_(gen), disc_(disc), ctx_(gen.check_context(ctx)), cfg_(cfg), tag_(tag) {
  if (cfg_.rounds < 1) throw Error("mcts rounds must be >= 1");
}

std::vector<double> MctsSampler::visit_dist(const Prefix& prefix) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(prefix);
    if (it != cache_.end()) return it->second;
  }
  MctsTree tree(gen_, disc_, ctx_, cfg_, prefix);
  tree.run(cfg_.rounds);
  std::vector<double> dist = tree.root_visit_dist();
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(prefix, std::move(dist)).first->second;
}

MctsDecodeOutput MctsSampler::decode(Rng& rng, std::vector<MctsStepTrace>* trace) {
  const SpaceConfig& space = gen_.space();
  MctsDecodeOutput out;
  out.ctx = ctx_;
  out.mode = cfg_.mode;
  out.tag = tag_;
  Prefix prefix;
  while (static_cast<int>(prefix.size()) < space.max_len) {
    std::vector<double> dist;
    if (trace) {
      // A traced decode rebuilds the tree to capture node statistics; the
      // result matches the cached distribution because rounds are
      // deterministic.
      MctsTree tree(gen_, disc_, ctx_, cfg_, prefix);
      tree.run(cfg_.rounds);
      dist = tree.root_visit_dist();
      MctsStepTrace step;
      step.root_prefix = prefix;
      step.root_visits = tree.root().visits;
      step.root_value = tree.root().value;
      for (int cid : tree.root().children) {
        const MctsNode& c = tree.nodes()[static_cast<std::size_t>(cid)];
        step.children.push_back({c.token, c.visits, c.value, c.prior, c.evaluated});
      }
      step.visit_dist = dist;
      trace->push_back(std::move(step));
      std::lock_guard<std::mutex> lock(mu_);
      cache_.emplace(prefix, dist);
    } else {
      dist = visit_dist(prefix);
    }
    TokenId chosen;
    if (cfg_.mode == MctsMode::conditional) {
      // Most visited root child; first maximum = lowest token id.
      chosen = 0;
      for (std::size_t s = 1; s < dist.size(); ++s)
        if (dist[s] > dist[static_cast<std::size_t>(chosen)]) chosen = static_cast<int>(s);
    } else {
      chosen = rng.categorical(dist);
    }
    if (trace) trace->back().chosen = chosen;
    out.step_visit_dists.push_back(std::move(dist));
    prefix.push_back(chosen);
    if (chosen == space.vocab.eos()) break;
  }
  out.y.tokens = std::move(prefix);
  return out;
}

double MctsSampler::guided_density(const Sequence& y) {
  validate_sequence(gen_.space(), y);
  double density = 1.0;
  Prefix prefix;
  for (TokenId t : y.tokens) {
    const std::vector<double> dist = visit_dist(prefix);
    density *= dist[static_cast<std::size_t>(t)];
    if (density == 0.0) return 0.0;
    prefix.push_back(t);
  }
  return density;
}

MctsDecodeOutput mcts_decode(const TabularGenerator& gen, const PrefixDiscriminator& disc,
                             int ctx, const MctsConfig& cfg, Rng& rng,
                             std::vector<MctsStepTrace>* trace) {
  MctsSampler sampler(gen, disc, ctx, cfg);
  return sampler.decode(rng, trace);
}

// ---------------------------------------------------------------------------
// Mixtures
// ---------------------------------------------------------------------------

double mcts_mixture_density(const TabularGenerator& gen, int ctx, const Sequence& y,
                            const MixtureSpec& spec, const MctsDecodeOutput& decode,
                            std::optional<std::uint64_t> expected_tag) {
  if (!(spec.epsilon > 0.0) || spec.epsilon > 1.0)
    throw Error("mixture epsilon must lie in (0,1]");
  if (decode.ctx != ctx)
    throw StaleDecode("decode output belongs to context " + std::to_string(decode.ctx));
  if (expected_tag && *expected_tag != decode.tag)
    throw StaleDecode("decode output tag mismatch");
  const double base = spec.epsilon * std::exp(gen_logprob(gen, ctx, y));
  if (decode.mode == MctsMode::conditional)
    return base + (y == decode.y ? 1.0 - spec.epsilon : 0.0);
  double guided = 1.0;
  for (std::size_t j = 0; j < y.tokens.size(); ++j) {
    if (j >= decode.step_visit_dists.size()) {
      guided = 0.0;
      break;
    }
    guided *= decode.step_visit_dists[j][static_cast<std::size_t>(y.tokens[j])];
    if (y.tokens[j] != decode.y.tokens[j]) {
      // Left the recorded root path; only a final-step deviation still has
      // every factor recorded.
      if (j + 1 != y.tokens.size()) guided = 0.0;
      break;
    }
  }
  return base + (1.0 - spec.epsilon) * guided;
}

BehaviorDist::BehaviorDist(const TabularGenerator& gen, const PrefixDiscriminator& disc,
                           int ctx)
    : gen_(&gen), disc_(&disc), ctx_(gen.check_context(ctx)) {}

BehaviorDist BehaviorDist::pure(const TabularGenerator& gen, const PrefixDiscriminator& disc,
                                int ctx) {
  BehaviorDist b(gen, disc, ctx);
  b.kind_ = Kind::pure;
  return b;
}

BehaviorDist BehaviorDist::nucleus_mixture(const TabularGenerator& gen,
                                           const PrefixDiscriminator& disc, int ctx,
                                           const MixtureSpec& spec,
                                           const NucleusSpec& nucleus) {
  if (!(spec.epsilon > 0.0) || spec.epsilon > 1.0)
    throw Error("mixture epsilon must lie in (0,1]");
  BehaviorDist b(gen, disc, ctx);
  b.kind_ = Kind::nucleus;
  b.mixture_ = spec;
  b.nucleus_ = nucleus;
  return b;
}

BehaviorDist BehaviorDist::mcts_mixture(const TabularGenerator& gen,
                                        const PrefixDiscriminator& disc, int ctx,
                                        const MixtureSpec& spec, const MctsConfig& cfg,
                                        std::uint64_t tag) {
  if (!(spec.epsilon > 0.0) || spec.epsilon > 1.0)
    throw Error("mixture epsilon must lie in (0,1]");
  BehaviorDist b(gen, disc, ctx);
  b.kind_ = Kind::mcts;
  b.mixture_ = spec;
  b.mcts_ = std::make_shared<MctsSampler>(gen, disc, ctx, cfg, tag);
  if (cfg.mode == MctsMode::conditional) {
    Rng unused(0);  // conditional decode is deterministic
    b.frozen_ = b.mcts_->decode(unused);
  }
  return b;
}

const MctsDecodeOutput* BehaviorDist::frozen_decode() const {
  return frozen_ ? &*frozen_ : nullptr;
}

Sequence BehaviorDist::sample(Rng& rng) {
  switch (kind_) {
    case Kind::pure:
      return gen_sample(*gen_, ctx_, 1.0, rng);
    case Kind::nucleus:
      if (rng.uniform01() < mixture_.epsilon) return gen_sample(*gen_, ctx_, 1.0, rng);
      return nucleus_sample(*gen_, ctx_, nucleus_, rng);
    case Kind::mcts:
      if (rng.uniform01() < mixture_.epsilon) return gen_sample(*gen_, ctx_, 1.0, rng);
      if (frozen_) return frozen_->y;
      return mcts_->decode(rng).y;
  }
  throw Error("unreachable");
}

double BehaviorDist::density(const Sequence& y) {
  const double p = std::exp(gen_logprob(*gen_, ctx_, y));
  switch (kind_) {
    case Kind::pure:
      return p;
    case Kind::nucleus:
      return mixture_.epsilon * p +
             (1.0 - mixture_.epsilon) * nucleus_density(*gen_, ctx_, y, nucleus_);
    case Kind::mcts: {
      if (frozen_)
        return mixture_.epsilon * p + (y == frozen_->y ? 1.0 - mixture_.epsilon : 0.0);
      return mixture_.epsilon * p + (1.0 - mixture_.epsilon) * mcts_->guided_density(y);
    }
  }
  throw Error("unreachable");
}

DrawResult BehaviorDist::sample_with_weight(Rng& rng) {
  DrawResult r;
  r.y = sample(rng);
  const double d = disc_score(*disc_, ctx_, r.y);
  if (kind_ == Kind::pure) {
    r.qhat = std::exp(gen_logprob(*gen_, ctx_, r.y));
    r.w_raw = d;  // p * D / p exactly
  } else {
    r.qhat = density(r.y);
    r.w_raw = std::exp(gen_logprob(*gen_, ctx_, r.y)) * d / r.qhat;
  }
  return r;
}

DrawResult mixture_sample_and_density(const TabularGenerator& gen,
                                      const PrefixDiscriminator& disc, int ctx,
                                      const MixtureSpec& spec, const NucleusSpec& nucleus,
                                      const MctsConfig* mcts_cfg, Rng& rng) {
  if (spec.guided == GuidedKind::mcts) {
    if (!mcts_cfg) throw Error("mcts mixture requires an MctsConfig");
    BehaviorDist b = BehaviorDist::mcts_mixture(gen, disc, ctx, spec, *mcts_cfg);
    return b.sample_with_weight(rng);
  }
  BehaviorDist b = BehaviorDist::nucleus_mixture(gen, disc, ctx, spec, nucleus);
  return b.sample_with_weight(rng);
}

}  // namespace gcn
