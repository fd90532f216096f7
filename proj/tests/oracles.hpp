// Independent scalar re-implementations used as test oracles. Nothing here
// calls into the Eigen code paths under test.
#ifndef FORGER_TESTS_ORACLES_HPP_
#define FORGER_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <random>
#include <span>
#include <vector>

#include "forger/approx/loss.hpp"
#include "forger/approx/optimizer.hpp"
#include "forger/approx/qfunction.hpp"
#include "forger/core.hpp"

namespace oracle {

using forger::FeedForwardQ;
using forger::LossWeights;
using forger::Observation;
using forger::Transition;

inline std::vector<double> forward(const FeedForwardQ& net, const Observation& x) {
  std::vector<double> h = x;
  const auto& layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& W = layers[k].weight;
    std::vector<double> z(static_cast<std::size_t>(W.rows()));
    for (int r = 0; r < W.rows(); ++r) {
      double s = layers[k].bias(r);
      for (int c = 0; c < W.cols(); ++c) s += W(r, c) * h[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = (k + 1 < layers.size() && s < 0) ? 0.0 : s;
    }
    h = z;
  }
  return h;
}

inline int argmax(const std::vector<double>& q) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
  return best;
}

inline double nstep(const std::vector<double>& rewards, const std::vector<bool>& dones, std::size_t t, int n,
                    double gamma) {
  double g = 0.0, disc = 1.0;
  for (int i = 0; i < n && t + i < rewards.size(); ++i) {
    g += disc * rewards[t + i];
    disc *= gamma;
    if (dones[t + i]) break;
  }
  return g;
}

inline std::pair<double, double> double_q(const Transition& t, const FeedForwardQ& online, const FeedForwardQ& target,
                                          double gamma) {
  double y1 = t.reward;
  if (!t.done) y1 += gamma * forward(target, t.next_obs)[static_cast<std::size_t>(argmax(forward(online, t.next_obs)))];
  double yn = t.n_return;
  if (!t.n_done)
    yn += std::pow(gamma, t.n_eff) * forward(target, t.n_obs)[static_cast<std::size_t>(argmax(forward(online, t.n_obs)))];
  return {y1, yn};
}

inline double margin(const std::vector<double>& q, int expert, double l, int mask) {
  if (!mask) return 0.0;
  double best = -1e300;
  for (std::size_t a = 0; a < q.size(); ++a) best = std::max(best, q[a] + (static_cast<int>(a) == expert ? 0.0 : l));
  return best - q[static_cast<std::size_t>(expert)];
}

inline double l2(const FeedForwardQ& net, bool biases) {
  double s = 0.0;
  for (const auto& layer : net.layers()) {
    for (int r = 0; r < layer.weight.rows(); ++r)
      for (int c = 0; c < layer.weight.cols(); ++c) s += layer.weight(r, c) * layer.weight(r, c);
    if (biases)
      for (int r = 0; r < layer.bias.size(); ++r) s += layer.bias(r) * layer.bias(r);
  }
  return s;
}

inline double composite_loss(const std::vector<Transition>& batch, const std::vector<double>& w,
                             const FeedForwardQ& online, const FeedForwardQ& target, const LossWeights& lw) {
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    const auto q = forward(online, t.obs);
    const auto [y1, yn] = double_q(t, online, target, lw.gamma);
    const double qa = q[static_cast<std::size_t>(t.action.index)];
    sum += w[i] * ((y1 - qa) * (y1 - qa) + lw.lambda_nstep * (yn - qa) * (yn - qa) +
                   lw.lambda_margin * margin(q, t.action.index, lw.margin, t.margin_mask));
  }
  return sum / static_cast<double>(batch.size()) + lw.lambda_l2 * l2(online, lw.l2_biases);
}

// --- random instances ---------------------------------------------------------

struct Instance {
  FeedForwardQ online, target;
  std::vector<Transition> batch;
  std::vector<double> weights;
  LossWeights lw;
};

inline Observation random_obs(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Observation o(static_cast<std::size_t>(dim));
  for (auto& x : o) x = n(rng);
  return o;
}

inline Transition random_transition(std::mt19937_64& rng, int dim, int actions) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Transition t;
  t.obs = random_obs(rng, dim);
  t.next_obs = random_obs(rng, dim);
  t.n_obs = random_obs(rng, dim);
  t.action.index = static_cast<int>(rng() % static_cast<unsigned>(actions));
  t.reward = u(rng);
  t.done = rng() % 4 == 0;
  t.n_eff = 1 + static_cast<int>(rng() % 10);
  t.n_done = t.done || rng() % 4 == 0;
  t.n_return = 3.0 * u(rng);
  t.margin_mask = static_cast<int>(rng() % 2);
  return t;
}

inline Instance random_instance(std::mt19937_64& rng) {
  const int F = 1 + static_cast<int>(rng() % 6);
  const int A = 2 + static_cast<int>(rng() % 3);
  const int B = 1 + static_cast<int>(rng() % 8);
  const int H1 = 3 + static_cast<int>(rng() % 4), H2 = 3 + static_cast<int>(rng() % 4);
  Instance in;
  in.online = FeedForwardQ({F, H1, H2, A}, rng());
  in.target = FeedForwardQ({F, H1, H2, A}, rng());
  // non-zero biases so they take part in the check
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto* net : {&in.online, &in.target})
    for (auto& layer : net->layers())
      for (int r = 0; r < layer.bias.size(); ++r) layer.bias(r) = n(rng);
  for (int i = 0; i < B; ++i) {
    in.batch.push_back(random_transition(rng, F, A));
    in.weights.push_back(std::uniform_real_distribution<double>(0.1, 1.0)(rng));
  }
  in.lw.lambda_nstep = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
  in.lw.lambda_margin = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
  in.lw.lambda_l2 = 1e-2 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  in.lw.margin = 0.4;
  in.lw.gamma = 0.9;
  in.lw.l2_biases = rng() % 2 == 0;
  return in;
}

// Smallest distance of anything piecewise (ReLU inputs, margin and
// double-Q argmax ties) from its kink.
inline double kink_distance(const Instance& in) {
  double d = 1e300;
  auto relu_gap = [&](const FeedForwardQ& net, const Observation& x) {
    std::vector<double> h = x;
    const auto& layers = net.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& W = layers[k].weight;
      std::vector<double> z(static_cast<std::size_t>(W.rows()));
      for (int r = 0; r < W.rows(); ++r) {
        double s = layers[k].bias(r);
        for (int c = 0; c < W.cols(); ++c) s += W(r, c) * h[static_cast<std::size_t>(c)];
        if (k + 1 < layers.size()) d = std::min(d, std::abs(s));
        z[static_cast<std::size_t>(r)] = (k + 1 < layers.size() && s < 0) ? 0.0 : s;
      }
      h = z;
    }
  };
  auto top_gap = [&](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    if (v.size() >= 2) d = std::min(d, v[v.size() - 1] - v[v.size() - 2]);
  };
  for (const auto& t : in.batch) {
    for (const auto* o : {&t.obs, &t.next_obs, &t.n_obs}) relu_gap(in.online, *o);
    top_gap(forward(in.online, t.next_obs));
    top_gap(forward(in.online, t.n_obs));
    if (t.margin_mask) {
      auto q = forward(in.online, t.obs);
      for (std::size_t a = 0; a < q.size(); ++a)
        if (static_cast<int>(a) != t.action.index) q[a] += in.lw.margin;
      top_gap(q);
    }
  }
  return d;
}

struct GradCheck {
  double max_rel_error = 0.0;
  int parameters = 0;
};

inline constexpr double kFdStep = 1e-5;
inline constexpr double kRelFloor = 1e-6;  // denominators below this are treated as absolute error

/// Central differences of the oracle loss against the analytic gradient.
inline GradCheck check_gradients(Instance in) {
  std::vector<const Transition*> ptrs;
  for (const auto& t : in.batch) ptrs.push_back(&t);
  auto grad = in.online.zero_grad();
  forger::composite_loss_and_grads<FeedForwardQ>(ptrs, in.weights, in.online, in.target, in.lw, grad);
  GradCheck out;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + kFdStep;
    const double up = composite_loss(in.batch, in.weights, in.online, in.target, in.lw);
    param = saved - kFdStep;
    const double down = composite_loss(in.batch, in.weights, in.online, in.target, in.lw);
    param = saved;
    const double numeric = (up - down) / (2.0 * kFdStep);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
    ++out.parameters;
  };
  auto& layers = in.online.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    for (int r = 0; r < layers[k].weight.rows(); ++r)
      for (int c = 0; c < layers[k].weight.cols(); ++c) probe(layers[k].weight(r, c), grad[k].weight(r, c));
    for (int r = 0; r < layers[k].bias.size(); ++r) probe(layers[k].bias(r), grad[k].bias(r));
  }
  return out;
}

/// Random instance whose kinks are all at least `clearance` away.
inline Instance smooth_instance(std::mt19937_64& rng, double clearance = 1e-3) {
  for (;;) {
    Instance in = random_instance(rng);
    if (kink_distance(in) > clearance) return in;
  }
}

// --- chain MDP ----------------------------------------------------------------

/// Deterministic chain: states 0..S-1, action 0 = left, 1 = right. Moving
/// right from S-1 ends the episode with reward 1; every other step pays 0.
struct ChainMdp {
  int states = 5;
  double gamma = 0.9;

  struct Step {
    int next;
    double reward;
    bool done;
  };

  Step step(int s, int a) const {
    if (a == 1) {
      if (s == states - 1) return {s, 1.0, true};
      return {s + 1, 0.0, false};
    }
    return {std::max(0, s - 1), 0.0, false};
  }

  /// Value iteration to machine precision.
  std::vector<std::vector<double>> q_star() const {
    std::vector<std::vector<double>> q(static_cast<std::size_t>(states), std::vector<double>(2, 0.0));
    for (int it = 0; it < 10000; ++it) {
      auto next = q;
      for (int s = 0; s < states; ++s)
        for (int a = 0; a < 2; ++a) {
          const auto st = step(s, a);
          const auto& row = q[static_cast<std::size_t>(st.next)];
          next[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] =
              st.reward + (st.done ? 0.0 : gamma * std::max(row[0], row[1]));
        }
      q = next;
    }
    return q;
  }
};

struct ChainRun {
  double max_error = 0.0;
  long steps = 0;
};

/// Online double Q-learning on the chain with a TabularQ, a lagging target
/// table and the composite loss reduced to its 1-step term. Stops once every
/// entry is within `tol` of Q* or after `max_steps` environment steps.
inline ChainRun learn_chain(const ChainMdp& mdp, long max_steps, double tol, std::uint64_t seed) {
  const auto q_star = mdp.q_star();
  forger::TargetPair<forger::TabularQ> q(forger::TabularQ(1, 2), 20);
  forger::LossWeights lw;
  lw.lambda_nstep = 0.0;
  lw.lambda_margin = 0.0;
  lw.lambda_l2 = 0.0;
  lw.gamma = mdp.gamma;
  lw.n = 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto error = [&] {
    double e = 0.0;
    for (int s = 0; s < mdp.states; ++s) {
      const auto row = q.online().q_values({static_cast<double>(s)});
      for (int a = 0; a < 2; ++a)
        e = std::max(e, std::abs(row[static_cast<std::size_t>(a)] - q_star[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]));
    }
    return e;
  };
  ChainRun out;
  int s = 0;
  const double one = 1.0;
  for (out.steps = 0; out.steps < max_steps;) {
    const auto row = q.online().q_values({static_cast<double>(s)});
    const int a = u(rng) < 0.5 ? static_cast<int>(rng() % 2) : (row[1] > row[0] ? 1 : 0);
    const auto st = mdp.step(s, a);
    Transition t;
    t.obs = {static_cast<double>(s)};
    t.action.index = a;
    t.reward = st.reward;
    t.next_obs = {static_cast<double>(st.next)};
    t.done = st.done;
    t.n_obs = t.next_obs;
    t.n_return = st.reward;
    t.n_done = st.done;
    t.n_eff = 1;
    const Transition* batch[] = {&t};
    auto grad = q.online().zero_grad();
    forger::composite_loss_and_grads<forger::TabularQ>(batch, std::span<const double>(&one, 1), q.online(), q.target(),
                                                      lw, grad);
    q.online().sgd_step(grad, 0.25);
    q.tick();
    ++out.steps;
    s = st.done ? 0 : st.next;
    if (out.steps % 100 == 0 && error() < tol) break;
  }
  out.max_error = error();
  return out;
}

// --- item sequences ------------------------------------------------------------

// Episode whose inventory gains one unit of items[t] at step t ("" = nothing).
inline forger::Episode item_episode(const std::vector<std::string>& items, bool terminal = true) {
  forger::Episode ep;
  forger::Inventory inv;
  for (std::size_t t = 0; t < items.size(); ++t) {
    forger::EpisodeStep s;
    s.obs = {static_cast<double>(t)};
    s.action.index = 0;
    if (!items[t].empty()) {
      ++inv[items[t]];
      s.reward = 1.0;
    }
    s.inventory = inv;
    s.done = terminal && t + 1 == items.size();
    ep.steps.push_back(s);
  }
  ep.final_obs = {static_cast<double>(items.size())};
  return ep;
}

// Mean first-occurrence order, recomputed from the raw item strings.
inline std::vector<std::string> first_occurrence_order(const std::vector<std::vector<std::string>>& seqs) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& seq : seqs) {
    std::set<std::string> seen;
    for (std::size_t t = 0; t < seq.size(); ++t)
      if (!seq[t].empty() && seen.insert(seq[t]).second) {
        acc[seq[t]].first += static_cast<double>(t);
        ++acc[seq[t]].second;
      }
  }
  std::vector<std::pair<double, std::string>> v;
  for (const auto& [k, s] : acc) v.emplace_back(s.first / s.second, k);
  std::sort(v.begin(), v.end());
  std::vector<std::string> out;
  for (const auto& p : v) out.push_back(p.second);
  return out;
}

// Item sequences following `base`, with random padding and revisits of earlier items.
inline std::vector<std::vector<std::string>> back_edge_sequences(std::mt19937_64& rng,
                                                                 const std::vector<std::string>& base, int episodes) {
  std::vector<std::vector<std::string>> raw;
  for (int e = 0; e < episodes; ++e) {
    std::vector<std::string> seq;
    for (const auto& it : base) {
      for (int pad = static_cast<int>(rng() % 3); pad > 0; --pad) seq.push_back("");
      seq.push_back(it);
      if (rng() % 3 == 0) seq.push_back(base[rng() % base.size()]);
    }
    raw.push_back(seq);
  }
  return raw;
}

}  // namespace oracle

#endif  // FORGER_TESTS_ORACLES_HPP_
