#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "qnet/errors.hpp"
#include "qnet/network.hpp"
#include "qnet/rng.hpp"

namespace qnet {

enum class LearnerAlgorithm { Hedge, Exp3, Fixed, Greedy };

inline const char* to_string(LearnerAlgorithm a) {
  switch (a) {
    case LearnerAlgorithm::Hedge: return "hedge";
    case LearnerAlgorithm::Exp3: return "exp3";
    case LearnerAlgorithm::Fixed: return "fixed";
    case LearnerAlgorithm::Greedy: return "greedy";
  }
  return "?";
}

enum class RateSchedule { Constant, InvSqrt };

struct LearnerConfig {
  LearnerAlgorithm algorithm = LearnerAlgorithm::Hedge;
  double eta = 0.1;
  RateSchedule schedule = RateSchedule::Constant;
  double exploration = 0.05;  // EXP3 uniform mixture
  // Fixed strategies: probability per target node id; mass not assigned to
  // out-neighbors is played as idle.
  std::map<NodeId, double> fixed;
  std::uint64_t seed_offset = 0;
};

// Per-node action set: index 0 is idle, then the out-neighbors in ascending
// id order.
struct ActionSet {
  std::vector<NodeId> targets;  // targets[0] = -1 (idle)

  static ActionSet for_node(const NetworkSpec& net, NodeId i) {
    ActionSet a;
    a.targets.push_back(-1);
    for (NodeId j : net.out_neighbors(i)) a.targets.push_back(j);
    return a;
  }
  int size() const { return static_cast<int>(targets.size()); }
  NodeId target(int k) const { return targets[static_cast<std::size_t>(k)]; }
};

// One strategy engine per queue-bearing node. Weights are kept in log space:
// multiplicative updates become additions and the sampling distribution stays
// strictly positive no matter how large the (possibly unbounded) utilities
// get.
class Learner {
 public:
  Learner(const LearnerConfig& cfg, const ActionSet& actions)
      : cfg_(cfg), actions_(actions), log_w_(static_cast<std::size_t>(actions.size()), 0.0) {
    if (cfg.algorithm == LearnerAlgorithm::Fixed) {
      fixed_dist_.assign(static_cast<std::size_t>(actions.size()), 0.0);
      double assigned = 0.0;
      for (int k = 1; k < actions.size(); ++k) {
        auto it = cfg.fixed.find(actions.target(k));
        if (it != cfg.fixed.end()) {
          fixed_dist_[static_cast<std::size_t>(k)] = it->second;
          assigned += it->second;
        }
      }
      if (assigned > 1.0 + 1e-9)
        throw Error(ErrorCode::ConfigError, "fixed strategy exceeds probability 1");
      fixed_dist_[0] = std::max(0.0, 1.0 - assigned);
    }
    last_estimates_.assign(static_cast<std::size_t>(actions.size()), 0.0);
  }

  const ActionSet& actions() const { return actions_; }
  LearnerAlgorithm algorithm() const { return cfg_.algorithm; }

  // Sampling distribution over action indices, restricted to the unmasked
  // set. mask may be empty (nothing masked); index 0 (idle) is never masked.
  std::vector<double> distribution(const std::vector<char>& mask) const {
    const int K = actions_.size();
    std::vector<double> p(static_cast<std::size_t>(K), 0.0);
    switch (cfg_.algorithm) {
      case LearnerAlgorithm::Fixed: {
        double total = 0.0;
        for (int k = 0; k < K; ++k)
          if (!masked(mask, k)) total += fixed_dist_[static_cast<std::size_t>(k)];
        if (total <= 0.0) {
          p[0] = 1.0;
        } else {
          for (int k = 0; k < K; ++k)
            if (!masked(mask, k)) p[static_cast<std::size_t>(k)] = fixed_dist_[static_cast<std::size_t>(k)] / total;
        }
        break;
      }
      case LearnerAlgorithm::Greedy: {
        int best = -1;
        for (int k = 0; k < K; ++k) {
          if (masked(mask, k)) continue;
          if (best < 0 || last_estimates_[static_cast<std::size_t>(k)] >
                              last_estimates_[static_cast<std::size_t>(best)])
            best = k;
        }
        p[static_cast<std::size_t>(best < 0 ? 0 : best)] = 1.0;
        break;
      }
      case LearnerAlgorithm::Hedge:
      case LearnerAlgorithm::Exp3: {
        double max_log = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k)
          if (!masked(mask, k)) max_log = std::max(max_log, log_w_[static_cast<std::size_t>(k)]);
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
          if (masked(mask, k)) continue;
          p[static_cast<std::size_t>(k)] = std::exp(log_w_[static_cast<std::size_t>(k)] - max_log);
          total += p[static_cast<std::size_t>(k)];
        }
        int unmasked = 0;
        for (int k = 0; k < K; ++k)
          if (!masked(mask, k)) ++unmasked;
        for (int k = 0; k < K; ++k) {
          if (masked(mask, k)) continue;
          p[static_cast<std::size_t>(k)] /= total;
          if (cfg_.algorithm == LearnerAlgorithm::Exp3)
            p[static_cast<std::size_t>(k)] =
                (1.0 - cfg_.exploration) * p[static_cast<std::size_t>(k)] +
                cfg_.exploration / static_cast<double>(unmasked);
        }
        break;
      }
    }
    return p;
  }

  // Samples an action index; records the probability it was drawn with (used
  // for the EXP3 importance weight).
  int select(Rng& rng, const std::vector<char>& mask) {
    auto p = distribution(mask);
    double u = rng.uniform01();
    double acc = 0.0;
    int chosen = -1;
    for (int k = 0; k < actions_.size(); ++k) {
      if (p[static_cast<std::size_t>(k)] <= 0.0) continue;
      acc += p[static_cast<std::size_t>(k)];
      chosen = k;  // roundoff fallback: the last positive-probability action
      if (u < acc) break;
    }
    if (chosen < 0) chosen = 0;
    last_prob_ = p[static_cast<std::size_t>(chosen)];
    return chosen;
  }

  double last_probability() const { return last_prob_; }

  // Full-information feedback: one utility per action. Hedge performs the
  // multiplicative-weights step, Greedy just remembers the vector.
  void update_full(const std::vector<double>& utilities) {
    ++updates_;
    if (cfg_.algorithm == LearnerAlgorithm::Greedy) {
      last_estimates_ = utilities;
      return;
    }
    if (cfg_.algorithm != LearnerAlgorithm::Hedge) return;
    const double eta = current_rate();
    for (int k = 0; k < actions_.size(); ++k)
      log_w_[static_cast<std::size_t>(k)] += eta * utilities[static_cast<std::size_t>(k)];
    renormalize();
  }

  // Bandit feedback for EXP3: the importance-weighted reward of the action
  // actually played. Utilities can grow without bound in the queue-length
  // model, so rewards are normalized by a running scale max(1, |u|_max)
  // before the exponential step (a documented deviation from the textbook
  // update, which assumes rewards in [0,1]).
  void update_bandit(int action, double utility, double probability) {
    ++updates_;
    if (cfg_.algorithm != LearnerAlgorithm::Exp3) return;
    scale_ = std::max(scale_, std::fabs(utility));
    const double ghat = (utility / scale_) / std::max(probability, 1e-12);
    log_w_[static_cast<std::size_t>(action)] += current_rate() * ghat;
    renormalize();
  }

  // Strictly positive weights, normalized so the largest is 1.
  std::vector<double> weights() const {
    std::vector<double> w(log_w_.size());
    double max_log = *std::max_element(log_w_.begin(), log_w_.end());
    for (std::size_t k = 0; k < log_w_.size(); ++k) w[k] = std::exp(log_w_[k] - max_log);
    return w;
  }

 private:
  static bool masked(const std::vector<char>& mask, int k) {
    return k > 0 && !mask.empty() && mask[static_cast<std::size_t>(k)];
  }

  double current_rate() const {
    if (cfg_.schedule == RateSchedule::InvSqrt)
      return cfg_.eta / std::sqrt(static_cast<double>(std::max<std::int64_t>(1, updates_)));
    return cfg_.eta;
  }

  void renormalize() {
    double max_log = *std::max_element(log_w_.begin(), log_w_.end());
    for (auto& lw : log_w_) {
      lw -= max_log;
      lw = std::max(lw, -690.0);  // keeps exp(lw) above ~1e-300
    }
  }

  LearnerConfig cfg_;
  ActionSet actions_;
  std::vector<double> log_w_;
  std::vector<double> fixed_dist_;
  std::vector<double> last_estimates_;
  double last_prob_ = 1.0;
  double scale_ = 1.0;
  std::int64_t updates_ = 0;
};

// Append-only regret accounting per the counterfactual definition: for every
// node and every fixed target, the cumulative utility the node would have
// earned by playing that target each step against the realized actions of the
// others and the realized server coins. Window regrets are views over
// snapshots taken at window boundaries.
class RegretLedger {
 public:
  void configure(const NetworkSpec& net, std::int64_t stride) {
    stride_ = stride;
    const int n = net.node_count();
    realized_.assign(static_cast<std::size_t>(n), 0.0);
    counterfactual_.assign(static_cast<std::size_t>(n), {});
    for (const auto& nd : net.nodes())
      if (!net.is_terminal(nd.id))
        counterfactual_[static_cast<std::size_t>(nd.id)]
            .assign(net.out_neighbors(nd.id).size(), 0.0);
    snapshots_.clear();
    take_snapshot(0);
  }

  void add(NodeId i, double realized, const std::vector<double>& per_target) {
    realized_[static_cast<std::size_t>(i)] += realized;
    auto& cf = counterfactual_[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < per_target.size(); ++k) cf[k] += per_target[k];
  }

  void take_snapshot(std::int64_t t) {
    Snapshot s;
    s.t = t;
    s.realized = realized_;
    s.counterfactual = counterfactual_;
    snapshots_[t] = std::move(s);
  }

  std::int64_t stride() const { return stride_; }

  // Regret of node i over [t0-w, t0): max over fixed targets of the
  // counterfactual gain minus the realized gain.
  double window_regret(NodeId i, std::int64_t t0, std::int64_t w) const {
    auto hi = snapshots_.find(t0);
    auto lo = snapshots_.find(t0 - w);
    if (hi == snapshots_.end() || lo == snapshots_.end())
      throw Error(ErrorCode::WindowOutOfRange,
                  "window [" + std::to_string(t0 - w) + "," + std::to_string(t0) +
                      ") is not aligned with recorded snapshots");
    const auto& cf_hi = hi->second.counterfactual[static_cast<std::size_t>(i)];
    const auto& cf_lo = lo->second.counterfactual[static_cast<std::size_t>(i)];
    double best = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < cf_hi.size(); ++k) {
      double gain = cf_hi[k] - cf_lo[k];
      if (!any || gain > best) {
        best = gain;
        any = true;
      }
    }
    double realized = hi->second.realized[static_cast<std::size_t>(i)] -
                      lo->second.realized[static_cast<std::size_t>(i)];
    return any ? best - realized : 0.0;
  }

  double cumulative_realized(NodeId i) const { return realized_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& cumulative_counterfactual(NodeId i) const {
    return counterfactual_[static_cast<std::size_t>(i)];
  }

 private:
  struct Snapshot {
    std::int64_t t = 0;
    std::vector<double> realized;
    std::vector<std::vector<double>> counterfactual;
  };

  std::int64_t stride_ = 0;
  std::vector<double> realized_;
  std::vector<std::vector<double>> counterfactual_;
  std::map<std::int64_t, Snapshot> snapshots_;
};

}  // namespace qnet
