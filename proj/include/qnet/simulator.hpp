#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <variant>
#include <vector>

#include "qnet/errors.hpp"
#include "qnet/learning.hpp"
#include "qnet/network.hpp"
#include "qnet/rng.hpp"
#include "qnet/stability.hpp"

namespace qnet {

enum class PriorityRule { OldestPacket, LongestQueue };
enum class UtilityModel { Unit, QueueDiff };

inline const char* to_string(PriorityRule r) {
  return r == PriorityRule::OldestPacket ? "oldest_packet" : "longest_queue";
}
inline const char* to_string(UtilityModel u) {
  return u == UtilityModel::Unit ? "unit" : "queue_diff";
}

struct Packet {
  std::int64_t birth = 0;  // system arrival time; kept across hops
  std::int64_t id = 0;
  NodeId origin = 0;
};

struct DecentralizedPolicy {
  LearnerConfig learner;
  PriorityRule priority = PriorityRule::OldestPacket;
  UtilityModel utility = UtilityModel::Unit;
  // Optional per-node learner overrides (e.g. mixed populations, fixed
  // profiles for specific queues).
  std::map<NodeId, LearnerConfig> per_node;
};

struct CentralizedPolicy {
  PolicyDistribution distribution;
};

using Policy = std::variant<DecentralizedPolicy, CentralizedPolicy>;

// Deterministic arrival override for the adversarial variant: returns whether
// a packet arrives at `source` during step `t`.
using ArrivalFn = std::function<bool(NodeId source, std::int64_t t)>;

// Everything observable about one completed step.
struct StepTrace {
  std::int64_t t = 0;
  std::vector<char> coin;     // per node id; meaningful for servers
  std::vector<char> arrival;  // per node id; meaningful for sources
  std::int64_t clearings = 0;
  std::int64_t terminal_clearings = 0;
  // Realized utility summed over nodes, accumulated on the queue-side
  // feedback path.
  std::int64_t utility_sum = 0;
  // Independent server-side accounting: for each cleared packet, the
  // start-of-step queue-length drop Q_sender - Q_receiver it is responsible
  // for. Under the queue-length utility model this must equal utility_sum
  // exactly, step by step.
  std::int64_t clearing_attribution = 0;
};

struct MetricsFrame {
  std::int64_t t = 0;
  std::vector<std::int64_t> queue_len;   // per node id
  std::vector<std::int64_t> oldest_age;  // per node id
  double phi_age = 0.0;
  double phi_len = 0.0;
  std::vector<double> cumulative_utility;  // per node id
  std::vector<double> window_regret;       // per node id, last completed window
};

struct StabilityEstimate {
  enum class Verdict { Bounded, Growth, Inconclusive };
  double slope = 0.0;  // least-squares slope of total queue length, last half
  std::int64_t max_q = 0;
  double median_q = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

inline const char* to_string(StabilityEstimate::Verdict v) {
  switch (v) {
    case StabilityEstimate::Verdict::Bounded: return "bounded";
    case StabilityEstimate::Verdict::Growth: return "growth";
    case StabilityEstimate::Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

// Discrete-time engine for the two-phase dynamics. Each step:
//   phase I   every node with a packet picks a target (learner sample or the
//             edge of the sampled path ensemble) and offers its oldest packet;
//   phase II  sources draw arrivals, every server draws its success coin
//             (unconditionally, so counterfactuals share the realized
//             randomness), servers with offers pick one by the priority rule
//             and clear it on a successful coin.
// All iteration is in ascending node-id order; ties everywhere break to the
// lowest id. Three independent RNG substreams (arrivals, coins, learner
// sampling) make runs bit-reproducible.
class Simulation {
 public:
  Simulation(const NetworkSpec& net, Policy policy, std::uint64_t seed, std::int64_t window,
             ArrivalFn arrival_override = nullptr)
      : net_(&net),
        policy_(std::move(policy)),
        window_(window),
        arrival_override_(std::move(arrival_override)),
        rng_arrival_(Rng::substream(seed, 0xA221A1)),
        rng_coin_(Rng::substream(seed, 0xC0117)),
        rng_learn_(Rng::substream(seed, 0x5E1EC7)) {
    const int n = net.node_count();
    queue_.assign(static_cast<std::size_t>(n), {});
    qlen_.assign(static_cast<std::size_t>(n), 0);
    cumulative_utility_.assign(static_cast<std::size_t>(n), 0.0);
    ledger_.configure(net, window);

    if (auto* dec = std::get_if<DecentralizedPolicy>(&policy_)) {
      for (const auto& nd : net.nodes()) {
        if (net.is_terminal(nd.id)) {
          learners_.push_back(std::nullopt);
          continue;
        }
        LearnerConfig cfg = dec->learner;
        auto it = dec->per_node.find(nd.id);
        if (it != dec->per_node.end()) cfg = it->second;
        learners_.emplace_back(Learner(cfg, ActionSet::for_node(net, nd.id)));
      }
      priority_ = dec->priority;
      utility_ = dec->utility;
    } else {
      auto& dist = std::get<CentralizedPolicy>(policy_).distribution;
      double sum = dist.probability_sum();
      if (std::fabs(sum - 1.0) > 1e-6)
        throw Error(ErrorCode::ConfigError, "policy distribution probabilities sum to " +
                                                std::to_string(sum));
      for (const auto& c : dist.components)
        if (!is_vertex_disjoint_path_set(c.edges))
          throw Error(ErrorCode::ConfigError, "policy component is not vertex-disjoint");
    }
  }

  const NetworkSpec& net() const { return *net_; }
  std::int64_t time() const { return t_; }
  std::int64_t window() const { return window_; }
  std::int64_t queue_len(NodeId i) const { return qlen_[static_cast<std::size_t>(i)]; }

  std::int64_t total_queue() const {
    std::int64_t s = 0;
    for (auto q : qlen_) s += q;
    return s;
  }

  // Age of the oldest packet at node i, zero when empty.
  std::int64_t oldest_age(NodeId i) const {
    const auto& q = queue_[static_cast<std::size_t>(i)];
    return q.empty() ? 0 : t_ - q.top().birth;
  }

  double phi_age() const {
    double s = 0.0;
    for (NodeId i : net_->sources()) {
      double T = static_cast<double>(oldest_age(i));
      s += net_->arrival_rate(i) * T * (T - 1.0);
    }
    return 0.5 * s;
  }

  double phi_len() const {
    double s = 0.0;
    for (const auto& nd : net_->nodes()) {
      if (net_->is_terminal(nd.id)) continue;
      double q = static_cast<double>(qlen_[static_cast<std::size_t>(nd.id)]);
      s += q * (q - 1.0);
    }
    return 0.5 * s;
  }

  std::int64_t total_arrivals() const { return arrivals_; }
  std::int64_t total_departures() const { return departures_; }
  double cumulative_utility(NodeId i) const { return cumulative_utility_[static_cast<std::size_t>(i)]; }
  const RegretLedger& ledger() const { return ledger_; }
  const StepTrace& last_step() const { return trace_; }
  std::int64_t coupling_violations() const { return coupling_violations_; }

  // Runs the arrival process alone for `steps` steps before time zero,
  // stamping packets with negative timestamps. Used to start drift probes
  // from a heavily backlogged state that still has honestly distributed
  // inter-arrival gaps.
  void prefill(std::int64_t steps) {
    if (t_ != 0) throw Error(ErrorCode::ConfigError, "prefill must precede the first step");
    prefill_ += steps;
    for (std::int64_t tau = -prefill_; tau < -(prefill_ - steps); ++tau)
      for (NodeId i : net_->sources())
        if (draw_arrival(i, tau)) {
          queue_[static_cast<std::size_t>(i)].push(Packet{tau, packet_seq_++, i});
          qlen_[static_cast<std::size_t>(i)]++;
          arrivals_++;
        }
  }

  void step() {
    const std::int64_t t = t_;
    const int n = net_->node_count();
    trace_ = StepTrace{};
    trace_.t = t;
    trace_.coin.assign(static_cast<std::size_t>(n), 0);
    trace_.arrival.assign(static_cast<std::size_t>(n), 0);

    // Start-of-step snapshots drive priorities, utilities and masks.
    const std::vector<std::int64_t> q0 = qlen_;
    std::vector<std::int64_t> offered_birth(static_cast<std::size_t>(n), -1);
    for (const auto& nd : net_->nodes())
      if (!net_->is_terminal(nd.id) && qlen_[static_cast<std::size_t>(nd.id)] > 0)
        offered_birth[static_cast<std::size_t>(nd.id)] =
            queue_[static_cast<std::size_t>(nd.id)].top().birth;

    // ---- Phase I: choose targets and collect offers ----------------------
    std::vector<NodeId> realized_target(static_cast<std::size_t>(n), -1);
    std::vector<int> realized_action(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<NodeId>> offers(static_cast<std::size_t>(n));  // per server

    if (auto* dec = std::get_if<DecentralizedPolicy>(&policy_)) {
      for (const auto& nd : net_->nodes()) {
        NodeId i = nd.id;
        if (net_->is_terminal(i) || q0[static_cast<std::size_t>(i)] == 0) continue;
        auto& learner = *learners_[static_cast<std::size_t>(i)];
        std::vector<char> mask;
        if (dec->utility == UtilityModel::QueueDiff) {
          mask.assign(static_cast<std::size_t>(learner.actions().size()), 0);
          for (int k = 1; k < learner.actions().size(); ++k)
            if (q0[static_cast<std::size_t>(learner.actions().target(k))] >
                q0[static_cast<std::size_t>(i)])
              mask[static_cast<std::size_t>(k)] = 1;
        }
        int k = learner.select(rng_learn_, mask);
        realized_action[static_cast<std::size_t>(i)] = k;
        NodeId j = learner.actions().target(k);
        realized_target[static_cast<std::size_t>(i)] = j;
        if (j >= 0) offers[static_cast<std::size_t>(j)].push_back(i);
      }
    } else {
      const auto& dist = std::get<CentralizedPolicy>(policy_).distribution;
      double u = rng_learn_.uniform01();
      double acc = 0.0;
      const PolicyComponent* chosen = nullptr;
      for (const auto& c : dist.components) {
        acc += c.probability;
        chosen = &c;
        if (u < acc) break;
      }
      if (chosen != nullptr)
        for (const auto& [a, b] : chosen->edges)
          if (q0[static_cast<std::size_t>(a)] > 0) {
            realized_target[static_cast<std::size_t>(a)] = b;
            offers[static_cast<std::size_t>(b)].push_back(a);
          }
    }

    // ---- Phase II --------------------------------------------------------
    for (const auto& nd : net_->nodes())
      if (!net_->is_source(nd.id))
        trace_.coin[static_cast<std::size_t>(nd.id)] = rng_coin_.bernoulli(nd.rate) ? 1 : 0;

    for (NodeId i : net_->sources())
      if (draw_arrival(i, t)) trace_.arrival[static_cast<std::size_t>(i)] = 1;

    // Priority comparison at a server: does a beat b?
    auto beats = [&](NodeId a, NodeId b) {
      if (priority_ == PriorityRule::OldestPacket) {
        auto ba = offered_birth[static_cast<std::size_t>(a)];
        auto bb = offered_birth[static_cast<std::size_t>(b)];
        if (ba != bb) return ba < bb;
      } else {
        auto qa = q0[static_cast<std::size_t>(a)];
        auto qb = q0[static_cast<std::size_t>(b)];
        if (qa != qb) return qa > qb;
      }
      return a < b;
    };

    std::vector<NodeId> winner(static_cast<std::size_t>(n), -1);
    for (const auto& nd : net_->nodes()) {
      NodeId j = nd.id;
      if (net_->is_source(j) || offers[static_cast<std::size_t>(j)].empty()) continue;
      NodeId best = offers[static_cast<std::size_t>(j)].front();
      for (NodeId cand : offers[static_cast<std::size_t>(j)])
        if (beats(cand, best)) best = cand;
      winner[static_cast<std::size_t>(j)] = best;
    }

    auto utility_of = [&](NodeId i, NodeId j) -> std::int64_t {
      if (utility_ == UtilityModel::Unit) return 1;
      return q0[static_cast<std::size_t>(i)] - q0[static_cast<std::size_t>(j)];
    };

    // Apply clearings (server-side bookkeeping path).
    std::vector<std::int64_t> realized_utility(static_cast<std::size_t>(n), 0);
    for (const auto& nd : net_->nodes()) {
      NodeId j = nd.id;
      NodeId i = winner[static_cast<std::size_t>(j)];
      if (i < 0 || !trace_.coin[static_cast<std::size_t>(j)]) continue;
      Packet pkt = queue_[static_cast<std::size_t>(i)].top();
      queue_[static_cast<std::size_t>(i)].pop();
      qlen_[static_cast<std::size_t>(i)]--;
      trace_.clearings++;
      trace_.clearing_attribution +=
          q0[static_cast<std::size_t>(i)] - q0[static_cast<std::size_t>(j)];
      if (net_->is_terminal(j)) {
        departures_++;
        trace_.terminal_clearings++;
      } else {
        queue_[static_cast<std::size_t>(j)].push(pkt);
        qlen_[static_cast<std::size_t>(j)]++;
      }
      realized_utility[static_cast<std::size_t>(i)] = utility_of(i, j);
    }

    // Counterfactual utilities per fixed target: replace i's realized offer
    // with an offer to that target, everything else (including the coins)
    // held at its realized value.
    for (const auto& nd : net_->nodes()) {
      NodeId i = nd.id;
      if (net_->is_terminal(i)) continue;
      const auto& out = net_->out_neighbors(i);
      std::vector<double> per_target(out.size(), 0.0);
      const bool has_packet = q0[static_cast<std::size_t>(i)] > 0;
      if (has_packet) {
        for (std::size_t k = 0; k < out.size(); ++k) {
          NodeId j = out[k];
          if (!trace_.coin[static_cast<std::size_t>(j)]) continue;
          bool wins = true;
          for (NodeId other : offers[static_cast<std::size_t>(j)]) {
            if (other == i) continue;
            if (beats(other, i)) {
              wins = false;
              break;
            }
          }
          if (wins) per_target[k] = static_cast<double>(utility_of(i, j));
        }
      }

      double realized = static_cast<double>(realized_utility[static_cast<std::size_t>(i)]);
      cumulative_utility_[static_cast<std::size_t>(i)] += realized;
      trace_.utility_sum += realized_utility[static_cast<std::size_t>(i)];
      ledger_.add(i, realized, per_target);

      if (auto* dec = std::get_if<DecentralizedPolicy>(&policy_)) {
        auto& learner = *learners_[static_cast<std::size_t>(i)];
        switch (learner.algorithm()) {
          case LearnerAlgorithm::Hedge:
          case LearnerAlgorithm::Greedy: {
            std::vector<double> feedback(static_cast<std::size_t>(learner.actions().size()), 0.0);
            for (std::size_t k = 0; k < out.size(); ++k) feedback[k + 1] = per_target[k];
            learner.update_full(feedback);
            break;
          }
          case LearnerAlgorithm::Exp3:
            if (has_packet)
              learner.update_bandit(realized_action[static_cast<std::size_t>(i)], realized,
                                    learner.last_probability());
            break;
          case LearnerAlgorithm::Fixed:
            break;
        }
      }
    }

    if (utility_ == UtilityModel::QueueDiff &&
        trace_.utility_sum != trace_.clearing_attribution)
      coupling_violations_++;

    // Arrivals join their queues after processing; a packet stamped t is
    // first eligible to be sent at step t+1.
    for (NodeId i : net_->sources())
      if (trace_.arrival[static_cast<std::size_t>(i)]) {
        queue_[static_cast<std::size_t>(i)].push(Packet{t, packet_seq_++, i});
        qlen_[static_cast<std::size_t>(i)]++;
        arrivals_++;
      }

    t_++;
    if (window_ > 0 && t_ % window_ == 0) ledger_.take_snapshot(t_);
  }

 private:
  bool draw_arrival(NodeId i, std::int64_t t) {
    if (arrival_override_) return arrival_override_(i, t);
    return rng_arrival_.bernoulli(net_->arrival_rate(i));
  }

  struct PacketOrder {
    bool operator()(const Packet& a, const Packet& b) const {
      if (a.birth != b.birth) return a.birth > b.birth;  // min-heap by birth
      return a.id > b.id;
    }
  };
  using PacketQueue = std::priority_queue<Packet, std::vector<Packet>, PacketOrder>;

  const NetworkSpec* net_;
  Policy policy_;
  std::int64_t window_;
  ArrivalFn arrival_override_;
  Rng rng_arrival_, rng_coin_, rng_learn_;

  std::vector<PacketQueue> queue_;
  std::vector<std::int64_t> qlen_;
  std::vector<std::optional<Learner>> learners_;
  PriorityRule priority_ = PriorityRule::OldestPacket;
  UtilityModel utility_ = UtilityModel::Unit;
  RegretLedger ledger_;
  StepTrace trace_;
  std::vector<double> cumulative_utility_;

  std::int64_t t_ = 0;
  std::int64_t prefill_ = 0;
  std::int64_t packet_seq_ = 0;
  std::int64_t arrivals_ = 0;
  std::int64_t departures_ = 0;
  std::int64_t coupling_violations_ = 0;
};

// ---------------------------------------------------------------------------
// Whole-run driver
// ---------------------------------------------------------------------------

struct SimOptions {
  std::int64_t horizon = 0;
  std::int64_t window = 1000;
  std::int64_t frame_stride = 0;  // 0: one frame per window
  std::int64_t prefill_steps = 0;
  double slope_tol = 1e-3;  // packets per step
  std::uint64_t seed = 1;
};

struct RunResult {
  std::vector<MetricsFrame> frames;
  StabilityEstimate estimate;
  std::int64_t coupling_violations = 0;
  std::int64_t total_arrivals = 0;
  std::int64_t total_departures = 0;
  std::vector<double> cumulative_utility;  // per node id
  std::vector<double> age_rate;            // oldest age / horizon, per node id
};

namespace detail {

inline double least_squares_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double num = static_cast<double>(pts.size());
  double denom = num * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return (num * sxy - sx * sy) / denom;
}

inline StabilityEstimate estimate_stability(const std::vector<MetricsFrame>& frames,
                                            std::int64_t horizon, double slope_tol) {
  StabilityEstimate est;
  std::vector<std::pair<double, double>> pts;
  std::vector<double> totals;
  for (const auto& f : frames) {
    if (f.t < horizon / 2) continue;
    std::int64_t total = 0;
    for (auto q : f.queue_len) total += q;
    pts.push_back({static_cast<double>(f.t), static_cast<double>(total)});
    totals.push_back(static_cast<double>(total));
    est.max_q = std::max(est.max_q, total);
  }
  if (totals.empty()) return est;
  std::sort(totals.begin(), totals.end());
  est.median_q = totals[totals.size() / 2];
  est.slope = least_squares_slope(pts);
  if (est.slope > slope_tol)
    est.verdict = StabilityEstimate::Verdict::Growth;
  else if (static_cast<double>(est.max_q) <= 3.0 * std::max(est.median_q, 0.0) ||
           est.max_q == 0)
    est.verdict = StabilityEstimate::Verdict::Bounded;
  else
    est.verdict = StabilityEstimate::Verdict::Inconclusive;
  return est;
}

}  // namespace detail

inline RunResult run(const NetworkSpec& net, const Policy& policy, const SimOptions& opts,
                     ArrivalFn arrival_override = nullptr) {
  if (opts.horizon < 10 * opts.window)
    throw Error(ErrorCode::ConfigError, "horizon must be at least 10 windows");
  const std::int64_t stride = opts.frame_stride > 0 ? opts.frame_stride : opts.window;

  Simulation sim(net, policy, opts.seed, opts.window, std::move(arrival_override));
  if (opts.prefill_steps > 0) sim.prefill(opts.prefill_steps);

  RunResult result;
  const int n = net.node_count();
  std::vector<double> last_regret(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t t = 0; t < opts.horizon; ++t) {
    sim.step();
    const std::int64_t now = sim.time();
    if (now % opts.window == 0) {
      for (const auto& nd : net.nodes())
        if (!net.is_terminal(nd.id))
          last_regret[static_cast<std::size_t>(nd.id)] =
              sim.ledger().window_regret(nd.id, now, opts.window);
    }
    if (now % stride == 0 || now == opts.horizon) {
      MetricsFrame f;
      f.t = now;
      f.queue_len.resize(static_cast<std::size_t>(n));
      f.oldest_age.resize(static_cast<std::size_t>(n));
      f.cumulative_utility.resize(static_cast<std::size_t>(n));
      for (NodeId i = 0; i < n; ++i) {
        f.queue_len[static_cast<std::size_t>(i)] = sim.queue_len(i);
        f.oldest_age[static_cast<std::size_t>(i)] = sim.oldest_age(i);
        f.cumulative_utility[static_cast<std::size_t>(i)] = sim.cumulative_utility(i);
      }
      f.phi_age = sim.phi_age();
      f.phi_len = sim.phi_len();
      f.window_regret = last_regret;
      result.frames.push_back(std::move(f));
    }
    // Conservation is an integer identity; any violation is a bug.
    if ((t & 1023) == 0 &&
        sim.total_arrivals() - sim.total_departures() != sim.total_queue())
      throw Error(ErrorCode::TooLarge, "packet conservation violated");
  }

  result.estimate = detail::estimate_stability(result.frames, opts.horizon, opts.slope_tol);
  result.coupling_violations = sim.coupling_violations();
  result.total_arrivals = sim.total_arrivals();
  result.total_departures = sim.total_departures();
  result.cumulative_utility.resize(static_cast<std::size_t>(n));
  result.age_rate.resize(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) {
    result.cumulative_utility[static_cast<std::size_t>(i)] = sim.cumulative_utility(i);
    result.age_rate[static_cast<std::size_t>(i)] =
        static_cast<double>(sim.oldest_age(i)) / static_cast<double>(opts.horizon);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Drift diagnostics
// ---------------------------------------------------------------------------

enum class PotentialKind { AgeBased, LengthBased };

struct DriftProbeOptions {
  std::int64_t window = 1000;
  int windows = 100;
  double beta = 0.2;
  double epsilon = 0.0;   // 0: beta/8
  double epsilon1 = 0.0;  // 0: epsilon * lambda_min / (2n); age-based gaps
  PotentialKind potential = PotentialKind::AgeBased;
  std::int64_t prefill_steps = -1;  // -1: derived from the drift threshold
  std::uint64_t seed = 1;
};

struct WindowStats {
  double z_start = 0.0;
  double z_end = 0.0;
  bool above_threshold = false;
  bool coins_ok = false;
  bool arrivals_ok = false;
  bool regret_ok = false;
  bool event = false;
  double regret_sum = 0.0;
};

struct DriftReport {
  double threshold = 0.0;  // drift threshold b on sqrt(potential)
  std::vector<WindowStats> windows;
  int sampled_above = 0;        // windows starting above the threshold
  int negative_drift_above = 0;
  double mean_drift_above = 0.0;  // mean of z_end - z_start over those windows
  double event_frequency = 0.0;
};

// Drift threshold on sqrt(potential) from the negative-drift analysis.
inline double drift_threshold(const NetworkSpec& net, PotentialKind kind, double beta,
                              std::int64_t w) {
  if (kind == PotentialKind::AgeBased) {
    double lambda_min = std::numeric_limits<double>::infinity(), lambda_sum = 0.0;
    for (NodeId i : net.sources()) {
      lambda_min = std::min(lambda_min, net.arrival_rate(i));
      lambda_sum += net.arrival_rate(i);
    }
    double n = static_cast<double>(net.sources().size());
    return static_cast<double>(w) / std::sqrt(2.0 * lambda_min) *
           std::max(8.0 / beta * lambda_sum, 16.0 * n * n);
  }
  double mu_min = std::numeric_limits<double>::infinity(), mu_sum = 0.0, lambda_sq = 0.0;
  for (const auto& nd : net.nodes()) {
    if (nd.kind == NodeKind::Source)
      lambda_sq += nd.rate * nd.rate;
    else {
      mu_min = std::min(mu_min, nd.rate);
      mu_sum += nd.rate;
    }
  }
  double nm = static_cast<double>(net.node_count());
  double ww = static_cast<double>(w);
  return 8.0 * std::sqrt(2.0 * nm) / (beta * mu_min) *
         (lambda_sq * ww * ww + mu_sum * ww * ww + ww);
}

// Runs `windows` consecutive windows from a backlogged start and reports, per
// window, the change of sqrt(potential) and whether the concentration /
// no-regret event held.
inline DriftReport drift_probe(const NetworkSpec& net, const Policy& policy,
                               const DriftProbeOptions& opts) {
  const std::int64_t w = opts.window;
  const double eps = opts.epsilon > 0.0 ? opts.epsilon : opts.beta / 8.0;
  double lambda_min = std::numeric_limits<double>::infinity();
  for (NodeId i : net.sources()) lambda_min = std::min(lambda_min, net.arrival_rate(i));
  const double n_sources = static_cast<double>(net.sources().size());
  const double eps1 = opts.epsilon1 > 0.0 ? opts.epsilon1 : eps * lambda_min / (2.0 * n_sources);

  DriftReport report;
  report.threshold = drift_threshold(net, opts.potential, opts.beta, w);

  Simulation sim(net, policy, opts.seed, w);

  std::int64_t prefill = opts.prefill_steps;
  if (prefill < 0) {
    // Start far enough above the threshold that the probe can observe the
    // requested number of windows before the backlog drains below it.
    double z_target = 1.25 * report.threshold +
                      static_cast<double>(opts.windows) * static_cast<double>(w) *
                          (1.0 / lambda_min + 2.0);
    double coeff;  // z approx coeff * age-of-backlog
    if (opts.potential == PotentialKind::AgeBased) {
      double lambda_sum = 0.0;
      for (NodeId i : net.sources()) lambda_sum += net.arrival_rate(i);
      coeff = std::sqrt(0.5 * lambda_sum);
    } else {
      double s = 0.0;
      for (NodeId i : net.sources()) s += net.arrival_rate(i) * net.arrival_rate(i);
      coeff = std::sqrt(0.5 * s);
    }
    prefill = static_cast<std::int64_t>(z_target / coeff) + 8 * w;
  }
  if (prefill > 0) sim.prefill(prefill);

  auto z_value = [&]() {
    return std::sqrt(opts.potential == PotentialKind::AgeBased ? sim.phi_age() : sim.phi_len());
  };

  const int n = net.node_count();
  std::vector<std::int64_t> previous_arrival(static_cast<std::size_t>(n),
                                             std::numeric_limits<std::int64_t>::min());

  for (int win = 0; win < opts.windows; ++win) {
    WindowStats ws;
    ws.z_start = z_value();
    ws.above_threshold = ws.z_start > report.threshold;

    std::vector<std::int64_t> coin_count(static_cast<std::size_t>(n), 0);
    std::vector<std::int64_t> arrival_count(static_cast<std::size_t>(n), 0);
    // Gap concentration per source: running sum of lambda_i * gap must stay
    // within eps1*w of the arrival index.
    std::vector<double> gap_sum(static_cast<std::size_t>(n), 0.0);
    std::vector<std::int64_t> gap_count(static_cast<std::size_t>(n), 0);
    bool gaps_ok = true;

    for (std::int64_t s = 0; s < w; ++s) {
      sim.step();
      const auto& tr = sim.last_step();
      for (const auto& nd : net.nodes()) {
        if (!net.is_source(nd.id)) {
          coin_count[static_cast<std::size_t>(nd.id)] += tr.coin[static_cast<std::size_t>(nd.id)];
          continue;
        }
        if (!tr.arrival[static_cast<std::size_t>(nd.id)]) continue;
        NodeId i = nd.id;
        arrival_count[static_cast<std::size_t>(i)]++;
        if (previous_arrival[static_cast<std::size_t>(i)] !=
            std::numeric_limits<std::int64_t>::min()) {
          gap_sum[static_cast<std::size_t>(i)] +=
              net.arrival_rate(i) *
              static_cast<double>(tr.t - previous_arrival[static_cast<std::size_t>(i)]);
          gap_count[static_cast<std::size_t>(i)]++;
          if (std::fabs(gap_sum[static_cast<std::size_t>(i)] -
                        static_cast<double>(gap_count[static_cast<std::size_t>(i)])) >
              eps1 * static_cast<double>(w))
            gaps_ok = false;
        }
        previous_arrival[static_cast<std::size_t>(i)] = tr.t;
      }
    }

    ws.z_end = z_value();
    ws.coins_ok = true;
    for (const auto& nd : net.nodes())
      if (!net.is_source(nd.id) &&
          static_cast<double>(coin_count[static_cast<std::size_t>(nd.id)]) <
              (1.0 - eps) * nd.rate * static_cast<double>(w))
        ws.coins_ok = false;

    for (const auto& nd : net.nodes())
      if (!net.is_terminal(nd.id))
        ws.regret_sum += sim.ledger().window_regret(nd.id, sim.time(), w);

    if (opts.potential == PotentialKind::AgeBased) {
      ws.arrivals_ok = gaps_ok;
      ws.regret_ok = ws.regret_sum + n_sources <= eps * lambda_min * static_cast<double>(w) / 2.0;
    } else {
      ws.arrivals_ok = true;
      for (NodeId i : net.sources())
        if (static_cast<double>(arrival_count[static_cast<std::size_t>(i)]) >
            (1.0 + eps) * net.arrival_rate(i) * static_cast<double>(w))
          ws.arrivals_ok = false;
      ws.regret_ok = ws.regret_sum <= static_cast<double>(w);
    }
    ws.event = ws.coins_ok && ws.arrivals_ok && ws.regret_ok;

    if (ws.above_threshold) {
      report.sampled_above++;
      report.mean_drift_above += ws.z_end - ws.z_start;
      if (ws.z_end < ws.z_start) report.negative_drift_above++;
    }
    if (ws.event) report.event_frequency += 1.0;
    report.windows.push_back(ws);
  }

  if (report.sampled_above > 0) report.mean_drift_above /= report.sampled_above;
  report.event_frequency /= static_cast<double>(opts.windows);
  return report;
}

}  // namespace qnet
