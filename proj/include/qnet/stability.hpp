#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "qnet/bvn.hpp"
#include "qnet/errors.hpp"
#include "qnet/lp.hpp"
#include "qnet/matching.hpp"
#include "qnet/network.hpp"

namespace qnet {

// Verdicts are decided by maximizing a slack variable; "strictly feasible"
// means the optimum exceeds this margin. Rates here are order 0.1..1, so a
// fixed margin keeps verdicts reproducible across solver roundoff.
inline constexpr double kStrictSlack = 1e-7;
inline constexpr double kNumericTol = 1e-9;

// A path as its node sequence, source first, terminal last.
using Path = std::vector<NodeId>;

// Edge variables of the routing linear system; absent edges are zero.
struct FractionalRouting {
  std::map<Edge, double> z;

  double at(NodeId a, NodeId b) const {
    auto it = z.find({a, b});
    return it == z.end() ? 0.0 : it->second;
  }
  double out_sum(const NetworkSpec& net, NodeId a) const {
    double s = 0.0;
    for (NodeId b : net.out_neighbors(a)) s += at(a, b);
    return s;
  }
  double in_sum(const NetworkSpec& net, NodeId b) const {
    double s = 0.0;
    for (NodeId a : net.in_neighbors(b)) s += at(a, b);
    return s;
  }
};

// Source-to-terminal path flows; paths[k] starts at its owning source, so the
// zero pattern of the flow system is encoded structurally.
struct PathFlow {
  std::vector<Path> paths;
  std::vector<double> flow;  // aligned with paths
};

struct DualWitness {
  std::vector<Edge> edges;  // vertex-disjoint path set (a matching when bipartite)
  double value = 0.0;       // sum over edges of (alpha_tail - alpha_head) * mu_head
  double threshold = 0.0;   // sum over sources of alpha_i * lambda_i
  bool strict() const { return value > threshold; }
};

struct PolicyComponent {
  std::vector<Edge> edges;  // vertex-disjoint path set
  double probability = 0.0;
};

// Executable centralized policy: sample a component each step and send along
// its edges.
struct PolicyDistribution {
  std::vector<PolicyComponent> components;

  double probability_sum() const {
    double s = 0.0;
    for (const auto& c : components) s += c.probability;
    return s;
  }
  std::map<Edge, double> marginals() const {
    std::map<Edge, double> m;
    for (const auto& c : components)
      for (const auto& e : c.edges) m[e] += c.probability;
    return m;
  }
};

struct BipartiteStabilityVerdict {
  bool feasible = false;
  double slack = 0.0;  // optimal strictness margin
  // Feasible: routing[qi][sj] with (P mu)_i >= lambda_i + slack.
  std::vector<std::vector<double>> routing;
  // Infeasible: alpha >= 0 (indexed like view.queues()) with
  // alpha'M mu <= alpha'lambda + kStrictSlack for every matching M.
  std::vector<double> certificate;
};

struct FlowStabilityVerdict {
  bool feasible = false;
  double slack = 0.0;
  PathFlow flow;
};

struct BinaryConditionOutcome {
  bool holds = false;
  std::vector<int> failing_alpha;  // 0/1 per queue index; empty when holds
  DualWitness failing_witness;     // best witness at the failing alpha
};

// ---------------------------------------------------------------------------
// Centralized conditions, bipartite
// ---------------------------------------------------------------------------

// Decides whether some fractional matching P satisfies P mu > lambda
// elementwise. Returns the max-slack routing, or the Farkas certificate read
// off the LP duals when no strictly positive slack exists.
inline BipartiteStabilityVerdict check_bipartite_stabilizable(const NetworkSpec& net) {
  BipartiteView view(net);
  const int n = view.queue_count();
  const int m = view.server_count();

  lp::Problem<double> p;
  std::vector<std::vector<int>> var(static_cast<std::size_t>(n),
                                    std::vector<int>(static_cast<std::size_t>(m), -1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (view.has_edge(i, j)) var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = p.add_var();
  const int s_pos = p.add_var(1.0), s_neg = p.add_var(-1.0);

  std::vector<int> coverage_row(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> c;
    for (int j = 0; j < m; ++j)
      if (var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >= 0)
        c.push_back({var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], view.mu(j)});
    c.push_back({s_pos, -1.0});
    c.push_back({s_neg, 1.0});
    coverage_row[static_cast<std::size_t>(i)] = static_cast<int>(p.rows.size());
    p.add_row(std::move(c), lp::Relation::GreaterEq, view.lambda(i));
  }
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> c;
    for (int j = 0; j < m; ++j)
      if (var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >= 0)
        c.push_back({var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 1.0});
    p.add_row(std::move(c), lp::Relation::LessEq, 1.0);
  }
  for (int j = 0; j < m; ++j) {
    std::vector<std::pair<int, double>> c;
    for (int i = 0; i < n; ++i)
      if (var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >= 0)
        c.push_back({var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 1.0});
    p.add_row(std::move(c), lp::Relation::LessEq, 1.0);
  }

  auto sol = lp::solve(p);
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::TooLarge, "slack LP did not reach an optimum");

  BipartiteStabilityVerdict verdict;
  verdict.slack = sol.objective;
  verdict.feasible = sol.objective > kStrictSlack;
  if (verdict.feasible) {
    verdict.routing.assign(static_cast<std::size_t>(n),
                           std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        int v = var[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (v >= 0)
          verdict.routing[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              sol.x[static_cast<std::size_t>(v)];
      }
  } else {
    // Dual of the i-th coverage (>=) row is <= 0; its negation is the
    // certificate, normalized to sum 1 by the s-variable dual constraint.
    verdict.certificate.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      verdict.certificate[static_cast<std::size_t>(i)] =
          std::max(0.0, -sol.dual[static_cast<std::size_t>(coverage_row[static_cast<std::size_t>(i)])]);
  }
  return verdict;
}

// Max-weight matching with edge weight alpha_i * mu_j; the dual witness side
// of the bipartite condition.
inline DualWitness best_matching(const BipartiteView& view, const std::vector<double>& alpha) {
  const int n = view.queue_count();
  const int m = view.server_count();
  if (static_cast<int>(alpha.size()) != n)
    throw Error(ErrorCode::TooLarge, "alpha size must equal queue count");
  for (double a : alpha)
    if (a < 0.0) throw Error(ErrorCode::TooLarge, "alpha must be nonnegative");

  std::vector<std::vector<double>> w(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(m), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (view.has_edge(i, j))
        w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            alpha[static_cast<std::size_t>(i)] * view.mu(j);

  auto match = max_weight_matching(w);
  DualWitness witness;
  witness.value = match.value;
  for (int i = 0; i < n; ++i) {
    int j = match.pair_left[static_cast<std::size_t>(i)];
    if (j >= 0)
      witness.edges.push_back({view.queues()[static_cast<std::size_t>(i)],
                               view.servers()[static_cast<std::size_t>(j)]});
    witness.threshold += alpha[static_cast<std::size_t>(i)] * view.lambda(i);
  }
  return witness;
}

// ---------------------------------------------------------------------------
// Centralized conditions, DAG
// ---------------------------------------------------------------------------

// All simple source-to-terminal paths in lexicographic node-id order.
inline std::vector<Path> enumerate_paths(const NetworkSpec& net, std::size_t cap = 1000000) {
  std::vector<Path> out;
  Path cur;
  auto dfs = [&](auto&& self, NodeId x) -> void {
    cur.push_back(x);
    if (net.is_terminal(x)) {
      if (out.size() >= cap)
        throw Error(ErrorCode::PathExplosion,
                    "more than " + std::to_string(cap) + " source-terminal paths");
      out.push_back(cur);
    } else {
      for (NodeId y : net.out_neighbors(x)) self(self, y);
    }
    cur.pop_back();
  };
  for (NodeId s : net.sources()) dfs(dfs, s);
  return out;
}

namespace detail {

inline FlowStabilityVerdict solve_flow_system(const NetworkSpec& net,
                                              const std::vector<double>& effective_mu,
                                              std::size_t path_cap) {
  auto paths = enumerate_paths(net, path_cap);
  const int P = static_cast<int>(paths.size());

  lp::Problem<double> lpp;
  for (int k = 0; k < P; ++k) lpp.add_var();
  const int s_pos = lpp.add_var(1.0), s_neg = lpp.add_var(-1.0);

  auto mu = [&](NodeId x) { return effective_mu[static_cast<std::size_t>(x)]; };

  // Outgoing utilization of each sending node: sum over its out-edges of
  // flow / mu(head) <= 1.
  std::map<NodeId, std::vector<std::pair<int, double>>> util_rows, load_rows;
  std::map<NodeId, std::vector<std::pair<int, double>>> source_rows;
  for (int k = 0; k < P; ++k) {
    const auto& path = paths[static_cast<std::size_t>(k)];
    for (std::size_t e = 0; e + 1 < path.size(); ++e) {
      NodeId x = path[e], y = path[e + 1];
      util_rows[x].push_back({k, 1.0 / mu(y)});
      load_rows[y].push_back({k, 1.0});
    }
    source_rows[path.front()].push_back({k, 1.0});
  }
  for (auto& [x, coeffs] : util_rows)
    lpp.add_row(std::move(coeffs), lp::Relation::LessEq, 1.0);
  for (auto& [y, coeffs] : load_rows)
    lpp.add_row(std::move(coeffs), lp::Relation::LessEq, mu(y));
  for (NodeId i : net.sources()) {
    auto coeffs = source_rows.count(i) ? source_rows[i] : std::vector<std::pair<int, double>>{};
    coeffs.push_back({s_pos, -1.0});
    coeffs.push_back({s_neg, 1.0});
    lpp.add_row(std::move(coeffs), lp::Relation::GreaterEq, net.arrival_rate(i));
  }

  auto sol = lp::solve(lpp);
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::TooLarge, "flow LP did not reach an optimum");

  FlowStabilityVerdict verdict;
  verdict.slack = sol.objective;
  verdict.feasible = sol.objective > kStrictSlack;
  verdict.flow.paths = std::move(paths);
  verdict.flow.flow.assign(static_cast<std::size_t>(P), 0.0);
  for (int k = 0; k < P; ++k)
    verdict.flow.flow[static_cast<std::size_t>(k)] = std::max(0.0, sol.x[static_cast<std::size_t>(k)]);
  return verdict;
}

}  // namespace detail

// Decides centralized stabilizability of a DAG network through the
// source-terminal flow system, maximizing the per-source slack.
inline FlowStabilityVerdict check_dag_stabilizable(const NetworkSpec& net,
                                                   std::size_t path_cap = 1000000) {
  std::vector<double> mu(static_cast<std::size_t>(net.node_count()), 0.0);
  for (const auto& nd : net.nodes())
    if (nd.kind != NodeKind::Source) mu[static_cast<std::size_t>(nd.id)] = nd.rate;
  return detail::solve_flow_system(net, mu, path_cap);
}

// Converts a strictly feasible path flow into edge variables satisfying the
// routing system with strict inequality at sources and loaded interior
// nodes. First divide each edge's flow by the head's service rate, then damp
// by gamma^((t(x)+1)/(m+1) - 1), where t(x) is the topological rank of x
// among the servers (0 for sources) and gamma is the smallest ratio of
// delivered flow to arrival rate.
inline FractionalRouting flow_to_edge(const NetworkSpec& net, const PathFlow& f) {
  std::map<NodeId, double> delivered;
  for (std::size_t k = 0; k < f.paths.size(); ++k)
    delivered[f.paths[k].front()] += f.flow[k];

  double gamma = std::numeric_limits<double>::infinity();
  for (NodeId i : net.sources())
    gamma = std::min(gamma, delivered[i] / net.arrival_rate(i));
  if (!(gamma > 1.0))
    throw Error(ErrorCode::NoStrictSlack,
                "path flow has no strict slack at some source (gamma = " + std::to_string(gamma) + ")");

  std::map<Edge, double> base;  // flow over edge / mu(head)
  for (std::size_t k = 0; k < f.paths.size(); ++k) {
    const auto& path = f.paths[k];
    for (std::size_t e = 0; e + 1 < path.size(); ++e)
      base[{path[e], path[e + 1]}] += f.flow[k] / net.service_rate(path[e + 1]);
  }

  // Topological rank of the non-source nodes, 1-based.
  const int m = net.node_count() - static_cast<int>(net.sources().size());
  std::vector<int> rank(static_cast<std::size_t>(net.node_count()), 0);
  int next = 1;
  for (NodeId x : net.topological_order())
    if (!net.is_source(x)) rank[static_cast<std::size_t>(x)] = next++;

  FractionalRouting out;
  for (auto& [edge, z1] : base) {
    if (z1 <= 0.0) continue;
    double exponent = static_cast<double>(rank[static_cast<std::size_t>(edge.first)] + 1) /
                          static_cast<double>(m + 1) - 1.0;
    out.z[edge] = z1 * std::pow(gamma, exponent);
  }
  return out;
}

// Margins of the routing linear system, for verifying flow_to_edge output.
struct EdgeSystemMargins {
  double source_margin = std::numeric_limits<double>::infinity();
  // Over interior nodes whose in-edges all carry positive z (the conditional
  // constraint's activation pattern).
  double interior_margin = std::numeric_limits<double>::infinity();
  double max_out_sum = 0.0;
  double max_in_sum = 0.0;
  double min_z = 0.0;

  bool strict(double margin = kNumericTol) const {
    return source_margin > margin && interior_margin > margin &&
           max_out_sum <= 1.0 + kNumericTol && max_in_sum <= 1.0 + kNumericTol &&
           min_z >= -kNumericTol;
  }
};

inline EdgeSystemMargins edge_system_margins(const NetworkSpec& net, const FractionalRouting& r) {
  EdgeSystemMargins mg;
  for (const auto& [e, v] : r.z) {
    mg.min_z = std::min(mg.min_z, v);
    if (!net.has_edge(e.first, e.second))
      throw Error(ErrorCode::NotSubstochastic, "routing uses a non-edge");
  }
  for (NodeId i : net.sources()) {
    double served = 0.0;
    for (NodeId j : net.out_neighbors(i)) served += r.at(i, j) * net.service_rate(j);
    mg.source_margin = std::min(mg.source_margin, served - net.arrival_rate(i));
  }
  for (NodeId x : net.interior()) {
    bool all_positive = true;
    double inflow = 0.0;
    for (NodeId j : net.in_neighbors(x)) {
      double v = r.at(j, x);
      if (v <= 0.0) all_positive = false;
      inflow += v;
    }
    if (!all_positive) continue;
    double outflow = 0.0;
    for (NodeId j : net.out_neighbors(x)) outflow += r.at(x, j) * net.service_rate(j);
    mg.interior_margin = std::min(mg.interior_margin, outflow - net.service_rate(x) * inflow);
  }
  for (const auto& nd : net.nodes()) {
    if (!net.is_terminal(nd.id)) mg.max_out_sum = std::max(mg.max_out_sum, r.out_sum(net, nd.id));
    if (!net.is_source(nd.id)) mg.max_in_sum = std::max(mg.max_in_sum, r.in_sum(net, nd.id));
  }
  return mg;
}

// Validates a hand-built path flow against the flow system at tolerance tol
// (capacity rows and the arrival coverage; conservation holds structurally
// for source-terminal paths).
inline bool flow_satisfies_system(const NetworkSpec& net, const PathFlow& f, double tol = kNumericTol) {
  std::map<NodeId, double> util, load, delivered;
  for (std::size_t k = 0; k < f.paths.size(); ++k) {
    if (f.flow[k] < -tol) return false;
    const auto& path = f.paths[k];
    delivered[path.front()] += f.flow[k];
    for (std::size_t e = 0; e + 1 < path.size(); ++e) {
      if (!net.has_edge(path[e], path[e + 1])) return false;
      util[path[e]] += f.flow[k] / net.service_rate(path[e + 1]);
      load[path[e + 1]] += f.flow[k];
    }
  }
  for (const auto& [x, u] : util)
    if (u > 1.0 + tol) return false;
  for (const auto& [y, v] : load)
    if (v > net.service_rate(y) + tol) return false;
  for (NodeId i : net.sources())
    if (!(delivered[i] > net.arrival_rate(i))) return false;
  return true;
}

// Max-weight vertex-disjoint path set for a given potential vector alpha
// (indexed by node id, zero on terminals): a matching on the split graph
// with edge weight (alpha_tail - alpha_head) * mu_head, negative weights
// dropped.
inline DualWitness best_path_set(const NetworkSpec& net, const std::vector<double>& alpha,
                                 double mu_scale = 1.0) {
  if (static_cast<int>(alpha.size()) != net.node_count())
    throw Error(ErrorCode::TooLarge, "alpha must have one entry per node");
  for (const auto& nd : net.nodes()) {
    if (alpha[static_cast<std::size_t>(nd.id)] < 0.0)
      throw Error(ErrorCode::TooLarge, "alpha must be nonnegative");
    if (nd.kind == NodeKind::Terminal && alpha[static_cast<std::size_t>(nd.id)] != 0.0)
      throw Error(ErrorCode::TooLarge, "alpha must vanish on terminals");
  }

  SplitGraph split(net);
  const int L = split.left_count(), R = split.right_count();
  std::vector<std::vector<double>> w(static_cast<std::size_t>(L),
                                     std::vector<double>(static_cast<std::size_t>(R), 0.0));
  for (int li = 0; li < L; ++li)
    for (int rj = 0; rj < R; ++rj)
      if (split.has_edge(li, rj)) {
        NodeId a = split.left_node(li), b = split.right_node(rj);
        double weight = (alpha[static_cast<std::size_t>(a)] - alpha[static_cast<std::size_t>(b)]) *
                        mu_scale * net.service_rate(b);
        w[static_cast<std::size_t>(li)][static_cast<std::size_t>(rj)] = weight;
      }

  auto match = max_weight_matching(w);
  DualWitness witness;
  witness.value = match.value;
  std::vector<std::pair<int, int>> pairs;
  for (int li = 0; li < L; ++li)
    if (match.pair_left[static_cast<std::size_t>(li)] >= 0)
      pairs.push_back({li, match.pair_left[static_cast<std::size_t>(li)]});
  witness.edges = split.decode(pairs);
  for (NodeId i : net.sources())
    witness.threshold += alpha[static_cast<std::size_t>(i)] * net.arrival_rate(i);
  return witness;
}

// ---------------------------------------------------------------------------
// Decentralized sufficiency conditions
// ---------------------------------------------------------------------------

// Binary-alpha halved-capacity condition for bipartite networks: for every
// alpha in {0,1}^n \ {0}, 1/2 (1-beta) best_matching(alpha) > alpha'lambda.
inline BinaryConditionOutcome bicriteria_condition_bipartite(const NetworkSpec& net, double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw Error(ErrorCode::ConfigError, "beta must lie in (0,1)");
  BipartiteView view(net);
  const int n = view.queue_count();
  if (n > 25) throw Error(ErrorCode::TooManyQueues, "enumeration bound is 25 queues");

  BinaryConditionOutcome out;
  out.holds = true;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    for (int i = 0; i < n; ++i) alpha[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1.0 : 0.0;
    auto witness = best_matching(view, alpha);
    if (!(0.5 * (1.0 - beta) * witness.value > witness.threshold)) {
      out.holds = false;
      out.failing_alpha.assign(static_cast<std::size_t>(n), 0);
      for (int i = 0; i < n; ++i) out.failing_alpha[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
      out.failing_witness = witness;
      return out;
    }
  }
  return out;
}

// Halved-capacity condition for DAG networks, decided by the flow system on
// service rates scaled to 1/2 (1-beta) (optionally times mu_scale, letting
// callers probe hypothetical capacities beyond the validation range).
inline bool bicriteria_condition_dag(const NetworkSpec& net, double beta, double mu_scale = 1.0,
                                     std::size_t path_cap = 1000000) {
  if (!(beta > 0.0 && beta < 1.0))
    throw Error(ErrorCode::ConfigError, "beta must lie in (0,1)");
  std::vector<double> mu(static_cast<std::size_t>(net.node_count()), 0.0);
  for (const auto& nd : net.nodes())
    if (nd.kind != NodeKind::Source)
      mu[static_cast<std::size_t>(nd.id)] = 0.5 * (1.0 - beta) * mu_scale * nd.rate;
  return detail::solve_flow_system(net, mu, path_cap).feasible;
}

// Witness mode of the DAG condition: the best vertex-disjoint path set for an
// explicit alpha under the scaled service rates.
inline DualWitness bicriteria_dag_witness(const NetworkSpec& net, double beta,
                                          const std::vector<double>& alpha, double mu_scale = 1.0) {
  return best_path_set(net, alpha, 0.5 * (1.0 - beta) * mu_scale);
}

// Refined complete-bipartite condition: with arrival and service rates sorted
// descending, k/(2k-1) (1-beta) sum_{i<=k} mu_i > sum_{i<=k} lambda_i for
// every k up to the number of queues.
inline bool bicriteria_condition_cb_refined(const NetworkSpec& net, double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw Error(ErrorCode::ConfigError, "beta must lie in (0,1)");
  if (!net.is_complete_bipartite())
    throw Error(ErrorCode::NotCompleteBipartite, "refined condition needs a complete bipartite network");
  BipartiteView view(net);
  std::vector<double> lambda, mu;
  for (int i = 0; i < view.queue_count(); ++i) lambda.push_back(view.lambda(i));
  for (int j = 0; j < view.server_count(); ++j) mu.push_back(view.mu(j));
  std::sort(lambda.rbegin(), lambda.rend());
  std::sort(mu.rbegin(), mu.rend());

  double lam_sum = 0.0, mu_sum = 0.0;
  for (std::size_t k = 1; k <= lambda.size(); ++k) {
    lam_sum += lambda[k - 1];
    if (k <= mu.size()) mu_sum += mu[k - 1];
    double lhs = static_cast<double>(k) / static_cast<double>(2 * k - 1) * (1.0 - beta) * mu_sum;
    if (!(lhs > lam_sum)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Decompositions into executable policies
// ---------------------------------------------------------------------------

// Decomposes edge variables satisfying the degree constraints into a
// distribution over vertex-disjoint path sets whose marginals reproduce z.
inline PolicyDistribution decompose_paths(const NetworkSpec& net, const FractionalRouting& r) {
  SplitGraph split(net);
  const int L = split.left_count(), R = split.right_count();
  std::vector<std::vector<double>> S(static_cast<std::size_t>(L),
                                     std::vector<double>(static_cast<std::size_t>(R), 0.0));
  for (const auto& [e, v] : r.z) {
    if (v == 0.0) continue;
    if (!net.has_edge(e.first, e.second))
      throw Error(ErrorCode::NotSubstochastic, "routing value on a non-edge");
    S[static_cast<std::size_t>(split.left_index(e.first))]
     [static_cast<std::size_t>(split.right_index(e.second))] = v;
  }

  auto components = decompose_substochastic(S);
  PolicyDistribution dist;
  for (const auto& c : components) {
    PolicyComponent pc;
    pc.probability = c.weight;
    pc.edges = split.decode(c.pairs);
    if (!is_vertex_disjoint_path_set(pc.edges))
      throw Error(ErrorCode::NotSubstochastic, "decomposition produced a non-disjoint component");
    dist.components.push_back(std::move(pc));
  }
  return dist;
}

// Bipartite specialization working directly on a queue-by-server matrix.
inline PolicyDistribution decompose_bvn(const BipartiteView& view,
                                        const std::vector<std::vector<double>>& P) {
  auto components = decompose_substochastic(P);
  PolicyDistribution dist;
  for (const auto& c : components) {
    PolicyComponent pc;
    pc.probability = c.weight;
    for (auto [i, j] : c.pairs)
      pc.edges.push_back({view.queues()[static_cast<std::size_t>(i)],
                          view.servers()[static_cast<std::size_t>(j)]});
    dist.components.push_back(std::move(pc));
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Instance hash
// ---------------------------------------------------------------------------

// FNV-1a over the canonical instance description; embedded in serialized
// verdicts and certificates so they can be traced back to their inputs.
inline std::uint64_t instance_hash(const NetworkSpec& net) {
  std::string repr;
  char buf[64];
  for (const auto& nd : net.nodes()) {
    std::snprintf(buf, sizeof buf, "%d:%s:%.17g;", nd.id, to_string(nd.kind), nd.rate);
    repr += buf;
  }
  for (const auto& [a, b] : net.edges()) {
    std::snprintf(buf, sizeof buf, "%d>%d;", a, b);
    repr += buf;
  }
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : repr) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace qnet
