#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qnet/errors.hpp"

namespace qnet {

using NodeId = int;

enum class NodeKind { Source, Server, Terminal };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Source: return "source";
    case NodeKind::Server: return "server";
    case NodeKind::Terminal: return "terminal";
  }
  return "?";
}

struct NodeSpec {
  NodeId id = 0;
  NodeKind kind = NodeKind::Source;
  // Arrival rate for sources (must lie in (0,1)); processing rate for servers
  // and terminals (must lie in (0,1]; exactly 1 means a deterministic server).
  double rate = 0.0;
  std::string name;  // metadata only
};

using Edge = std::pair<NodeId, NodeId>;

struct Violation {
  ErrorCode code;
  std::string message;
};

// A validated directed acyclic queueing network. Sources have no in-edges,
// terminals no out-edges, interior servers both. Immutable once built; safe
// to share across threads.
class NetworkSpec {
 public:
  // Validates and constructs. Collect=true callers use try_validate below.
  static NetworkSpec validate(std::vector<NodeSpec> nodes, std::vector<Edge> edges) {
    std::vector<Violation> violations;
    auto net = build(std::move(nodes), std::move(edges), violations);
    if (!violations.empty() || !net) {
      const auto& v = violations.front();
      throw Error(v.code, v.message);
    }
    return *net;
  }

  static std::optional<NetworkSpec> try_validate(std::vector<NodeSpec> nodes,
                                                 std::vector<Edge> edges,
                                                 std::vector<Violation>& violations) {
    return build(std::move(nodes), std::move(edges), violations);
  }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const NodeSpec& node(NodeId i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<Edge>& edges() const { return edges_; }

  NodeKind kind(NodeId i) const { return node(i).kind; }
  bool is_source(NodeId i) const { return kind(i) == NodeKind::Source; }
  bool is_terminal(NodeId i) const { return kind(i) == NodeKind::Terminal; }
  bool is_interior(NodeId i) const { return kind(i) == NodeKind::Server; }

  double arrival_rate(NodeId i) const { return node(i).rate; }
  double service_rate(NodeId i) const { return node(i).rate; }

  const std::vector<NodeId>& sources() const { return sources_; }
  const std::vector<NodeId>& interior() const { return interior_; }
  const std::vector<NodeId>& terminals() const { return terminals_; }

  const std::vector<NodeId>& out_neighbors(NodeId i) const {
    return out_[static_cast<std::size_t>(i)];
  }
  const std::vector<NodeId>& in_neighbors(NodeId i) const {
    return in_[static_cast<std::size_t>(i)];
  }

  bool has_edge(NodeId a, NodeId b) const {
    const auto& o = out_neighbors(a);
    return std::binary_search(o.begin(), o.end(), b);
  }

  bool is_bipartite() const { return interior_.empty(); }

  bool is_complete_bipartite() const {
    if (!is_bipartite()) return false;
    return edges_.size() == sources_.size() * terminals_.size();
  }

  // Deterministic topological order: Kahn's algorithm, ready set keyed by id.
  const std::vector<NodeId>& topological_order() const { return topo_; }

  // Total queue-bearing nodes (sources plus interior servers).
  std::vector<NodeId> queue_nodes() const {
    std::vector<NodeId> q = sources_;
    q.insert(q.end(), interior_.begin(), interior_.end());
    std::sort(q.begin(), q.end());
    return q;
  }

 private:
  static std::optional<NetworkSpec> build(std::vector<NodeSpec> nodes, std::vector<Edge> edges,
                                          std::vector<Violation>& out) {
    NetworkSpec net;
    const int n = static_cast<int>(nodes.size());
    if (n == 0) {
      out.push_back({ErrorCode::DegreeError, "network has no nodes"});
      return std::nullopt;
    }

    // Ids must be unique and dense in [0, n).
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto& nd : nodes) {
      if (nd.id < 0 || nd.id >= n || seen[static_cast<std::size_t>(nd.id)]) {
        out.push_back({ErrorCode::DegreeError,
                       "node ids must be unique and dense in [0,|V|); offender id " +
                           std::to_string(nd.id)});
        return std::nullopt;
      }
      seen[static_cast<std::size_t>(nd.id)] = 1;
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });

    net.nodes_ = std::move(nodes);
    net.out_.assign(static_cast<std::size_t>(n), {});
    net.in_.assign(static_cast<std::size_t>(n), {});

    std::set<Edge> dedup;
    for (const auto& [a, b] : edges) {
      if (a < 0 || a >= n || b < 0 || b >= n) {
        out.push_back({ErrorCode::DegreeError, "edge (" + std::to_string(a) + "," +
                                                   std::to_string(b) + ") references unknown node"});
        continue;
      }
      if (a == b) {
        out.push_back({ErrorCode::CycleError, "self-loop at node " + std::to_string(a)});
        continue;
      }
      if (!dedup.insert({a, b}).second) continue;  // ignore duplicates
      net.out_[static_cast<std::size_t>(a)].push_back(b);
      net.in_[static_cast<std::size_t>(b)].push_back(a);
    }
    net.edges_.assign(dedup.begin(), dedup.end());
    for (auto& v : net.out_) std::sort(v.begin(), v.end());
    for (auto& v : net.in_) std::sort(v.begin(), v.end());

    // Kind / degree consistency. Sources must be able to reach a server, so
    // an isolated source is a degree violation rather than a trivial verdict.
    for (const auto& nd : net.nodes_) {
      const auto id = nd.id;
      const auto indeg = net.in_[static_cast<std::size_t>(id)].size();
      const auto outdeg = net.out_[static_cast<std::size_t>(id)].size();
      switch (nd.kind) {
        case NodeKind::Source:
          if (indeg != 0)
            out.push_back({ErrorCode::DegreeError,
                           "source " + std::to_string(id) + " has incoming edges"});
          if (outdeg == 0)
            out.push_back({ErrorCode::DegreeError,
                           "source " + std::to_string(id) + " has no outgoing edge"});
          break;
        case NodeKind::Terminal:
          if (outdeg != 0)
            out.push_back({ErrorCode::DegreeError,
                           "terminal " + std::to_string(id) + " has outgoing edges"});
          if (indeg == 0)
            out.push_back({ErrorCode::DegreeError,
                           "terminal " + std::to_string(id) + " has no incoming edge"});
          break;
        case NodeKind::Server:
          if (indeg == 0 || outdeg == 0)
            out.push_back({ErrorCode::DegreeError,
                           "server " + std::to_string(id) + " needs both in- and out-edges"});
          break;
      }
      if (nd.kind == NodeKind::Source) {
        if (!(nd.rate > 0.0 && nd.rate < 1.0))
          out.push_back({ErrorCode::RateRangeError, "arrival rate of node " + std::to_string(id) +
                                                        " must lie in (0,1)"});
      } else {
        if (!(nd.rate > 0.0 && nd.rate <= 1.0))
          out.push_back({ErrorCode::RateRangeError, "service rate of node " + std::to_string(id) +
                                                        " must lie in (0,1]"});
      }
    }

    // Acyclicity via Kahn; ready nodes popped in id order for determinism.
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    for (const auto& [a, b] : net.edges_) indeg[static_cast<std::size_t>(b)]++;
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId i = 0; i < n; ++i)
      if (indeg[static_cast<std::size_t>(i)] == 0) ready.push(i);
    while (!ready.empty()) {
      NodeId i = ready.top();
      ready.pop();
      net.topo_.push_back(i);
      for (NodeId j : net.out_[static_cast<std::size_t>(i)])
        if (--indeg[static_cast<std::size_t>(j)] == 0) ready.push(j);
    }
    if (static_cast<int>(net.topo_.size()) != n) {
      std::string stuck;
      for (NodeId i = 0; i < n; ++i)
        if (indeg[static_cast<std::size_t>(i)] > 0) stuck += " " + std::to_string(i);
      out.push_back({ErrorCode::CycleError, "cycle through nodes:" + stuck});
    }

    for (const auto& nd : net.nodes_) {
      switch (nd.kind) {
        case NodeKind::Source: net.sources_.push_back(nd.id); break;
        case NodeKind::Server: net.interior_.push_back(nd.id); break;
        case NodeKind::Terminal: net.terminals_.push_back(nd.id); break;
      }
    }

    if (!out.empty()) return std::nullopt;
    return net;
  }

  std::vector<NodeSpec> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> out_;
  std::vector<std::vector<NodeId>> in_;
  std::vector<NodeId> sources_, interior_, terminals_;
  std::vector<NodeId> topo_;
};

// Queue/server view of a single-layer network. Construction fails when the
// network has interior servers.
class BipartiteView {
 public:
  explicit BipartiteView(const NetworkSpec& net) : net_(&net) {
    if (!net.is_bipartite())
      throw Error(ErrorCode::NotBipartite,
                  "network has interior servers; bipartite view unavailable");
    queues_ = net.sources();
    servers_ = net.terminals();
  }

  const std::vector<NodeId>& queues() const { return queues_; }
  const std::vector<NodeId>& servers() const { return servers_; }
  int queue_count() const { return static_cast<int>(queues_.size()); }
  int server_count() const { return static_cast<int>(servers_.size()); }

  // Dense row/column positions of node ids.
  int queue_index(NodeId id) const { return index_of(queues_, id); }
  int server_index(NodeId id) const { return index_of(servers_, id); }

  bool has_edge(int qi, int sj) const {
    return net_->has_edge(queues_[static_cast<std::size_t>(qi)],
                          servers_[static_cast<std::size_t>(sj)]);
  }

  double lambda(int qi) const {
    return net_->arrival_rate(queues_[static_cast<std::size_t>(qi)]);
  }
  double mu(int sj) const {
    return net_->service_rate(servers_[static_cast<std::size_t>(sj)]);
  }

  const NetworkSpec& net() const { return *net_; }

 private:
  static int index_of(const std::vector<NodeId>& v, NodeId id) {
    auto it = std::lower_bound(v.begin(), v.end(), id);
    if (it == v.end() || *it != id) throw Error(ErrorCode::DegreeError, "node not in view");
    return static_cast<int>(it - v.begin());
  }

  const NetworkSpec* net_;
  std::vector<NodeId> queues_, servers_;
};

// Bipartite double cover used by the path-ensemble machinery: one left vertex
// per node that can send (out-copy), one right vertex per node that can
// receive (in-copy), one split edge per network edge. Matchings here are in
// bijection with vertex-disjoint path sets of the network: reading a matching
// back as network edges yields a set with all-distinct tails and all-distinct
// heads.
class SplitGraph {
 public:
  explicit SplitGraph(const NetworkSpec& net) : net_(&net) {
    for (const auto& nd : net.nodes()) {
      if (!net.is_terminal(nd.id)) left_.push_back(nd.id);
      if (!net.is_source(nd.id)) right_.push_back(nd.id);
    }
  }

  const std::vector<NodeId>& left() const { return left_; }
  const std::vector<NodeId>& right() const { return right_; }
  int left_count() const { return static_cast<int>(left_.size()); }
  int right_count() const { return static_cast<int>(right_.size()); }

  int left_index(NodeId id) const { return index_of(left_, id); }
  int right_index(NodeId id) const { return index_of(right_, id); }

  NodeId left_node(int i) const { return left_[static_cast<std::size_t>(i)]; }
  NodeId right_node(int j) const { return right_[static_cast<std::size_t>(j)]; }

  bool has_edge(int li, int rj) const {
    return net_->has_edge(left_node(li), right_node(rj));
  }

  // Decode a matching, given as (left index, right index) pairs, into network
  // edges. Throws if the matching uses a non-edge.
  std::vector<Edge> decode(const std::vector<std::pair<int, int>>& matching) const {
    std::vector<Edge> result;
    result.reserve(matching.size());
    for (const auto& [li, rj] : matching) {
      NodeId a = left_node(li), b = right_node(rj);
      if (!net_->has_edge(a, b))
        throw Error(ErrorCode::DegreeError, "matching uses non-edge (" + std::to_string(a) + "," +
                                                std::to_string(b) + ")");
      result.push_back({a, b});
    }
    std::sort(result.begin(), result.end());
    return result;
  }

  const NetworkSpec& net() const { return *net_; }

 private:
  static int index_of(const std::vector<NodeId>& v, NodeId id) {
    auto it = std::lower_bound(v.begin(), v.end(), id);
    if (it == v.end() || *it != id)
      throw Error(ErrorCode::DegreeError, "node has no copy in split graph");
    return static_cast<int>(it - v.begin());
  }

  const NetworkSpec* net_;
  std::vector<NodeId> left_, right_;
};

// True when an edge set has all-distinct tails and all-distinct heads, i.e.
// is a set of vertex-disjoint paths.
inline bool is_vertex_disjoint_path_set(const std::vector<Edge>& edges) {
  std::set<NodeId> tails, heads;
  for (const auto& [a, b] : edges) {
    if (!tails.insert(a).second) return false;
    if (!heads.insert(b).second) return false;
  }
  return true;
}

}  // namespace qnet
