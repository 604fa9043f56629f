#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace percolab {

// Dinic max-flow on a small directed network.  Arcs are stored in pairs, so
// the reverse of arc a is a ^ 1.
class FlowNet {
 public:
  static constexpr int kInf = 1 << 29;

  struct Arc {
    int to;
    int cap;
    int cap0;
  };

  explicit FlowNet(int n) : adj_(n) {}

  int node_count() const { return int(adj_.size()); }

  int add_arc(int u, int v, int cap) {
    if (u == v) throw std::invalid_argument("flow: self arc");
    adj_[u].push_back(int(arcs_.size()));
    arcs_.push_back({v, cap, cap});
    adj_[v].push_back(int(arcs_.size()));
    arcs_.push_back({u, 0, 0});
    return int(arcs_.size()) - 2;
  }

  const Arc& arc(int a) const { return arcs_[a]; }
  int arc_count() const { return int(arcs_.size()); }
  const std::vector<int>& arcs_at(int u) const { return adj_[u]; }
  int flow(int a) const { return arcs_[a].cap0 - arcs_[a].cap; }

  int max_flow(int s, int t) {
    int total = 0;
    while (bfs(s, t)) {
      it_.assign(adj_.size(), 0);
      while (int pushed = dfs(s, t, kInf)) total += pushed;
    }
    return total;
  }

  // residual reachability from s; valid after max_flow
  std::vector<char> reachable(int s) const {
    std::vector<char> seen(adj_.size(), 0);
    std::vector<int> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int a : adj_[u])
        if (arcs_[a].cap > 0 && !seen[arcs_[a].to]) {
          seen[arcs_[a].to] = 1;
          stack.push_back(arcs_[a].to);
        }
    }
    return seen;
  }

 private:
  bool bfs(int s, int t) {
    level_.assign(adj_.size(), -1);
    level_[s] = 0;
    std::vector<int> q{s};
    for (std::size_t i = 0; i < q.size(); ++i) {
      int u = q[i];
      for (int a : adj_[u]) {
        int v = arcs_[a].to;
        if (arcs_[a].cap > 0 && level_[v] < 0) {
          level_[v] = level_[u] + 1;
          q.push_back(v);
        }
      }
    }
    return level_[t] >= 0;
  }

  int dfs(int u, int t, int limit) {
    if (u == t || limit == 0) return limit;
    for (int& i = it_[u]; i < int(adj_[u].size()); ++i) {
      int a = adj_[u][i];
      int v = arcs_[a].to;
      if (arcs_[a].cap > 0 && level_[v] == level_[u] + 1) {
        int got = dfs(v, t, std::min(limit, arcs_[a].cap));
        if (got > 0) {
          arcs_[a].cap -= got;
          arcs_[a ^ 1].cap += got;
          return got;
        }
      }
    }
    level_[u] = -1;
    return 0;
  }

  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_, it_;
};

}  // namespace percolab
