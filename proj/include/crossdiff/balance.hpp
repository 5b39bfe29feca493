#ifndef CROSSDIFF_BALANCE_HPP
#define CROSSDIFF_BALANCE_HPP

// Markov-chain view of the cross-diffusion coefficients: communicating
// classes, the reversibility conditions (A1)/(A2) and the explicit
// construction of the invariant measure from rate ratios along a spanning
// tree of each class.

#include "crossdiff/common.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace crossdiff {

/// Relative tolerance for the rate-ratio consistency checks.
inline constexpr double kBalanceTolerance = 1e-12;

/// Directed graph on the states {0, ..., n-1} with an edge i -> j whenever
/// a_ij > 0 and i != j.
class TransitionGraph {
public:
  struct Edge {
    int to;
    double weight;
  };

  explicit TransitionGraph(const Matrix& a) : n_(static_cast<int>(a.rows())), out_(static_cast<std::size_t>(n_)) {
    if (a.rows() != a.cols()) throw Error("transition matrix must be square");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        if (a(i, j) < 0.0) throw Error("transition rates must be nonnegative");
        if (i != j && a(i, j) > 0.0) out_[static_cast<std::size_t>(i)].push_back({j, a(i, j)});
      }
  }

  int size() const { return n_; }
  const std::vector<Edge>& out(int i) const { return out_[static_cast<std::size_t>(i)]; }

private:
  int n_;
  std::vector<std::vector<Edge>> out_;
};

using Partition = std::vector<std::vector<int>>;

/// Strongly connected components (Tarjan, iterative). Each class is sorted,
/// and classes are ordered by their smallest state.
inline Partition communicating_classes(const TransitionGraph& g) {
  const int n = g.size();
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  Partition classes;
  int counter = 0;

  struct Frame {
    int v;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
    stack.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto v = static_cast<std::size_t>(f.v);
      if (f.next < g.out(f.v).size()) {
        const int w = g.out(f.v)[f.next++].to;
        const auto wu = static_cast<std::size_t>(w);
        if (index[wu] == -1) {
          index[wu] = low[wu] = counter++;
          stack.push_back(w);
          on_stack[wu] = 1;
          call.push_back({w, 0});
        } else if (on_stack[wu]) {
          low[v] = std::min(low[v], index[wu]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> cls;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = 0;
          cls.push_back(w);
        } while (w != f.v);
        std::sort(cls.begin(), cls.end());
        classes.push_back(std::move(cls));
      }
      const int done = f.v;
      call.pop_back();
      if (!call.empty()) {
        const auto parent = static_cast<std::size_t>(call.back().v);
        low[parent] = std::min(low[parent], low[static_cast<std::size_t>(done)]);
      }
    }
  }
  std::sort(classes.begin(), classes.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return classes;
}

/// Positive reversible weights, normalized to sum one.
struct InvariantMeasure {
  Vector pi;
  bool normalized = true;
  Partition classes;
};

/// A closed walk i_0 -> i_1 -> ... -> i_0 with its forward and backward rate
/// products. `states` lists i_0..i_m without repeating i_0 at the end.
struct CycleWitness {
  std::vector<int> states;
  double forward = 0.0;
  double backward = 0.0;
};

struct BalanceCertificate {
  bool a1_holds = false;
  bool a2_holds = false;
  std::optional<InvariantMeasure> measure;
  std::optional<std::pair<int, int>> a1_witness;  ///< a_ij > 0 but a_ji = 0
  std::optional<CycleWitness> a2_witness;

  bool detailed_balance() const { return a1_holds && a2_holds; }
};

namespace detail {

inline std::vector<int> bfs_path(const TransitionGraph& g, int from, int to) {
  std::vector<int> prev(static_cast<std::size_t>(g.size()), -2);
  std::queue<int> q;
  q.push(from);
  prev[static_cast<std::size_t>(from)] = -1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    if (v == to) break;
    for (const auto& e : g.out(v)) {
      if (prev[static_cast<std::size_t>(e.to)] == -2) {
        prev[static_cast<std::size_t>(e.to)] = v;
        q.push(e.to);
      }
    }
  }
  std::vector<int> path;
  if (prev[static_cast<std::size_t>(to)] == -2) return path;
  for (int v = to; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

inline CycleWitness make_cycle(const Matrix& a, std::vector<int> states) {
  CycleWitness c;
  c.forward = 1.0;
  c.backward = 1.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const int i = states[k];
    const int j = states[(k + 1) % states.size()];
    c.forward *= a(i, j);
    c.backward *= a(j, i);
  }
  c.states = std::move(states);
  return c;
}

}  // namespace detail

/// Verifies (A1) pairwise and (A2) constructively: potentials are propagated
/// along a BFS tree of every class and each non-tree edge is checked against
/// them. A failing non-tree edge closes the witness cycle (tree path plus the
/// edge). One-way edges inside a class give a cycle whose backward product
/// vanishes and are reported as (A2) witnesses as well.
inline BalanceCertificate check_conditions(const Matrix& a) {
  const TransitionGraph g(a);
  const int n = g.size();
  BalanceCertificate cert;

  cert.a1_holds = true;
  for (int i = 0; i < n && cert.a1_holds; ++i)
    for (int j = 0; j < n; ++j) {
      if (i != j && a(i, j) > 0.0 && !(a(j, i) > 0.0)) {
        cert.a1_holds = false;
        cert.a1_witness = std::make_pair(i, j);
        break;
      }
    }

  const Partition classes = communicating_classes(g);
  std::vector<int> class_of(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (int v : classes[c]) class_of[static_cast<std::size_t>(v)] = static_cast<int>(c);

  cert.a2_holds = true;
  // One-way edges within a class: the edge plus any return path.
  for (int i = 0; i < n && cert.a2_holds; ++i)
    for (const auto& e : g.out(i)) {
      if (a(e.to, i) == 0.0 && class_of[static_cast<std::size_t>(i)] == class_of[static_cast<std::size_t>(e.to)]) {
        std::vector<int> cycle = detail::bfs_path(g, e.to, i);
        // cycle runs e.to -> ... -> i; rotate to start at i so i -> e.to is first.
        std::rotate(cycle.begin(), cycle.end() - 1, cycle.end());
        cert.a2_holds = false;
        cert.a2_witness = detail::make_cycle(a, std::move(cycle));
        break;
      }
    }

  // Potentials along a BFS tree over two-way edges, rooted at the smallest
  // state of each class.
  Vector pi = Vector::Zero(n);
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<int> depth(static_cast<std::size_t>(n), 0);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int root = 0; root < n; ++root) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    seen[static_cast<std::size_t>(root)] = 1;
    pi[root] = 1.0;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      const int i = q.front();
      q.pop();
      for (const auto& e : g.out(i)) {
        const int j = e.to;
        if (a(j, i) <= 0.0 || seen[static_cast<std::size_t>(j)]) continue;
        seen[static_cast<std::size_t>(j)] = 1;
        parent[static_cast<std::size_t>(j)] = i;
        depth[static_cast<std::size_t>(j)] = depth[static_cast<std::size_t>(i)] + 1;
        pi[j] = pi[i] * a(i, j) / a(j, i);
        q.push(j);
      }
    }
  }

  if (cert.a2_holds) {
    for (int i = 0; i < n && cert.a2_holds; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (a(i, j) <= 0.0 || a(j, i) <= 0.0) continue;
        if (parent[static_cast<std::size_t>(j)] == i || parent[static_cast<std::size_t>(i)] == j) continue;
        const double lhs = pi[i] * a(i, j), rhs = pi[j] * a(j, i);
        if (std::abs(lhs - rhs) <= kBalanceTolerance * std::max(lhs, rhs)) continue;
        // Tree path i -> lca -> j, then close with j -> i.
        std::vector<int> up_i{i}, up_j{j};
        int x = i, y = j;
        while (depth[static_cast<std::size_t>(x)] > depth[static_cast<std::size_t>(y)]) up_i.push_back(x = parent[static_cast<std::size_t>(x)]);
        while (depth[static_cast<std::size_t>(y)] > depth[static_cast<std::size_t>(x)]) up_j.push_back(y = parent[static_cast<std::size_t>(y)]);
        while (x != y) {
          up_i.push_back(x = parent[static_cast<std::size_t>(x)]);
          up_j.push_back(y = parent[static_cast<std::size_t>(y)]);
        }
        up_j.pop_back();  // lca already in up_i
        std::vector<int> cycle(up_i);
        cycle.insert(cycle.end(), up_j.rbegin(), up_j.rend());
        cert.a2_holds = false;
        cert.a2_witness = detail::make_cycle(a, std::move(cycle));
        break;
      }
  }

  if (cert.a1_holds && cert.a2_holds) {
    InvariantMeasure m;
    m.pi = pi / pi.sum();
    m.normalized = true;
    m.classes = classes;
    cert.measure = std::move(m);
  }
  return cert;
}

/// The reversible measure built per class from rate ratios (smallest state of
/// each class as the root), normalized globally. Throws when the chain is not
/// reversible.
inline InvariantMeasure invariant_measure(const Matrix& a) {
  auto cert = check_conditions(a);
  if (!cert.measure) throw Error("invariant_measure: coefficients violate the reversibility conditions");
  return *cert.measure;
}

/// Largest relative violation of pi_i a_ij = pi_j a_ji over all pairs.
inline double detailed_balance_defect(const Matrix& a, const Vector& pi) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      const double lhs = pi[i] * a(i, j), rhs = pi[j] * a(j, i);
      const double scale = std::max(lhs, rhs);
      if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  return worst;
}

inline bool satisfies_detailed_balance(const Matrix& a, const Vector& pi, double tol = 1e-10) {
  return detailed_balance_defect(a, pi) <= tol;
}

/// Weights used by the entropy: the reversible measure when it exists,
/// otherwise all ones.
inline Vector entropy_weights(const Matrix& a) {
  auto cert = check_conditions(a);
  if (cert.measure) return cert.measure->pi;
  return Vector::Ones(a.rows());
}

}  // namespace crossdiff

#endif  // CROSSDIFF_BALANCE_HPP
