#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "chronosync/error.hpp"
#include "chronosync/random.hpp"

namespace chronosync {

/// Undirected edge between 0-based agent indices, stored with first < second.
using Edge = std::pair<int, int>;

/**
 * Static, undirected, connected coupling graph on N >= 2 agents.
 *
 * Agent indices are 0-based inside the library. Configuration files and CSV
 * exports use 1-based indices; the conversion happens at that boundary.
 */
class Graph {
 public:
  Graph() = default;

  /// Validates indices, rejects self-edges and requires connectivity.
  static Graph from_edges(int n_agents, std::span<const Edge> edges) {
    require(n_agents >= 2, ErrorKind::InvalidArgument,
            "a graph needs at least 2 agents, got " + std::to_string(n_agents));
    Graph g;
    g.n_ = n_agents;
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n_agents || b >= n_agents) {
        throw Error(ErrorKind::InvalidEdge, "edge (" + std::to_string(a + 1) + "," +
                                                std::to_string(b + 1) + ") out of range [1," +
                                                std::to_string(n_agents) + "]");
      }
      if (a == b) {
        throw Error(ErrorKind::InvalidEdge, "self-edge at agent " + std::to_string(a + 1));
      }
      g.edges_.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(g.edges_.begin(), g.edges_.end());
    g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());
    g.neighbors_.assign(n_agents, {});
    for (auto [a, b] : g.edges_) {
      g.neighbors_[a].push_back(b);
      g.neighbors_[b].push_back(a);
    }
    for (auto& nb : g.neighbors_) std::sort(nb.begin(), nb.end());
    if (!g.is_connected()) {
      throw Error(ErrorKind::DisconnectedGraph, "coupling graph is not connected");
    }
    return g;
  }

  int size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighbors(int p) const { return neighbors_.at(p); }

  Eigen::MatrixXd adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (auto [p, q] : edges_) a(p, q) = a(q, p) = 1.0;
    return a;
  }

  Eigen::MatrixXd laplacian() const {
    const Eigen::MatrixXd a = adjacency();
    Eigen::MatrixXd l = -a;
    l.diagonal() = a.rowwise().sum();
    return l;
  }

 private:
  bool is_connected() const {
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      for (int q : neighbors_[p]) {
        if (!seen[q]) {
          seen[q] = 1;
          ++count;
          stack.push_back(q);
        }
      }
    }
    return count == n_;
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

enum class GeneratorKind { Ring, Path, Complete, RandomConnected };

struct EdgeListSpec {
  int n_agents = 0;
  std::vector<Edge> edges;  // 0-based
};

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Path;
  int n_agents = 0;
  std::uint64_t seed = 0;
  double edge_probability = 0.5;
};

using GraphSpec = std::variant<EdgeListSpec, GeneratorSpec>;

namespace detail {

inline Graph random_connected(int n, std::uint64_t seed, double p) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidArgument, "edge probability must lie in [0,1]");
  Rng rng = make_stream(seed, "graph.gnp");
  std::vector<Edge> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (uniform01(rng) < p) edges.emplace_back(a, b);
    }
  }
  // Union-find over the Erdos-Renyi draw; if it left several components, a
  // random spanning tree is added so the result is connected.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n;
  for (auto [a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  if (components > 1) {
    Rng tree_rng = make_stream(seed, "graph.tree");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[i], order[uniform_index(tree_rng, static_cast<std::uint64_t>(i) + 1)]);
    }
    for (int i = 1; i < n; ++i) {
      const int j = static_cast<int>(uniform_index(tree_rng, static_cast<std::uint64_t>(i)));
      edges.emplace_back(std::min(order[i], order[j]), std::max(order[i], order[j]));
    }
  }
  return Graph::from_edges(n, edges);
}

}  // namespace detail

inline Graph build_graph(const GraphSpec& spec) {
  if (const auto* list = std::get_if<EdgeListSpec>(&spec)) {
    return Graph::from_edges(list->n_agents, list->edges);
  }
  const auto& gen = std::get<GeneratorSpec>(spec);
  const int n = gen.n_agents;
  require(n >= 2, ErrorKind::InvalidArgument,
          "a graph needs at least 2 agents, got " + std::to_string(n));
  std::vector<Edge> edges;
  switch (gen.kind) {
    case GeneratorKind::Path:
      for (int p = 0; p + 1 < n; ++p) edges.emplace_back(p, p + 1);
      break;
    case GeneratorKind::Ring:
      for (int p = 0; p + 1 < n; ++p) edges.emplace_back(p, p + 1);
      if (n > 2) edges.emplace_back(0, n - 1);
      break;
    case GeneratorKind::Complete:
      for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) edges.emplace_back(p, q);
      break;
    case GeneratorKind::RandomConnected:
      return detail::random_connected(n, gen.seed, gen.edge_probability);
  }
  return Graph::from_edges(n, edges);
}

/**
 * Orthonormal factorization of the Laplacian, L = V D V^T.
 *
 * V holds the eigenvectors of the N-1 positive eigenvalues (ascending), so
 * D(0,0) is the Fiedler value. Each column is signed so that its first
 * nonzero component is positive. S is the projection onto the complement of
 * the agreement subspace, built as I - 11^T/N.
 */
struct SpectralData {
  Eigen::MatrixXd laplacian;
  Eigen::MatrixXd V;
  Eigen::VectorXd eigenvalues;  // diagonal of D
  Eigen::MatrixXd S;
  double fiedler = 0.0;
  std::vector<Edge> edges;

  int size() const noexcept { return static_cast<int>(laplacian.rows()); }
  Eigen::MatrixXd D() const { return eigenvalues.asDiagonal(); }
};

inline SpectralData spectral_basis(const Graph& g) {
  const int n = g.size();
  SpectralData sd;
  sd.laplacian = g.laplacian();
  sd.edges = g.edges();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sd.laplacian);
  require(eig.info() == Eigen::Success, ErrorKind::InvalidArgument,
          "Laplacian eigendecomposition failed");
  const Eigen::VectorXd& w = eig.eigenvalues();
  const double lambda_max = w(n - 1);
  const double zero_tol = 1e-8 * std::max(1.0, lambda_max);
  if (w(1) <= zero_tol) {
    throw Error(ErrorKind::DisconnectedGraph,
                "Laplacian has a repeated zero eigenvalue (lambda_2 = " + std::to_string(w(1)) + ")");
  }

  sd.eigenvalues = w.tail(n - 1);
  sd.V = eig.eigenvectors().rightCols(n - 1);
  for (int c = 0; c < n - 1; ++c) {
    for (int r = 0; r < n; ++r) {
      if (std::abs(sd.V(r, c)) > 1e-12) {
        if (sd.V(r, c) < 0.0) sd.V.col(c) *= -1.0;
        break;
      }
    }
  }
  sd.S = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  sd.fiedler = sd.eigenvalues(0);
  return sd;
}

struct Disagreement {
  Eigen::VectorXd eta;
  double eta_norm = 0.0;
  double uniform_norm = 0.0;
};

/// Largest software-time gap over the edges of the coupling graph.
inline double uniform_norm(std::span<const Edge> edges, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  double m = 0.0;
  for (auto [p, q] : edges) m = std::max(m, std::abs(theta(p) - theta(q)));
  return m;
}

inline Disagreement disagreement(const SpectralData& sd, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  require(theta.size() == sd.size(), ErrorKind::DimensionMismatch,
          "expected " + std::to_string(sd.size()) + " software times, got " +
              std::to_string(theta.size()));
  Disagreement out;
  out.eta = sd.V.transpose() * theta;
  out.eta_norm = out.eta.norm();
  out.uniform_norm = uniform_norm(sd.edges, theta);
  return out;
}

}  // namespace chronosync
