#pragma once

#include <algorithm>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ltadmm/errors.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

//! Undirected connected graph on nodes 0..N-1.
//!
//! Edges are stored canonically as (min,max) pairs in sorted order and neighbor
//! lists are sorted, so iteration order is deterministic. Instances are
//! immutable after construction and safe to share across concurrent readers.
class Topology {
 public:
  //! Cycle graph on n >= 3 nodes; every node has degree 2.
  static Topology ring(int n) {
    if (n < 3) throw TopologyError("ring topology requires at least 3 nodes");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return Topology(n, std::move(edges));
  }

  //! Validated graph from an explicit edge list.
  static Topology from_edges(int n, std::vector<std::pair<int, int>> edges) {
    return Topology(n, std::move(edges));
  }

  int node_count() const noexcept { return n_; }
  const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }

  int max_degree() const {
    int d = 0;
    for (const auto& nb : neighbors_) d = std::max<int>(d, static_cast<int>(nb.size()));
    return d;
  }

  //! Number of directed edges M = sum of degrees = 2 |E|.
  int directed_edge_count() const noexcept { return 2 * static_cast<int>(edges_.size()); }

  //! Dense combinatorial Laplacian L = D - A.
  Mat laplacian() const {
    Mat lap = Mat::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) {
      lap(i, i) = static_cast<double>(degree(i));
      for (int j : neighbors(i)) lap(i, j) = -1.0;
    }
    return lap;
  }

 private:
  Topology(int n, std::vector<std::pair<int, int>> raw) : n_(n) {
    if (n < 2) throw TopologyError("topology requires at least 2 nodes");
    edges_.reserve(raw.size());
    for (auto [a, b] : raw) {
      if (a < 0 || a >= n || b < 0 || b >= n)
        throw TopologyError("edge references a node outside 0..N-1");
      if (a == b) throw TopologyError("self-loops are not allowed");
      edges_.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
      throw TopologyError("duplicate edge");

    neighbors_.assign(static_cast<std::size_t>(n), {});
    for (auto [a, b] : edges_) {
      neighbors_[static_cast<std::size_t>(a)].push_back(b);
      neighbors_[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());

    // connectivity by depth-first search from node 0
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : neighbors(v)) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    if (reached != n) throw TopologyError("graph is not connected");
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
};

//! Laplacian eigenvalue extremes and the maximum degree.
struct SpectralInfo {
  double lambda_min_nonzero = 0.0;  // smallest nonzero Laplacian eigenvalue
  double lambda_max = 0.0;          // largest Laplacian eigenvalue
  int max_degree = 0;
};

//! Eigenvalue extremes of L = D - A by dense symmetric eigendecomposition.
//! The smallest nonzero eigenvalue is the first one above an absolute 1e-9
//! threshold; a connected graph always has one.
inline SpectralInfo spectral_info(const Topology& t) {
  const Mat lap = t.laplacian();
  Eigen::SelfAdjointEigenSolver<Mat> solver(lap);
  if (solver.info() != Eigen::Success) throw NumericError("Laplacian eigendecomposition failed");
  const Vec ev = solver.eigenvalues();  // ascending
  constexpr double kZeroThreshold = 1e-9;
  double lambda_min_nonzero = 0.0;
  bool found = false;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > kZeroThreshold) {
      lambda_min_nonzero = ev[i];
      found = true;
      break;
    }
  }
  if (!found) throw NumericError("no nonzero Laplacian eigenvalue found");
  return SpectralInfo{lambda_min_nonzero, ev[ev.size() - 1], t.max_degree()};
}

//! Strict upper bound 2 / (r^2 tau lambda_max rho) on the regularization
//! weight beta; configurations at or above it are flagged by the harness.
inline double max_beta_bound(const SpectralInfo& s, double r, double tau, double rho) {
  if (r <= 0.0 || tau <= 0.0 || rho <= 0.0)
    throw ParameterError("max_beta_bound: r, tau, rho must be positive");
  return 2.0 / (r * r * tau * s.lambda_max * rho);
}

//! Edge-list text format: one "i j" pair per line; blank lines and lines
//! starting with '#' are skipped.
inline std::vector<std::pair<int, int>> parse_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int a = 0, b = 0;
    if (!(ls >> a >> b)) throw TopologyError("edge list line is not an \"i j\" pair: " + line);
    std::string rest;
    if (ls >> rest) throw TopologyError("trailing tokens on edge list line: " + line);
    edges.emplace_back(a, b);
  }
  return edges;
}

}  // namespace ltadmm
