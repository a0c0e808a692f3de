#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ltadmm/compressors.hpp"
#include "ltadmm/errors.hpp"
#include "ltadmm/estimators.hpp"
#include "ltadmm/objectives.hpp"
#include "ltadmm/topology.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

// Independent reference implementations used to validate the protocol. These
// deliberately materialize the dense block matrices of the stacked form and
// share nothing with the per-agent code beyond topology and objectives.

//! Stacked network state with the incidence-style block matrices.
//!
//! Directed edges are ordered by source node, then by the source's sorted
//! neighbor list, so edge (i,j) occupies one Mn-slot. A replicates a node
//! vector onto the node's outgoing edge slots, P swaps slot (i,j) with (j,i),
//! and D = A'A is the degree matrix. A'PA equals the adjacency matrix; both
//! identities are checked numerically on construction.
class CompactState {
 public:
  CompactState(const Topology& topo, int dim)
      : n_nodes_(topo.node_count()), dim_(dim), m_edges_(topo.directed_edge_count()) {
    if (dim < 1) throw ParameterError("compact state needs a positive dimension");
    edge_index_.clear();
    edges_.clear();
    for (int i = 0; i < n_nodes_; ++i)
      for (int j : topo.neighbors(i)) {
        edge_index_[{i, j}] = static_cast<int>(edges_.size());
        edges_.emplace_back(i, j);
      }

    const int nr = m_edges_ * dim_;
    const int nc = n_nodes_ * dim_;
    A = Mat::Zero(nr, nc);
    P = Mat::Zero(nr, nr);
    for (int e = 0; e < m_edges_; ++e) {
      const auto [i, j] = edges_[static_cast<std::size_t>(e)];
      A.block(e * dim_, i * dim_, dim_, dim_) = Mat::Identity(dim_, dim_);
      const int rev = edge_index_.at({j, i});
      P.block(e * dim_, rev * dim_, dim_, dim_) = Mat::Identity(dim_, dim_);
    }
    D = A.transpose() * A;

    Mat adjacency = Mat::Zero(nc, nc);
    for (int i = 0; i < n_nodes_; ++i)
      for (int j : topo.neighbors(i))
        adjacency.block(i * dim_, j * dim_, dim_, dim_) = Mat::Identity(dim_, dim_);
    if ((A.transpose() * P * A - adjacency).cwiseAbs().maxCoeff() > 1e-12)
      throw NumericError("compact state: A'PA does not match the adjacency matrix");
    Mat degree = Mat::Zero(nc, nc);
    for (int i = 0; i < n_nodes_; ++i)
      degree.block(i * dim_, i * dim_, dim_, dim_) =
          static_cast<double>(topo.degree(i)) * Mat::Identity(dim_, dim_);
    if ((D - degree).cwiseAbs().maxCoeff() > 1e-12)
      throw NumericError("compact state: A'A does not match the degree matrix");

    X = Vec::Zero(nc);
    Z = Vec::Zero(nr);
    U = Vec::Zero(nc);
    S = Vec::Zero(nr);
  }

  int node_count() const noexcept { return n_nodes_; }
  int dimension() const noexcept { return dim_; }
  int directed_edge_count() const noexcept { return m_edges_; }
  int edge_slot(int i, int j) const { return edge_index_.at({i, j}); }
  const std::vector<std::pair<int, int>>& directed_edges() const noexcept { return edges_; }

  Vec node_block(const Vec& stacked, int i) const { return stacked.segment(i * dim_, dim_); }
  Vec edge_block(const Vec& stacked, int i, int j) const {
    return stacked.segment(edge_slot(i, j) * dim_, dim_);
  }

  Mat A, P, D;
  Vec X, Z, U, S;

 private:
  int n_nodes_;
  int dim_;
  int m_edges_;
  std::map<std::pair<int, int>, int> edge_index_;
  std::vector<std::pair<int, int>> edges_;
};

//! One round of the stacked form, deterministic configuration only (identity
//! compression, full gradients):
//!   X_{k+1} = X_k - gamma sum_t G(Phi^t) - beta r sum_t (r rho A'A X_k - A' Z_k)
//!   Z_{k+1} = 1/2 (I - P) Zhat_k + r rho A X_{k+1} - r rho (I - P) A Xhat_{k+1}
//! with the compression identities trivial under identity compression.
template <typename HyperLike>
void compact_step(CompactState& st, const HyperLike& hyper,
                  const std::vector<LocalProblem>& problems) {
  if (hyper.compressor.kind != CompressorKind::identity ||
      hyper.estimator.kind != EstimatorKind::full)
    throw UnsupportedError(
        "compact oracle supports only the identity compressor with full gradients");
  const int n = st.node_count();
  const int dim = st.dimension();
  if (static_cast<int>(problems.size()) != n)
    throw ParameterError("compact step: one problem per node required");

  const Vec correction =
      hyper.beta * hyper.r *
      (hyper.r * hyper.rho * (st.D * st.X) - st.A.transpose() * st.Z);

  Vec phi = st.X;
  Vec grad_sum = Vec::Zero(n * dim);
  for (int t = 0; t < hyper.tau; ++t) {
    Vec g(n * dim);
    for (int i = 0; i < n; ++i)
      g.segment(i * dim, dim) =
          problems[static_cast<std::size_t>(i)].full_gradient(phi.segment(i * dim, dim));
    grad_sum += g;
    phi = Vec(phi - hyper.gamma * g - correction);
  }
  const Vec x_next =
      st.X - hyper.gamma * grad_sum - static_cast<double>(hyper.tau) * correction;

  // identity-compression identities
  const Vec x_hat_prev = st.U + (st.X - st.U);           // Xhat_k
  const Vec u_next = (1.0 - hyper.eta) * st.U + hyper.eta * x_hat_prev;
  const Vec z_hat = st.S + (st.Z - st.S);                // Zhat_k
  const Vec s_next = z_hat;
  const Vec x_hat_next = u_next + (x_next - u_next);     // Xhat_{k+1}

  const Mat eye = Mat::Identity(st.P.rows(), st.P.cols());
  const Vec z_next = 0.5 * ((eye - st.P) * z_hat) + hyper.r * hyper.rho * (st.A * x_next) -
                     hyper.r * hyper.rho * ((eye - st.P) * (st.A * x_hat_next));

  st.X = x_next;
  st.Z = z_next;
  st.U = u_next;
  st.S = s_next;
}

//! Result of the centralized reference solve.
struct ReferenceSolution {
  Vec x_star;
  double grad_norm = 0.0;
  long iterations = 0;
};

//! Minimizes (1/N) sum_i f_i by gradient descent with step 1/L until the
//! global gradient norm reaches the tolerance (default 1e-12).
inline ReferenceSolution solve_reference(const std::vector<LocalProblem>& problems,
                                         double tolerance = 1e-12,
                                         long max_iterations = 1000000) {
  if (problems.empty()) throw ParameterError("solve_reference: no problems given");
  if (!(tolerance > 0.0)) throw ParameterError("solve_reference: tolerance must be positive");
  double smoothness = 0.0;
  for (const auto& p : problems) smoothness = std::max(smoothness, p.smoothness());
  const double step = 1.0 / smoothness;

  ReferenceSolution sol;
  sol.x_star = Vec::Zero(problems.front().dimension());
  for (long it = 0; it <= max_iterations; ++it) {
    const Vec g = global_gradient(problems, sol.x_star);
    sol.grad_norm = g.norm();
    sol.iterations = it;
    if (sol.grad_norm <= tolerance) return sol;
    sol.x_star -= step * g;
  }
  throw SolverError("solve_reference: gradient descent did not reach the tolerance");
}

//! State of the exact-prox consensus ADMM on quadratics f_i = 1/2 ||x - a_i||^2.
struct ExactAdmmState {
  std::vector<Vec> x;               // per node
  std::vector<std::vector<Vec>> z;  // per node, per sorted neighbor
};

inline ExactAdmmState exact_admm_init(const Topology& topo, int dim) {
  ExactAdmmState st;
  st.x.assign(static_cast<std::size_t>(topo.node_count()), Vec::Zero(dim));
  st.z.resize(static_cast<std::size_t>(topo.node_count()));
  for (int i = 0; i < topo.node_count(); ++i)
    st.z[static_cast<std::size_t>(i)].assign(topo.neighbors(i).size(), Vec::Zero(dim));
  return st;
}

//! Closed-form prox of f(x) = 1/2 ||x - anchor||^2 with weight w:
//! argmin f(x) + (w/2) ||x - v||^2 = (anchor + w v) / (1 + w).
inline Vec quadratic_prox(const Vec& anchor, const Vec& v, double weight) {
  return (anchor + weight * v) / (1.0 + weight);
}

//! One synchronous round of the exact-prox ADMM:
//!   x_{i,k+1} = prox_{f_i}^{1/(rho d_i)}( sum_j z_{ij,k} / (rho d_i) )
//!   z_{ij,k+1} = 1/2 (z_{ij,k} - z_{ji,k} + 2 rho x_{j,k+1})
inline void exact_admm_step(ExactAdmmState& st, const Topology& topo,
                            const std::vector<Vec>& anchors, double rho) {
  const int n = topo.node_count();
  if (static_cast<int>(st.x.size()) != n || static_cast<int>(anchors.size()) != n)
    throw ParameterError("exact_admm_step: size mismatch");
  if (!(rho > 0.0)) throw ParameterError("exact_admm_step: rho must be positive");

  std::vector<Vec> x_next(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double weight = rho * static_cast<double>(topo.degree(i));
    Vec zsum = Vec::Zero(st.x[static_cast<std::size_t>(i)].size());
    for (const auto& zj : st.z[static_cast<std::size_t>(i)]) zsum += zj;
    x_next[static_cast<std::size_t>(i)] =
        quadratic_prox(anchors[static_cast<std::size_t>(i)], zsum / weight, weight);
  }

  std::vector<std::vector<Vec>> z_next = st.z;
  for (int i = 0; i < n; ++i) {
    const auto& nbs = topo.neighbors(i);
    for (std::size_t sj = 0; sj < nbs.size(); ++sj) {
      const int j = nbs[sj];
      const auto& nbj = topo.neighbors(j);
      const std::size_t si =
          static_cast<std::size_t>(std::lower_bound(nbj.begin(), nbj.end(), i) - nbj.begin());
      z_next[static_cast<std::size_t>(i)][sj] =
          0.5 * (st.z[static_cast<std::size_t>(i)][sj] - st.z[static_cast<std::size_t>(j)][si] +
                 2.0 * rho * x_next[static_cast<std::size_t>(j)]);
    }
  }
  st.x = std::move(x_next);
  st.z = std::move(z_next);
}

//! One parsed frame of the protocol's flat-text state snapshot.
struct SnapshotFrame {
  long round = 0;
  std::map<std::string, Vec> entries;  // label -> vector, e.g. "x:3" or "z:3:4"

  const Vec& at(const std::string& label) const {
    const auto it = entries.find(label);
    if (it == entries.end()) throw ConfigError("snapshot frame is missing label " + label);
    return it->second;
  }
};

//! Reads consecutive snapshot frames (grouped by round stamp) from the
//! protocol dump format: "<round> <label> <components...>" per line.
inline std::vector<SnapshotFrame> read_snapshots(std::istream& in) {
  std::vector<SnapshotFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long round = 0;
    std::string label;
    if (!(ls >> round >> label)) throw ConfigError("bad snapshot line: " + line);
    std::vector<double> vals;
    double v = 0.0;
    while (ls >> v) vals.push_back(v);
    if (frames.empty() || frames.back().round != round) {
      frames.emplace_back();
      frames.back().round = round;
    }
    frames.back().entries[label] =
        Eigen::Map<const Vec>(vals.data(), static_cast<int>(vals.size()));
  }
  return frames;
}

}  // namespace ltadmm
