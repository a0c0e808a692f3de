#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ltadmm/compressors.hpp"
#include "ltadmm/errors.hpp"
#include "ltadmm/estimators.hpp"
#include "ltadmm/objectives.hpp"
#include "ltadmm/random.hpp"
#include "ltadmm/topology.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

//! Algorithm parameters for one run.
struct Hyperparameters {
  double rho = 0.0;    // penalty, > 0
  int tau = 0;         // local steps per round, >= 1
  double gamma = 0.0;  // local step size, > 0
  double beta = 0.0;   // regularization weight, > 0
  double r = 0.0;      // dual scaling, > 0
  double eta = 1.0;    // error-feedback mixing, in (0, 1]
  EstimatorMode estimator;
  CompressorSpec compressor;
};

//! Default error-feedback mixing: min(1, 1 / p) for the configured compressor.
inline double default_eta(const CompressorSpec& spec, int dim) {
  return std::min(1.0, 1.0 / variance_parameter(spec, dim));
}

//! One directed transmission of round k. cz differs per directed edge; cx is
//! the same vector on all of the sender's outgoing messages of the round.
struct EdgeMessage {
  int from = -1;
  int to = -1;
  Vec cz;  // C(z_{ij,k} - s_{ij,k}), sampled at the end of round k-1
  Vec cx;  // C(x_{i,k+1} - u_{i,k+1}), sampled this round
};

//! Full per-agent protocol state. Per-neighbor vectors are stored in the
//! sorted-neighbor order of the topology.
//!
//! Copy invariants maintained at every round boundary, bitwise:
//!   u_copy[j] at agent i  ==  u at agent j
//!   s_copy[j] at agent i  ==  s[i] at agent j
//!   z_hat[j]              ==  s[j] + cached_cz[j]
struct AgentState {
  Vec x;                          // primal iterate x_i
  std::vector<Vec> z;             // duals z_{ij}, per neighbor
  Vec u;                          // error-feedback accumulator for x
  std::vector<Vec> s;             // error-feedback accumulators s_{ij}
  std::vector<Vec> z_hat;         // own zhat_{ij} = s_{ij} + cached_cz[j]
  std::vector<Vec> u_copy;        // utilde: tracked copy of each neighbor's u
  std::vector<Vec> s_copy;        // stilde: tracked copy of each neighbor's s_{ji}
  Vec x_hat;                      // own xhat_i
  Vec own_cx_prev;                // last transmitted x-message
  std::vector<Vec> recv_cx_prev;  // last received x-message, per neighbor
  std::vector<Vec> cached_cz;     // z-message sampled at the end of the previous round
  SagaTable table;
  std::int64_t plain_evals = 0;        // fresh component gradients outside the table
  std::int64_t round_evals_begin = 0;  // counter snapshot at the start of the round
  std::int64_t last_round_evals = 0;   // fresh component gradients of the last round

  std::int64_t total_evals() const { return table.fresh_eval_count() + plain_evals; }
};

//! Synchronous round-based simulator of the compressed local-training ADMM.
//!
//! Each round runs three bulk-synchronous phases over all agents: local
//! training (the tau gradient steps), finalize-and-pack (error-feedback
//! accumulator update, x-compression, message emission), and apply-messages
//! (neighbor-copy maintenance, dual update, z-compression for the next
//! round). All mutation is agent-local and messages are immutable after
//! packing, so agents may execute each phase concurrently; results are
//! bitwise-independent of any such schedule because every random draw is
//! keyed by (seed, agent, round, purpose).
class Network {
 public:
  Network(Topology topology, std::vector<LocalProblem> problems, Hyperparameters hyper,
          std::uint64_t seed)
      : topo_(std::move(topology)),
        problems_(std::move(problems)),
        hyper_(hyper),
        seed_(seed) {
    validate();
    init_zero();
  }

  //! Zero initialization is the supported default; requesting any nonzero x0
  //! through this constructor is an error.
  Network(Topology topology, std::vector<LocalProblem> problems, Hyperparameters hyper,
          std::uint64_t seed, const std::vector<Vec>& x0)
      : Network(std::move(topology), std::move(problems), hyper, seed) {
    for (const auto& v : x0) {
      if (v.size() != dim_ || !v.isZero(0.0))
        throw ProtocolError(
            "nonzero initialization is not supported by the compressed protocol; "
            "use Network::with_bootstrap for a one-time uncompressed bootstrap exchange");
    }
  }

  //! Starts from arbitrary x0 by performing a one-time uncompressed exchange
  //! that installs xhat_0 = x_0 on the owner and on every neighbor copy.
  static Network with_bootstrap(Topology topology, std::vector<LocalProblem> problems,
                                Hyperparameters hyper, std::uint64_t seed,
                                const std::vector<Vec>& x0) {
    Network net(std::move(topology), std::move(problems), hyper, seed);
    if (x0.size() != net.agents_.size())
      throw ProtocolError("bootstrap: one initial vector per agent required");
    for (std::size_t i = 0; i < x0.size(); ++i)
      if (x0[i].size() != net.dim_) throw ProtocolError("bootstrap: dimension mismatch");
    for (std::size_t i = 0; i < net.agents_.size(); ++i) {
      auto& st = net.agents_[i];
      st.x = x0[i];
      st.own_cx_prev = x0[i];  // as if transmitted uncompressed
      const auto& nbs = net.topo_.neighbors(static_cast<int>(i));
      for (std::size_t sj = 0; sj < nbs.size(); ++sj)
        st.recv_cx_prev[sj] = x0[static_cast<std::size_t>(nbs[sj])];
    }
    return net;
  }

  const Topology& topology() const noexcept { return topo_; }
  const std::vector<LocalProblem>& problems() const noexcept { return problems_; }
  const Hyperparameters& hyper() const noexcept { return hyper_; }
  int round() const noexcept { return round_; }
  int dimension() const noexcept { return dim_; }
  int agent_count() const noexcept { return static_cast<int>(agents_.size()); }
  const AgentState& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  AgentState& agent_mut(int i) { return agents_.at(static_cast<std::size_t>(i)); }

  //! Index of neighbor j in agent i's sorted neighbor list.
  int slot(int i, int j) const {
    const auto& nbs = topo_.neighbors(i);
    const auto it = std::lower_bound(nbs.begin(), nbs.end(), j);
    if (it == nbs.end() || *it != j) throw ProtocolError("agents are not neighbors");
    return static_cast<int>(it - nbs.begin());
  }

  //! Phase 1 for agent i: tau local gradient steps from x_{i,k} with the
  //! round-constant correction c = beta (r^2 rho d_i x_{i,k} - r sum_j z_{ij,k}),
  //! using the configured gradient estimator. Stores x_{i,k+1}.
  void local_training(int i) {
    auto& st = agents_.at(static_cast<std::size_t>(i));
    const auto& p = problems_[static_cast<std::size_t>(i)];
    st.round_evals_begin = st.total_evals();

    const double d_i = static_cast<double>(topo_.degree(i));
    Vec z_sum = Vec::Zero(dim_);
    for (const auto& zj : st.z) z_sum += zj;
    const Vec correction =
        hyper_.beta * (hyper_.r * hyper_.r * hyper_.rho * d_i * st.x - hyper_.r * z_sum);

    Vec phi = st.x;
    const int m = p.component_count();
    switch (hyper_.estimator.kind) {
      case EstimatorKind::saga: {
        st.table.reset(p, phi);
        RandomStream rng(seed_, static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(round_), StreamPurpose::batch_draw);
        for (int t = 0; t < hyper_.tau; ++t) {
          const auto batch = draw_batch(hyper_.estimator, m, rng);
          const Vec g = st.table.estimate(p, phi, batch);
          const Vec phi_next = phi - hyper_.gamma * g - correction;
          // The refresh stores the gradients already evaluated for the
          // estimate, so each step costs |B| fresh evaluations after the
          // initial full table reset.
          st.table.update(p, phi, batch);
          phi = phi_next;
        }
        break;
      }
      case EstimatorKind::sgd: {
        RandomStream rng(seed_, static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(round_), StreamPurpose::batch_draw);
        for (int t = 0; t < hyper_.tau; ++t) {
          const auto batch = draw_batch(hyper_.estimator, m, rng);
          Vec g = Vec::Zero(dim_);
          for (int h : batch) g += p.component_gradient(h, phi);
          st.plain_evals += static_cast<std::int64_t>(batch.size());
          g /= static_cast<double>(batch.size());
          phi = Vec(phi - hyper_.gamma * g - correction);
        }
        break;
      }
      case EstimatorKind::full: {
        for (int t = 0; t < hyper_.tau; ++t) {
          const Vec g = p.full_gradient(phi);
          st.plain_evals += m;
          phi = Vec(phi - hyper_.gamma * g - correction);
        }
        break;
      }
    }
    st.x = phi;
  }

  //! Phase 2 for agent i: advances the error-feedback accumulator by
  //! u <- u + eta * own_cx_prev (identical to u_{k+1} = (1-eta) u_k + eta xhat_k,
  //! executed in this exact form on sender and receivers so the copies stay
  //! bitwise equal), draws the round's single x-compression, and emits one
  //! message per neighbor carrying the cached z-compression and the fresh cx.
  std::vector<EdgeMessage> finalize_and_pack(int i) {
    auto& st = agents_.at(static_cast<std::size_t>(i));
    st.u += hyper_.eta * st.own_cx_prev;
    RandomStream rng(seed_, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(round_),
                     StreamPurpose::x_compress);
    const Vec cx = compress(hyper_.compressor, st.x - st.u, rng);
    st.own_cx_prev = cx;
    st.x_hat = st.u + cx;

    const auto& nbs = topo_.neighbors(i);
    std::vector<EdgeMessage> out;
    out.reserve(nbs.size());
    for (std::size_t sj = 0; sj < nbs.size(); ++sj)
      out.push_back(EdgeMessage{i, nbs[sj], st.cached_cz[sj], cx});
    return out;
  }

  //! Phase 3 for agent i: per neighbor, maintains the tracked copies, forms
  //! the neighbor's xhat and zhat from compressed traffic alone, applies the
  //! dual update
  //!   z_{ij,k+1} = 1/2 (zhat_{ij,k} - zhat_{ji,k}) + r rho x_{i,k+1}
  //!                - r rho (xhat_{i,k+1} - xhat_{j,k+1}),
  //! sets s_{ij,k+1} = zhat_{ij,k}, and samples the z-compression that will be
  //! transmitted next round (the same realization enters the local zhat).
  void apply_messages(int i, const std::vector<EdgeMessage>& inbound) {
    auto& st = agents_.at(static_cast<std::size_t>(i));
    const auto& nbs = topo_.neighbors(i);
    std::vector<const EdgeMessage*> by_slot(nbs.size(), nullptr);
    for (const auto& msg : inbound) {
      if (msg.to != i) throw ProtocolError("message delivered to the wrong agent");
      const int sj = slot(i, msg.from);
      if (by_slot[static_cast<std::size_t>(sj)] != nullptr)
        throw ProtocolError("duplicate message from a neighbor");
      by_slot[static_cast<std::size_t>(sj)] = &msg;
    }
    for (std::size_t sj = 0; sj < nbs.size(); ++sj)
      if (by_slot[sj] == nullptr) throw ProtocolError("missing message from a neighbor");

    const double c = hyper_.r * hyper_.rho;
    for (std::size_t sj = 0; sj < nbs.size(); ++sj) {
      const EdgeMessage& msg = *by_slot[sj];
      if (msg.cz.size() != dim_ || msg.cx.size() != dim_)
        throw ProtocolError("message payload has the wrong dimension");

      // neighbor's accumulator and xhat, from compressed traffic alone
      st.u_copy[sj] += hyper_.eta * st.recv_cx_prev[sj];
      const Vec x_hat_j = st.u_copy[sj] + msg.cx;
      st.recv_cx_prev[sj] = msg.cx;

      // neighbor's zhat_{ji,k}; also equals s_{ji,k+1}
      const Vec z_hat_ji = st.s_copy[sj] + msg.cz;
      st.s_copy[sj] = z_hat_ji;

      const Vec z_next =
          0.5 * (st.z_hat[sj] - z_hat_ji) + c * st.x - c * (st.x_hat - x_hat_j);
      st.s[sj] = st.z_hat[sj];  // s_{ij,k+1} = zhat_{ij,k}
      st.z[sj] = z_next;

      RandomStream rng(seed_, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(round_),
                       StreamPurpose::z_compress, static_cast<std::uint64_t>(nbs[sj]));
      st.cached_cz[sj] = compress(hyper_.compressor, st.z[sj] - st.s[sj], rng);
      st.z_hat[sj] = st.s[sj] + st.cached_cz[sj];
    }
  }

  //! One full synchronous round over all agents.
  void run_round() {
    const int n = agent_count();
    for (int i = 0; i < n; ++i) local_training(i);

    std::vector<std::vector<EdgeMessage>> inbox(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (auto& msg : finalize_and_pack(i))
        inbox[static_cast<std::size_t>(msg.to)].push_back(std::move(msg));
    for (int i = 0; i < n; ++i) apply_messages(i, inbox[static_cast<std::size_t>(i)]);

    for (auto& st : agents_) st.last_round_evals = st.total_evals() - st.round_evals_begin;
    ++round_;
  }

  Vec mean_x() const {
    Vec m = Vec::Zero(dim_);
    for (const auto& st : agents_) m += st.x;
    return m / static_cast<double>(agents_.size());
  }

  double x_stack_norm() const {
    double acc = 0.0;
    for (const auto& st : agents_) acc += st.x.squaredNorm();
    return std::sqrt(acc);
  }

  //! Defect of the conserved dual sum: r sum_i sum_j z_{ij} - r^2 rho sum_i d_i x_i.
  Vec dual_sum_defect() const {
    Vec zsum = Vec::Zero(dim_);
    Vec dx = Vec::Zero(dim_);
    for (int i = 0; i < agent_count(); ++i) {
      const auto& st = agents_[static_cast<std::size_t>(i)];
      for (const auto& zj : st.z) zsum += zj;
      dx += static_cast<double>(topo_.degree(i)) * st.x;
    }
    return hyper_.r * zsum - hyper_.r * hyper_.r * hyper_.rho * dx;
  }

  std::int64_t fresh_evals_last_round(int i) const {
    return agents_.at(static_cast<std::size_t>(i)).last_round_evals;
  }

  //! Bitwise check of the neighbor-copy invariants at a round boundary.
  bool copies_consistent() const {
    for (int i = 0; i < agent_count(); ++i) {
      const auto& nbs = topo_.neighbors(i);
      const auto& st = agents_[static_cast<std::size_t>(i)];
      for (std::size_t sj = 0; sj < nbs.size(); ++sj) {
        const int j = nbs[sj];
        const auto& stj = agents_[static_cast<std::size_t>(j)];
        if (!bitwise_equal(st.u_copy[sj], stj.u)) return false;
        if (!bitwise_equal(st.s_copy[sj], stj.s[static_cast<std::size_t>(slot(j, i))]))
          return false;
        if (!bitwise_equal(st.z_hat[sj], Vec(st.s[sj] + st.cached_cz[sj]))) return false;
      }
    }
    return true;
  }

  //! Round-stamped flat-text snapshot: one labeled vector per line.
  void dump_state(std::ostream& os) const {
    os << std::setprecision(17);
    for (int i = 0; i < agent_count(); ++i) {
      const auto& st = agents_[static_cast<std::size_t>(i)];
      write_line(os, "x:" + std::to_string(i), st.x);
      write_line(os, "u:" + std::to_string(i), st.u);
      write_line(os, "xhat:" + std::to_string(i), st.x_hat);
      const auto& nbs = topo_.neighbors(i);
      for (std::size_t sj = 0; sj < nbs.size(); ++sj) {
        const std::string edge = std::to_string(i) + ":" + std::to_string(nbs[sj]);
        write_line(os, "z:" + edge, st.z[sj]);
        write_line(os, "s:" + edge, st.s[sj]);
        write_line(os, "zhat:" + edge, st.z_hat[sj]);
        write_line(os, "ucopy:" + edge, st.u_copy[sj]);
        write_line(os, "scopy:" + edge, st.s_copy[sj]);
      }
    }
  }

 private:
  static bool bitwise_equal(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) ==
           0;
  }

  void write_line(std::ostream& os, const std::string& label, const Vec& v) const {
    os << round_ << ' ' << label;
    for (int c = 0; c < v.size(); ++c) os << ' ' << v[c];
    os << '\n';
  }

  void validate() {
    const int n = topo_.node_count();
    if (static_cast<int>(problems_.size()) != n)
      throw ParameterError("one local problem per node required");
    dim_ = problems_.front().dimension();
    int min_m = problems_.front().component_count();
    for (const auto& p : problems_) {
      if (p.dimension() != dim_) throw ParameterError("problem dimensions disagree");
      min_m = std::min(min_m, p.component_count());
    }
    if (!(hyper_.rho > 0.0)) throw ParameterError("rho must be positive");
    if (hyper_.tau < 1) throw ParameterError("tau must be at least 1");
    if (!(hyper_.gamma > 0.0)) throw ParameterError("gamma must be positive");
    if (!(hyper_.beta > 0.0)) throw ParameterError("beta must be positive");
    if (!(hyper_.r > 0.0)) throw ParameterError("r must be positive");
    if (!(hyper_.eta > 0.0) || hyper_.eta > 1.0) throw ParameterError("eta must be in (0, 1]");
    if (hyper_.estimator.kind != EstimatorKind::full) {
      if (hyper_.estimator.batch_size < 1)
        throw ParameterError("batch size must be at least 1");
      if (hyper_.estimator.batch_size >= min_m)
        throw ParameterError("batch size must be smaller than every agent's component count");
    }
  }

  void init_zero() {
    const int n = topo_.node_count();
    agents_.assign(static_cast<std::size_t>(n), AgentState{});
    for (int i = 0; i < n; ++i) {
      auto& st = agents_[static_cast<std::size_t>(i)];
      const std::size_t deg = topo_.neighbors(i).size();
      st.x = Vec::Zero(dim_);
      st.u = Vec::Zero(dim_);
      st.x_hat = Vec::Zero(dim_);
      st.own_cx_prev = Vec::Zero(dim_);
      st.z.assign(deg, Vec::Zero(dim_));
      st.s.assign(deg, Vec::Zero(dim_));
      st.z_hat.assign(deg, Vec::Zero(dim_));
      st.u_copy.assign(deg, Vec::Zero(dim_));
      st.s_copy.assign(deg, Vec::Zero(dim_));
      st.recv_cx_prev.assign(deg, Vec::Zero(dim_));
      st.cached_cz.assign(deg, Vec::Zero(dim_));
    }
  }

  Topology topo_;
  std::vector<LocalProblem> problems_;
  Hyperparameters hyper_;
  std::uint64_t seed_;
  int dim_ = 0;
  int round_ = 0;
  std::vector<AgentState> agents_;
};

}  // namespace ltadmm
