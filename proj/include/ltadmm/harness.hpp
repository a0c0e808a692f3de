#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ltadmm/compressors.hpp"
#include "ltadmm/errors.hpp"
#include "ltadmm/estimators.hpp"
#include "ltadmm/objectives.hpp"
#include "ltadmm/oracle.hpp"
#include "ltadmm/protocol.hpp"
#include "ltadmm/random.hpp"
#include "ltadmm/topology.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

enum class TopologyKind { ring, edges };
enum class ProblemKind { logistic, quadratic };

//! Parsed experiment configuration. Mirrors the sectioned key=value file
//! format one-to-one; parse and serialize round-trip exactly.
struct ExperimentConfig {
  // [topology]
  TopologyKind topology_kind = TopologyKind::ring;
  int nodes = 0;
  std::string edge_file;  // edges kind only

  // [problem]
  ProblemKind problem_kind = ProblemKind::logistic;
  int dim = 0;
  int m_per_agent = 0;     // logistic only
  double epsilon = 0.1;    // logistic only

  // [hyper]
  double rho = 0.0;
  int tau = 0;
  double gamma = 0.0;
  double beta = 0.0;
  double r = 0.0;
  std::optional<double> eta;  // unset -> min(1, 1/p)
  std::string estimator = "saga";
  int batch = 1;
  std::string compressor = "none";

  // [run]
  int rounds = 0;
  int metric_stride = 10;
  std::uint64_t seed = 1;
  std::string output;
  double stop_grad_norm_sq = 0.0;  // 0 disables early stop

  // [time]
  double t_g = 1.0;
  double t_c = 10.0;

  bool operator==(const ExperimentConfig&) const = default;
};

//! Per-round observables. The CSV columns are the first seven fields;
//! x_stack_norm is kept for in-process invariant checks.
struct RoundMetrics {
  long round = 0;
  double model_time = 0.0;
  double grad_norm_sq = 0.0;
  double consensus_err = 0.0;
  double dist_to_opt = 0.0;
  long long bits_sent = 0;
  double dual_residual = 0.0;
  double x_stack_norm = 0.0;
};

//! Geometric-decay diagnostic over a logged gradient-norm series.
struct DecayDiagnostic {
  double median_ratio = 0.0;  // median of successive ratios, last half
  double fit_slope = 0.0;     // log-linear fit over the last half
  double fit_r2 = 0.0;
};

struct RunSummary {
  long rounds_completed = 0;
  double final_grad_norm_sq = 0.0;
  DecayDiagnostic decay;
  std::vector<std::string> warnings;
};

struct RunResult {
  std::vector<RoundMetrics> metrics;
  RunSummary summary;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("value of '" + key + "' is not a number: " + v);
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("value of '" + key + "' is not an integer: " + v);
  }
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

//! Parses the sectioned key=value config format. Unknown sections or keys are
//! rejected; defaults are filled; range validation happens here.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string section;
  std::string line;
  bool saw_nodes = false, saw_dim = false, saw_m = false, saw_rounds = false;
  bool saw_rho = false, saw_tau = false, saw_gamma = false, saw_beta = false, saw_r = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("malformed section header: " + t);
      section = t.substr(1, t.size() - 2);
      if (section != "topology" && section != "problem" && section != "hyper" &&
          section != "run" && section != "time")
        throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + " is not key = value: " + t);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(line_no) + " has an empty key or value");

    if (section == "topology") {
      if (key == "kind") {
        if (val == "ring") cfg.topology_kind = TopologyKind::ring;
        else if (val == "edges") cfg.topology_kind = TopologyKind::edges;
        else throw ConfigError("topology.kind must be ring or edges");
      } else if (key == "nodes") {
        cfg.nodes = static_cast<int>(detail::parse_int(key, val));
        saw_nodes = true;
      } else if (key == "edge_file") {
        cfg.edge_file = val;
      } else {
        throw ConfigError("unknown key '" + key + "' in [topology]");
      }
    } else if (section == "problem") {
      if (key == "kind") {
        if (val == "logistic") cfg.problem_kind = ProblemKind::logistic;
        else if (val == "quadratic") cfg.problem_kind = ProblemKind::quadratic;
        else throw ConfigError("problem.kind must be logistic or quadratic");
      } else if (key == "dim") {
        cfg.dim = static_cast<int>(detail::parse_int(key, val));
        saw_dim = true;
      } else if (key == "m_per_agent") {
        cfg.m_per_agent = static_cast<int>(detail::parse_int(key, val));
        saw_m = true;
      } else if (key == "epsilon") {
        cfg.epsilon = detail::parse_double(key, val);
      } else {
        throw ConfigError("unknown key '" + key + "' in [problem]");
      }
    } else if (section == "hyper") {
      if (key == "rho") { cfg.rho = detail::parse_double(key, val); saw_rho = true; }
      else if (key == "tau") { cfg.tau = static_cast<int>(detail::parse_int(key, val)); saw_tau = true; }
      else if (key == "gamma") { cfg.gamma = detail::parse_double(key, val); saw_gamma = true; }
      else if (key == "beta") { cfg.beta = detail::parse_double(key, val); saw_beta = true; }
      else if (key == "r") { cfg.r = detail::parse_double(key, val); saw_r = true; }
      else if (key == "eta") { cfg.eta = detail::parse_double(key, val); }
      else if (key == "estimator") { EstimatorMode::parse_kind(val); cfg.estimator = val; }
      else if (key == "batch") { cfg.batch = static_cast<int>(detail::parse_int(key, val)); }
      else if (key == "compressor") { CompressorSpec::parse(val); cfg.compressor = val; }
      else throw ConfigError("unknown key '" + key + "' in [hyper]");
    } else if (section == "run") {
      if (key == "rounds") { cfg.rounds = static_cast<int>(detail::parse_int(key, val)); saw_rounds = true; }
      else if (key == "metric_stride") { cfg.metric_stride = static_cast<int>(detail::parse_int(key, val)); }
      else if (key == "seed") { cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, val)); }
      else if (key == "output") { cfg.output = val; }
      else if (key == "stop_grad_norm_sq") { cfg.stop_grad_norm_sq = detail::parse_double(key, val); }
      else throw ConfigError("unknown key '" + key + "' in [run]");
    } else if (section == "time") {
      if (key == "t_g") { cfg.t_g = detail::parse_double(key, val); }
      else if (key == "t_c") { cfg.t_c = detail::parse_double(key, val); }
      else throw ConfigError("unknown key '" + key + "' in [time]");
    } else {
      throw ConfigError("key '" + key + "' appears before any section header");
    }
  }

  // required fields
  if (!saw_nodes) throw ConfigError("missing required key topology.nodes");
  if (cfg.topology_kind == TopologyKind::edges && cfg.edge_file.empty())
    throw ConfigError("topology.kind = edges requires topology.edge_file");
  if (!saw_dim) throw ConfigError("missing required key problem.dim");
  if (cfg.problem_kind == ProblemKind::logistic && !saw_m)
    throw ConfigError("missing required key problem.m_per_agent");
  if (!saw_rho || !saw_tau || !saw_gamma || !saw_beta || !saw_r)
    throw ConfigError("missing required [hyper] keys (rho, tau, gamma, beta, r)");
  if (!saw_rounds) throw ConfigError("missing required key run.rounds");

  // range validation
  if (cfg.nodes < 2) throw ConfigError("topology.nodes must be at least 2");
  if (cfg.dim < 1) throw ConfigError("problem.dim must be positive");
  if (cfg.problem_kind == ProblemKind::logistic) {
    if (cfg.m_per_agent < 1) throw ConfigError("problem.m_per_agent must be positive");
    if (!(cfg.epsilon > 0.0)) throw ConfigError("problem.epsilon must be positive");
  }
  if (!(cfg.rho > 0.0)) throw ConfigError("hyper.rho must be positive");
  if (cfg.tau < 1) throw ConfigError("hyper.tau must be at least 1");
  if (!(cfg.gamma > 0.0)) throw ConfigError("hyper.gamma must be positive");
  if (!(cfg.beta > 0.0)) throw ConfigError("hyper.beta must be positive");
  if (!(cfg.r > 0.0)) throw ConfigError("hyper.r must be positive");
  if (cfg.eta && (!(*cfg.eta > 0.0) || *cfg.eta > 1.0))
    throw ConfigError("hyper.eta must be in (0, 1]");
  if (cfg.batch < 1) throw ConfigError("hyper.batch must be at least 1");
  const EstimatorKind ek = EstimatorMode::parse_kind(cfg.estimator);
  const int m_components = cfg.problem_kind == ProblemKind::logistic ? cfg.m_per_agent : 1;
  if (ek != EstimatorKind::full && cfg.batch >= m_components)
    throw ConfigError("hyper.batch must be smaller than the per-agent component count");
  if (cfg.rounds < 1) throw ConfigError("run.rounds must be at least 1");
  if (cfg.metric_stride < 1) throw ConfigError("run.metric_stride must be at least 1");
  if (cfg.stop_grad_norm_sq < 0.0) throw ConfigError("run.stop_grad_norm_sq must be >= 0");
  if (cfg.t_g < 0.0 || cfg.t_c < 0.0) throw ConfigError("time costs must be nonnegative");
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

//! Canonical serialization; parse(serialize(c)) == c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[topology]\n";
  os << "kind = " << (cfg.topology_kind == TopologyKind::ring ? "ring" : "edges") << "\n";
  os << "nodes = " << cfg.nodes << "\n";
  if (!cfg.edge_file.empty()) os << "edge_file = " << cfg.edge_file << "\n";
  os << "\n[problem]\n";
  os << "kind = " << (cfg.problem_kind == ProblemKind::logistic ? "logistic" : "quadratic")
     << "\n";
  os << "dim = " << cfg.dim << "\n";
  if (cfg.problem_kind == ProblemKind::logistic) {
    os << "m_per_agent = " << cfg.m_per_agent << "\n";
    os << "epsilon = " << detail::format_double(cfg.epsilon) << "\n";
  }
  os << "\n[hyper]\n";
  os << "rho = " << detail::format_double(cfg.rho) << "\n";
  os << "tau = " << cfg.tau << "\n";
  os << "gamma = " << detail::format_double(cfg.gamma) << "\n";
  os << "beta = " << detail::format_double(cfg.beta) << "\n";
  os << "r = " << detail::format_double(cfg.r) << "\n";
  if (cfg.eta) os << "eta = " << detail::format_double(*cfg.eta) << "\n";
  os << "estimator = " << cfg.estimator << "\n";
  os << "batch = " << cfg.batch << "\n";
  os << "compressor = " << cfg.compressor << "\n";
  os << "\n[run]\n";
  os << "rounds = " << cfg.rounds << "\n";
  os << "metric_stride = " << cfg.metric_stride << "\n";
  os << "seed = " << cfg.seed << "\n";
  if (!cfg.output.empty()) os << "output = " << cfg.output << "\n";
  if (cfg.stop_grad_norm_sq != 0.0)
    os << "stop_grad_norm_sq = " << detail::format_double(cfg.stop_grad_norm_sq) << "\n";
  os << "\n[time]\n";
  os << "t_g = " << detail::format_double(cfg.t_g) << "\n";
  os << "t_c = " << detail::format_double(cfg.t_c) << "\n";
  return os.str();
}

//! Builds the topology named by the config.
inline Topology build_topology(const ExperimentConfig& cfg) {
  if (cfg.topology_kind == TopologyKind::ring) return Topology::ring(cfg.nodes);
  std::ifstream in(cfg.edge_file);
  if (!in) throw ConfigError("cannot open edge file: " + cfg.edge_file);
  return Topology::from_edges(cfg.nodes, parse_edge_list(in));
}

//! Builds the per-agent problems named by the config.
inline std::vector<LocalProblem> build_problems(const ExperimentConfig& cfg) {
  if (cfg.problem_kind == ProblemKind::logistic)
    return generate_logistic(cfg.nodes, cfg.dim, cfg.m_per_agent, cfg.epsilon, cfg.seed);
  return generate_quadratic(cfg.nodes, cfg.dim, cfg.seed);
}

//! Resolves the full Hyperparameters, applying the eta default.
inline Hyperparameters build_hyper(const ExperimentConfig& cfg) {
  Hyperparameters h;
  h.rho = cfg.rho;
  h.tau = cfg.tau;
  h.gamma = cfg.gamma;
  h.beta = cfg.beta;
  h.r = cfg.r;
  h.estimator = EstimatorMode{EstimatorMode::parse_kind(cfg.estimator), cfg.batch};
  h.compressor = CompressorSpec::parse(cfg.compressor);
  h.eta = cfg.eta ? *cfg.eta : default_eta(h.compressor, cfg.dim);
  return h;
}

//! CSV emission: fixed header, one row per logged round, full double precision.
inline void emit_csv(const std::vector<RoundMetrics>& metrics, std::ostream& os) {
  os << "round,model_time,grad_norm_sq,consensus_err,dist_to_opt,bits_sent,dual_residual\n";
  for (const auto& m : metrics) {
    os << m.round << ',' << detail::format_double(m.model_time) << ','
       << detail::format_double(m.grad_norm_sq) << ',' << detail::format_double(m.consensus_err)
       << ',' << detail::format_double(m.dist_to_opt) << ',' << m.bits_sent << ','
       << detail::format_double(m.dual_residual) << '\n';
  }
}

inline void emit_csv(const std::vector<RoundMetrics>& metrics, const std::string& path) {
  if (metrics.empty()) throw ParameterError("emit_csv: empty metrics series");
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open output file: " + path);
  emit_csv(metrics, os);
  os.flush();
  if (!os) throw ConfigError("failed writing output file: " + path);
}

//! Median of successive ratios and log-linear fit over the last half of a
//! logged series of (round, value) points.
inline DecayDiagnostic decay_diagnostic(const std::vector<RoundMetrics>& metrics) {
  DecayDiagnostic d;
  if (metrics.size() < 3) return d;
  const std::size_t begin = metrics.size() / 2;
  std::vector<double> ratios;
  for (std::size_t i = begin; i + 1 < metrics.size(); ++i) {
    if (metrics[i].grad_norm_sq > 0.0)
      ratios.push_back(metrics[i + 1].grad_norm_sq / metrics[i].grad_norm_sq);
  }
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    const std::size_t mid = ratios.size() / 2;
    d.median_ratio = ratios.size() % 2 == 1 ? ratios[mid]
                                            : 0.5 * (ratios[mid - 1] + ratios[mid]);
  }

  // least squares of ln(value) against the round index
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = begin; i < metrics.size(); ++i)
    if (metrics[i].grad_norm_sq > 0.0)
      pts.emplace_back(static_cast<double>(metrics[i].round), std::log(metrics[i].grad_norm_sq));
  if (pts.size() < 2) return d;
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) { sx += x; sy += y; }
  const double mx = sx / pts.size(), my = sy / pts.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx > 0.0 && syy > 0.0) {
    d.fit_slope = sxy / sxx;
    d.fit_r2 = (sxy * sxy) / (sxx * syy);
  }
  return d;
}

//! Runs the configured experiment: builds everything, solves for the
//! reference optimum, executes rounds, records metrics every metric_stride
//! rounds (and on the final round), and writes the CSV when an output path is
//! set. A partial CSV is flushed if a round fails mid-run.
inline RunResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& output_override = "") {
  RunResult result;

  const Topology topo = build_topology(cfg);
  std::vector<LocalProblem> problems = build_problems(cfg);
  const Hyperparameters hyper = build_hyper(cfg);

  const SpectralInfo spectrum = spectral_info(topo);
  const double beta_bound = max_beta_bound(spectrum, hyper.r, hyper.tau, hyper.rho);
  if (hyper.beta >= beta_bound) {
    std::ostringstream w;
    w << "beta = " << hyper.beta << " is not below the stability bound "
      << beta_bound << " = 2 / (r^2 tau lambda_max rho)";
    result.summary.warnings.push_back(w.str());
  }

  const ReferenceSolution ref = solve_reference(problems, 1e-12);

  Network net(topo, std::move(problems), hyper, cfg.seed);
  const int n_dirs = topo.directed_edge_count();
  const long long bits_per_round =
      2LL * n_dirs * payload_bits(hyper.compressor, cfg.dim);

  const std::string out_path = output_override.empty() ? cfg.output : output_override;
  double model_time = 0.0;
  long long bits_sent = 0;

  auto log_round = [&](long k) {
    const Vec xbar = net.mean_x();
    RoundMetrics m;
    m.round = k;
    m.model_time = model_time;
    m.grad_norm_sq = global_gradient(net.problems(), xbar).squaredNorm();
    double cons = 0.0;
    for (int i = 0; i < net.agent_count(); ++i) cons += (net.agent(i).x - xbar).squaredNorm();
    m.consensus_err = cons;
    m.dist_to_opt = (xbar - ref.x_star).squaredNorm();
    m.bits_sent = bits_sent;
    m.dual_residual = net.dual_sum_defect().norm();
    m.x_stack_norm = net.x_stack_norm();
    result.metrics.push_back(m);
    return m.grad_norm_sq;
  };

  try {
    for (long k = 1; k <= cfg.rounds; ++k) {
      net.run_round();
      std::int64_t max_evals = 0;
      for (int i = 0; i < net.agent_count(); ++i)
        max_evals = std::max(max_evals, net.fresh_evals_last_round(i));
      model_time += static_cast<double>(max_evals) * cfg.t_g + 2.0 * cfg.t_c;
      bits_sent += bits_per_round;

      const bool logged = (k % cfg.metric_stride == 0) || k == cfg.rounds;
      double grad_sq = -1.0;
      if (logged) grad_sq = log_round(k);
      result.summary.rounds_completed = k;
      if (logged && cfg.stop_grad_norm_sq > 0.0 && grad_sq <= cfg.stop_grad_norm_sq) break;
    }
  } catch (...) {
    if (!out_path.empty() && !result.metrics.empty()) emit_csv(result.metrics, out_path);
    throw;
  }

  if (!result.metrics.empty())
    result.summary.final_grad_norm_sq = result.metrics.back().grad_norm_sq;
  result.summary.decay = decay_diagnostic(result.metrics);
  if (!out_path.empty()) emit_csv(result.metrics, out_path);
  return result;
}

}  // namespace ltadmm
