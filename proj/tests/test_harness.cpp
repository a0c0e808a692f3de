#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "ltadmm/harness.hpp"

using ltadmm::ExperimentConfig;
using ltadmm::parse_config_text;

namespace {

std::string paper_config(const std::string& extra_run = "", const std::string& hyper_extra = "") {
  return
      "[topology]\n"
      "kind = ring\n"
      "nodes = 10\n"
      "\n"
      "[problem]\n"
      "kind = logistic\n"
      "dim = 5\n"
      "m_per_agent = 100\n"
      "epsilon = 0.1\n"
      "\n"
      "[hyper]\n"
      "rho = 0.1\n"
      "tau = 5\n"
      "gamma = 0.3\n"
      "beta = 0.2\n"
      "r = 1\n"
      "estimator = saga\n"
      "batch = 1\n"
      "compressor = qbit:8\n" +
      hyper_extra +
      "\n"
      "[run]\n"
      "rounds = 60\n"
      "metric_stride = 10\n"
      "seed = 7\n" +
      extra_run +
      "\n"
      "[time]\n"
      "t_g = 1\n"
      "t_c = 10\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("the standard configuration parses and validates") {
  const auto cfg = parse_config_text(paper_config());
  REQUIRE(cfg.topology_kind == ltadmm::TopologyKind::ring);
  REQUIRE(cfg.nodes == 10);
  REQUIRE(cfg.dim == 5);
  REQUIRE(cfg.m_per_agent == 100);
  REQUIRE(cfg.epsilon == 0.1);
  REQUIRE(cfg.rho == 0.1);
  REQUIRE(cfg.tau == 5);
  REQUIRE(cfg.gamma == 0.3);
  REQUIRE(cfg.beta == 0.2);
  REQUIRE(cfg.r == 1.0);
  REQUIRE(!cfg.eta.has_value());
  REQUIRE(cfg.estimator == "saga");
  REQUIRE(cfg.batch == 1);
  REQUIRE(cfg.compressor == "qbit:8");
  REQUIRE(cfg.rounds == 60);
  REQUIRE(cfg.metric_stride == 10);
  REQUIRE(cfg.seed == 7);
  REQUIRE(cfg.t_g == 1.0);
  REQUIRE(cfg.t_c == 10.0);
}

TEST_CASE("parse and serialize round trip") {
  const auto cfg = parse_config_text(paper_config());
  const auto cfg2 = parse_config_text(ltadmm::serialize_config(cfg));
  REQUIRE(cfg == cfg2);

  // with the optional keys set
  auto cfg3 = cfg;
  cfg3.eta = 0.75;
  cfg3.output = "out.csv";
  cfg3.stop_grad_norm_sq = 1e-10;
  const auto cfg4 = parse_config_text(ltadmm::serialize_config(cfg3));
  REQUIRE(cfg3 == cfg4);
  REQUIRE(ltadmm::serialize_config(cfg3) == ltadmm::serialize_config(cfg4));
}

TEST_CASE("config rejection paths") {
  REQUIRE_THROWS_AS(parse_config_text(paper_config("", "bogus_key = 1\n")), ltadmm::ConfigError);
  REQUIRE_THROWS_AS(parse_config_text(paper_config() + "\n[mystery]\nx = 1\n"),
                    ltadmm::ConfigError);
  REQUIRE_THROWS_AS(parse_config_text("rounds = 5\n"), ltadmm::ConfigError);  // before any section

  auto bad_tau = paper_config();
  bad_tau.replace(bad_tau.find("tau = 5"), 7, "tau = 0");
  REQUIRE_THROWS_AS(parse_config_text(bad_tau), ltadmm::ConfigError);

  auto bad_batch = paper_config();
  bad_batch.replace(bad_batch.find("batch = 1"), 9, "batch = 100");
  REQUIRE_THROWS_AS(parse_config_text(bad_batch), ltadmm::ConfigError);

  auto missing = paper_config();
  missing.replace(missing.find("rho = 0.1"), 9, "# rho gone");
  REQUIRE_THROWS_AS(parse_config_text(missing), ltadmm::ConfigError);

  auto bad_eps = paper_config();
  bad_eps.replace(bad_eps.find("epsilon = 0.1"), 13, "epsilon = 0.0");
  REQUIRE_THROWS_AS(parse_config_text(bad_eps), ltadmm::ConfigError);

  // a quadratic problem has one component per agent: saga cannot draw batches
  const std::string quad =
      "[topology]\nkind = ring\nnodes = 4\n"
      "[problem]\nkind = quadratic\ndim = 3\n"
      "[hyper]\nrho = 0.1\ntau = 2\ngamma = 0.2\nbeta = 0.1\nr = 1\nestimator = saga\n"
      "[run]\nrounds = 5\n";
  REQUIRE_THROWS_AS(parse_config_text(quad), ltadmm::ConfigError);
}

TEST_CASE("beta above the stability bound is accepted with a warning") {
  auto text = paper_config();
  text.replace(text.find("beta = 0.2"), 10, "beta = 2.0");
  auto cfg = parse_config_text(text);
  cfg.rounds = 1;
  const auto result = ltadmm::run_experiment(cfg);
  REQUIRE(result.summary.warnings.size() == 1);
  REQUIRE(result.summary.warnings[0].find("beta") != std::string::npos);

  // the standard configuration runs without warnings (0.2 < bound 1.0)
  auto ok = parse_config_text(paper_config());
  ok.rounds = 1;
  REQUIRE(ltadmm::run_experiment(ok).summary.warnings.empty());
}

TEST_CASE("time model and bit accounting") {
  auto cfg = parse_config_text(paper_config());
  cfg.rounds = 3;
  cfg.metric_stride = 1;
  const auto result = ltadmm::run_experiment(cfg);
  REQUIRE(result.metrics.size() == 3);
  // (m + tau - 1) t_g + 2 t_c = 104 + 20 per round, exactly
  REQUIRE(result.metrics[0].model_time == 124.0);
  REQUIRE(result.metrics[1].model_time == 248.0);
  REQUIRE(result.metrics[2].model_time == 372.0);
  // 20 directed edges, two payloads each, 104 bits per qbit:8 payload
  REQUIRE(result.metrics[0].bits_sent == 2LL * 20 * 104);
  REQUIRE(result.metrics[2].bits_sent == 3LL * 2 * 20 * 104);
}

TEST_CASE("csv emission and end-to-end determinism") {
  auto cfg = parse_config_text(paper_config());
  cfg.rounds = 30;
  const std::string path = "harness_test_out.csv";
  auto r1 = ltadmm::run_experiment(cfg, path);
  const std::string bytes1 = read_file(path);

  REQUIRE(r1.metrics.size() == 3);
  std::istringstream lines(bytes1);
  std::string header;
  std::getline(lines, header);
  REQUIRE(header ==
          "round,model_time,grad_norm_sq,consensus_err,dist_to_opt,bits_sent,dual_residual");
  int rows = 0;
  std::string row;
  while (std::getline(lines, row))
    if (!row.empty()) ++rows;
  REQUIRE(rows == 3);

  // parse the first row back and compare to the recorded metrics
  std::istringstream again(bytes1);
  std::getline(again, header);
  std::getline(again, row);
  std::replace(row.begin(), row.end(), ',', ' ');
  std::istringstream rs(row);
  long round = 0;
  double model_time = 0, grad = 0, cons = 0, dist = 0, dual = 0;
  long long bits = 0;
  rs >> round >> model_time >> grad >> cons >> dist >> bits >> dual;
  REQUIRE(round == r1.metrics[0].round);
  REQUIRE(model_time == r1.metrics[0].model_time);
  REQUIRE(grad == r1.metrics[0].grad_norm_sq);
  REQUIRE(cons == r1.metrics[0].consensus_err);
  REQUIRE(dist == r1.metrics[0].dist_to_opt);
  REQUIRE(bits == r1.metrics[0].bits_sent);
  REQUIRE(dual == r1.metrics[0].dual_residual);

  auto r2 = ltadmm::run_experiment(cfg, path);
  REQUIRE(read_file(path) == bytes1);
  REQUIRE(r2.summary.final_grad_norm_sq == r1.summary.final_grad_norm_sq);
  std::remove(path.c_str());
}

TEST_CASE("dual residual stays within the conservation tolerance") {
  auto cfg = parse_config_text(paper_config());
  cfg.rounds = 50;
  cfg.metric_stride = 5;
  const auto result = ltadmm::run_experiment(cfg);
  for (const auto& m : result.metrics)
    REQUIRE(m.dual_residual <= 1e-9 * (1.0 + m.x_stack_norm));
}

TEST_CASE("early stop on the gradient threshold") {
  auto cfg = parse_config_text(paper_config());
  cfg.rounds = 5000;
  cfg.stop_grad_norm_sq = 1e-10;
  const auto result = ltadmm::run_experiment(cfg);
  REQUIRE(result.summary.rounds_completed < 5000);
  REQUIRE(result.summary.final_grad_norm_sq <= 1e-10);
  REQUIRE(result.summary.decay.median_ratio < 1.0);
  REQUIRE(result.summary.decay.fit_slope < 0.0);
}

TEST_CASE("edge-list topology and quadratic problems run end to end") {
  const std::string edge_path = "harness_test_edges.txt";
  {
    std::ofstream out(edge_path);
    out << "0 1\n1 2\n2 3\n3 0\n";
  }
  const std::string text =
      "[topology]\nkind = edges\nnodes = 4\nedge_file = " + edge_path + "\n" +
      "[problem]\nkind = quadratic\ndim = 3\n"
      "[hyper]\nrho = 0.2\ntau = 3\ngamma = 0.25\nbeta = 0.1\nr = 1\nestimator = full\n"
      "compressor = none\n"
      "[run]\nrounds = 200\nmetric_stride = 20\nseed = 3\n";
  const auto cfg = parse_config_text(text);
  const auto result = ltadmm::run_experiment(cfg);
  REQUIRE(result.metrics.size() == 10);
  // exact consensus optimization on quadratics drives the gradient down
  REQUIRE(result.summary.final_grad_norm_sq < result.metrics.front().grad_norm_sq);
  REQUIRE(result.summary.final_grad_norm_sq < 1e-8);
  std::remove(edge_path.c_str());
}

TEST_CASE("emit_csv rejects an empty series") {
  REQUIRE_THROWS_AS(ltadmm::emit_csv({}, std::string("nope.csv")), ltadmm::ParameterError);
}
