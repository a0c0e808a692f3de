#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ltadmm/errors.hpp"
#include "ltadmm/random.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

//! One data point's loss f_{i,h}: value and exact gradient.
class ComponentLoss {
 public:
  virtual ~ComponentLoss() = default;
  virtual int dimension() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  //! Lipschitz constant of the gradient.
  virtual double smoothness() const = 0;
};

//! Numerically stable log(1 + exp(t)).
inline double log1pexp(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

//! Regularized logistic loss of a single sample:
//!   f(x) = log(1 + exp(-b a'x)) + (eps/2) ||x||^2.
class LogisticComponent final : public ComponentLoss {
 public:
  LogisticComponent(Vec features, double label, double epsilon)
      : a_(std::move(features)), b_(label), eps_(epsilon) {
    if (b_ != 1.0 && b_ != -1.0) throw ParameterError("logistic label must be -1 or +1");
    if (eps_ < 0.0) throw ParameterError("logistic regularizer must be nonnegative");
  }

  int dimension() const override { return static_cast<int>(a_.size()); }

  double value(const Vec& x) const override {
    return log1pexp(-b_ * a_.dot(x)) + 0.5 * eps_ * x.squaredNorm();
  }

  Vec gradient(const Vec& x) const override {
    const double margin = b_ * a_.dot(x);
    const double coeff = -b_ / (1.0 + std::exp(margin));
    return coeff * a_ + eps_ * x;
  }

  double smoothness() const override { return eps_ + 0.25 * a_.squaredNorm(); }

  const Vec& features() const { return a_; }
  double label() const { return b_; }

 private:
  Vec a_;
  double b_;
  double eps_;
};

//! Quadratic component f(x) = 1/2 ||x - anchor||^2.
class QuadraticComponent final : public ComponentLoss {
 public:
  explicit QuadraticComponent(Vec anchor) : anchor_(std::move(anchor)) {}
  int dimension() const override { return static_cast<int>(anchor_.size()); }
  double value(const Vec& x) const override { return 0.5 * (x - anchor_).squaredNorm(); }
  Vec gradient(const Vec& x) const override { return x - anchor_; }
  double smoothness() const override { return 1.0; }
  const Vec& anchor() const { return anchor_; }

 private:
  Vec anchor_;
};

//! One agent's cost f_i(x) = (1/m_i) sum_h f_{i,h}(x), with smoothness and
//! strong-convexity constants. Immutable after construction; gradient
//! evaluation is reentrant.
class LocalProblem {
 public:
  LocalProblem(int agent_id, std::vector<std::shared_ptr<const ComponentLoss>> components,
               double smoothness, double strong_convexity)
      : agent_id_(agent_id),
        components_(std::move(components)),
        smoothness_(smoothness),
        strong_convexity_(strong_convexity) {
    if (components_.empty()) throw ParameterError("local problem needs at least one component");
    if (!(strong_convexity_ > 0.0) || !(smoothness_ >= strong_convexity_) ||
        !std::isfinite(smoothness_))
      throw ParameterError("local problem requires 0 < mu <= L < inf");
    dim_ = components_.front()->dimension();
    for (const auto& c : components_)
      if (c->dimension() != dim_) throw ParameterError("component dimensions disagree");
  }

  int agent_id() const noexcept { return agent_id_; }
  int dimension() const noexcept { return dim_; }
  int component_count() const noexcept { return static_cast<int>(components_.size()); }
  double smoothness() const noexcept { return smoothness_; }
  double strong_convexity() const noexcept { return strong_convexity_; }
  const ComponentLoss& component(int h) const { return *components_.at(check_index(h)); }

  double component_value(int h, const Vec& x) const { return components_[check_index(h)]->value(x); }

  Vec component_gradient(int h, const Vec& x) const {
    return components_[check_index(h)]->gradient(x);
  }

  double full_cost(const Vec& x) const {
    double acc = 0.0;
    for (const auto& c : components_) acc += c->value(x);
    return acc / static_cast<double>(components_.size());
  }

  Vec full_gradient(const Vec& x) const {
    Vec g = Vec::Zero(dim_);
    for (const auto& c : components_) g += c->gradient(x);
    return g / static_cast<double>(components_.size());
  }

 private:
  std::size_t check_index(int h) const {
    if (h < 0 || h >= component_count())
      throw ParameterError("component index out of range");
    return static_cast<std::size_t>(h);
  }

  int agent_id_;
  std::vector<std::shared_ptr<const ComponentLoss>> components_;
  double smoothness_;
  double strong_convexity_;
  int dim_ = 0;
};

//! A single labeled sample of the synthetic classification task.
struct LogisticDatum {
  Vec features;
  double label = 1.0;  // -1 or +1
};

//! Synthetic classification dataset: per-agent sample lists plus the shared
//! ridge regularizer.
struct LogisticDataset {
  std::vector<std::vector<LogisticDatum>> samples;  // [agent][component]
  double epsilon = 0.0;
};

//! Draws the synthetic classification data: standard-normal features, labels
//! from a hidden standard-normal linear teacher plus N(0, 0.1) noise. The
//! result is a deterministic function of the seed.
inline LogisticDataset generate_logistic_data(int n_agents, int dim, int m_per_agent,
                                              double epsilon, std::uint64_t seed) {
  if (n_agents < 1 || dim < 1 || m_per_agent < 1)
    throw ParameterError("generate_logistic_data: sizes must be positive");
  if (!(epsilon > 0.0))
    throw ParameterError("generate_logistic_data: epsilon must be positive for strong convexity");

  RandomStream teacher_rng(seed, 0, 0, StreamPurpose::dataset_teacher);
  const Vec teacher = teacher_rng.normal_vector(dim);
  const double noise_sigma = std::sqrt(0.1);

  LogisticDataset data;
  data.epsilon = epsilon;
  data.samples.resize(static_cast<std::size_t>(n_agents));
  for (int i = 0; i < n_agents; ++i) {
    RandomStream feat_rng(seed, static_cast<std::uint64_t>(i), 0, StreamPurpose::dataset_features);
    RandomStream noise_rng(seed, static_cast<std::uint64_t>(i), 0, StreamPurpose::dataset_noise);
    auto& rows = data.samples[static_cast<std::size_t>(i)];
    rows.reserve(static_cast<std::size_t>(m_per_agent));
    for (int h = 0; h < m_per_agent; ++h) {
      LogisticDatum d;
      d.features = feat_rng.normal_vector(dim);
      const double raw = d.features.dot(teacher) + noise_sigma * noise_rng.normal();
      d.label = raw >= 0.0 ? 1.0 : -1.0;
      rows.push_back(std::move(d));
    }
  }
  return data;
}

//! Builds per-agent problems from a dataset. Declares L = eps + max_h ||a_h||^2 / 4
//! and mu = eps for each agent.
inline std::vector<LocalProblem> problems_from_data(const LogisticDataset& data) {
  std::vector<LocalProblem> problems;
  problems.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& rows = data.samples[i];
    if (rows.empty()) throw ParameterError("agent dataset is empty");
    std::vector<std::shared_ptr<const ComponentLoss>> comps;
    comps.reserve(rows.size());
    double max_sq = 0.0;
    for (const auto& d : rows) {
      max_sq = std::max(max_sq, d.features.squaredNorm());
      comps.push_back(std::make_shared<LogisticComponent>(d.features, d.label, data.epsilon));
    }
    problems.emplace_back(static_cast<int>(i), std::move(comps),
                          data.epsilon + 0.25 * max_sq, data.epsilon);
  }
  return problems;
}

//! Synthetic logistic problems, one per agent.
inline std::vector<LocalProblem> generate_logistic(int n_agents, int dim, int m_per_agent,
                                                   double epsilon, std::uint64_t seed) {
  return problems_from_data(generate_logistic_data(n_agents, dim, m_per_agent, epsilon, seed));
}

//! Quadratic problem with explicit component anchors: f_{i,h} = 1/2 ||x - a_h||^2.
inline LocalProblem make_quadratic_problem(int agent_id, const std::vector<Vec>& anchors) {
  std::vector<std::shared_ptr<const ComponentLoss>> comps;
  comps.reserve(anchors.size());
  for (const auto& a : anchors) comps.push_back(std::make_shared<QuadraticComponent>(a));
  return LocalProblem(agent_id, std::move(comps), 1.0, 1.0);
}

//! One standard-normal anchor per agent; the global optimum is the anchor mean.
inline std::vector<LocalProblem> generate_quadratic(int n_agents, int dim, std::uint64_t seed) {
  if (n_agents < 1 || dim < 1) throw ParameterError("generate_quadratic: sizes must be positive");
  std::vector<LocalProblem> problems;
  problems.reserve(static_cast<std::size_t>(n_agents));
  for (int i = 0; i < n_agents; ++i) {
    RandomStream rng(seed, static_cast<std::uint64_t>(i), 0, StreamPurpose::quadratic_anchor);
    problems.push_back(make_quadratic_problem(i, {rng.normal_vector(dim)}));
  }
  return problems;
}

inline void check_same_dimension(const std::vector<LocalProblem>& problems, const Vec& x) {
  if (problems.empty()) throw ParameterError("no problems given");
  for (const auto& p : problems)
    if (p.dimension() != x.size()) throw ParameterError("dimension mismatch across problems");
}

//! Gradient of F(x) = (1/N) sum_i f_i(x).
inline Vec global_gradient(const std::vector<LocalProblem>& problems, const Vec& x) {
  check_same_dimension(problems, x);
  Vec g = Vec::Zero(x.size());
  for (const auto& p : problems) g += p.full_gradient(x);
  return g / static_cast<double>(problems.size());
}

inline double global_cost(const std::vector<LocalProblem>& problems, const Vec& x) {
  check_same_dimension(problems, x);
  double acc = 0.0;
  for (const auto& p : problems) acc += p.full_cost(x);
  return acc / static_cast<double>(problems.size());
}

//! Plain-text dataset dump: one sample per line, label then features,
//! space-separated; agents separated by a single blank line.
inline void write_logistic_data(const LogisticDataset& data, std::ostream& os) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (i > 0) os << "\n";
    for (const auto& d : data.samples[i]) {
      os << d.label;
      for (int c = 0; c < d.features.size(); ++c) os << ' ' << d.features[c];
      os << "\n";
    }
  }
}

//! Reads the dump format back; the regularizer is supplied by the caller.
inline LogisticDataset read_logistic_data(std::istream& in, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("read_logistic_data: epsilon must be positive");
  LogisticDataset data;
  data.epsilon = epsilon;
  data.samples.emplace_back();
  std::string line;
  int dim = -1;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      if (!data.samples.back().empty()) data.samples.emplace_back();
      continue;
    }
    std::istringstream ls(line);
    LogisticDatum d;
    if (!(ls >> d.label)) throw ConfigError("bad dataset line: " + line);
    std::vector<double> feats;
    double v = 0.0;
    while (ls >> v) feats.push_back(v);
    if (dim < 0) dim = static_cast<int>(feats.size());
    if (feats.empty() || static_cast<int>(feats.size()) != dim)
      throw ConfigError("inconsistent feature count in dataset line: " + line);
    d.features = Eigen::Map<const Vec>(feats.data(), dim);
    data.samples.back().push_back(std::move(d));
  }
  if (data.samples.back().empty()) data.samples.pop_back();
  if (data.samples.empty()) throw ConfigError("dataset is empty");
  return data;
}

}  // namespace ltadmm
