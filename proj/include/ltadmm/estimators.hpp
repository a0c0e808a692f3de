#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ltadmm/errors.hpp"
#include "ltadmm/objectives.hpp"
#include "ltadmm/random.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

enum class EstimatorKind { saga, sgd, full };

//! Gradient oracle selection for the local training steps.
struct EstimatorMode {
  EstimatorKind kind = EstimatorKind::saga;
  int batch_size = 1;  // used by saga and sgd; must satisfy 1 <= |B| < m_i

  bool operator==(const EstimatorMode&) const = default;

  static EstimatorKind parse_kind(const std::string& text) {
    if (text == "saga") return EstimatorKind::saga;
    if (text == "sgd") return EstimatorKind::sgd;
    if (text == "full") return EstimatorKind::full;
    throw ParameterError("unknown estimator: " + text + " (expected saga, sgd, full)");
  }

  static std::string kind_name(EstimatorKind k) {
    switch (k) {
      case EstimatorKind::saga: return "saga";
      case EstimatorKind::sgd: return "sgd";
      case EstimatorKind::full: return "full";
    }
    return "saga";
  }
};

//! Uniformly random batch of distinct component indices, deterministic in the
//! stream key. Requires batch_size < m.
inline std::vector<int> draw_batch(const EstimatorMode& mode, int m, RandomStream& rng) {
  if (mode.kind == EstimatorKind::full)
    throw ParameterError("draw_batch: the full-gradient mode does not sample batches");
  if (mode.batch_size < 1) throw ParameterError("draw_batch: batch size must be >= 1");
  if (mode.batch_size >= m) throw ParameterError("draw_batch: batch size must be < component count");
  return rng.sample_without_replacement(m, mode.batch_size);
}

//! Table of stored component gradients with running average.
//!
//! The table holds the gradients themselves, so the stored term of the
//! variance-reduced estimate is a lookup. A fresh-evaluation counter feeds the
//! time model; evaluations already available at the requested point (because
//! the table was just reset there, or a previous call evaluated the same
//! component at the same point) are reused and not recounted. One table per
//! agent; mutated only by that agent's round execution.
class SagaTable {
 public:
  SagaTable() = default;

  bool initialized() const noexcept { return !stored_.empty(); }
  int component_count() const noexcept { return static_cast<int>(stored_.size()); }
  std::int64_t fresh_eval_count() const noexcept { return fresh_evals_; }
  const Vec& running_average() const {
    if (!initialized()) throw ParameterError("saga table is not initialized");
    return average_;
  }
  const Vec& stored_gradient(int h) const {
    check_index(h);
    return stored_[static_cast<std::size_t>(h)];
  }

  //! Fills every entry with the component gradient at x and sets the running
  //! average to the full gradient. Costs m fresh evaluations.
  void reset(const LocalProblem& p, const Vec& x) {
    if (x.size() != p.dimension()) throw ParameterError("saga reset: dimension mismatch");
    const int m = p.component_count();
    stored_.assign(static_cast<std::size_t>(m), Vec());
    average_ = Vec::Zero(p.dimension());
    for (int h = 0; h < m; ++h) {
      stored_[static_cast<std::size_t>(h)] = p.component_gradient(h, x);
      average_ += stored_[static_cast<std::size_t>(h)];
      ++fresh_evals_;
    }
    average_ /= static_cast<double>(m);
    table_point_ = x;  // every entry is the gradient at x
    cache_point_.resize(0);
    cache_.clear();
  }

  //! Variance-reduced estimate at phi:
  //!   g = (1/|B|) sum_{h in B} (grad_h(phi) - stored[h]) + running_average.
  //! Immediately after a reset at x, the estimate at phi = x equals the full
  //! gradient exactly for every batch.
  Vec estimate(const LocalProblem& p, const Vec& phi, std::span<const int> batch) {
    require_ready(p, phi, batch);
    Vec g = average_;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (int h : batch) {
      const Vec& fresh = evaluate(p, h, phi);
      g += inv * (fresh - stored_[static_cast<std::size_t>(h)]);
    }
    return g;
  }

  //! Overwrites the batch entries with the gradients at phi_next and adjusts
  //! the running average incrementally; other entries are unchanged.
  void update(const LocalProblem& p, const Vec& phi_next, std::span<const int> batch) {
    require_ready(p, phi_next, batch);
    const double inv_m = 1.0 / static_cast<double>(component_count());
    for (int h : batch) {
      const Vec fresh = evaluate(p, h, phi_next);
      average_ += inv_m * (fresh - stored_[static_cast<std::size_t>(h)]);
      stored_[static_cast<std::size_t>(h)] = fresh;
    }
    if (batch.size() == stored_.size()) {
      table_point_ = phi_next;  // full refresh, the whole table sits at phi_next
    } else if (!batch.empty() && table_point_.size() > 0 && phi_next != table_point_) {
      table_point_.resize(0);
    }
  }

 private:
  void check_index(int h) const {
    if (!initialized()) throw ParameterError("saga table is not initialized");
    if (h < 0 || h >= component_count()) throw ParameterError("saga table: index out of range");
  }

  void require_ready(const LocalProblem& p, const Vec& point, std::span<const int> batch) const {
    if (!initialized()) throw ParameterError("saga table is not initialized");
    if (p.component_count() != component_count())
      throw ParameterError("saga table: problem/table size mismatch");
    if (point.size() != p.dimension()) throw ParameterError("saga table: dimension mismatch");
    for (int h : batch) check_index(h);
  }

  //! Component gradient at a point, reusing the table or the one-point memo
  //! when they already hold that exact evaluation; otherwise evaluates fresh,
  //! counts it, and memoizes it.
  const Vec& evaluate(const LocalProblem& p, int h, const Vec& point) {
    if (table_point_.size() > 0 && point == table_point_)
      return stored_[static_cast<std::size_t>(h)];
    if (cache_point_.size() > 0 && point == cache_point_) {
      for (const auto& [idx, grad] : cache_)
        if (idx == h) return grad;
    } else {
      cache_point_ = point;
      cache_.clear();
    }
    cache_.emplace_back(h, p.component_gradient(h, point));
    ++fresh_evals_;
    return cache_.back().second;
  }

  std::vector<Vec> stored_;
  Vec average_;
  std::int64_t fresh_evals_ = 0;

  Vec table_point_;  // nonempty iff every stored entry is the gradient there
  Vec cache_point_;  // single-point memo of the latest fresh evaluations
  std::vector<std::pair<int, Vec>> cache_;
};

}  // namespace ltadmm
