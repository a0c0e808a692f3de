#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ltadmm/errors.hpp"
#include "ltadmm/random.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

enum class CompressorKind { identity, qbit, randk };

//! Which unbiased compressor to apply to outgoing messages.
//!
//! Spec strings: "none", "qbit:<bits>", "randk:<keep>". Compressors are
//! stateless; all randomness enters through the RandomStream passed per call.
struct CompressorSpec {
  CompressorKind kind = CompressorKind::identity;
  int bits = 0;  // qbit only
  int keep = 0;  // randk only

  bool operator==(const CompressorSpec&) const = default;

  static CompressorSpec parse(const std::string& text) {
    if (text == "none") return {CompressorKind::identity, 0, 0};
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "qbit" || head == "randk") {
      int v = 0;
      try {
        std::size_t used = 0;
        v = std::stoi(arg, &used);
        if (used != arg.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParameterError("compressor spec needs an integer argument: " + text);
      }
      if (v < 1) throw ParameterError("compressor argument must be >= 1: " + text);
      if (head == "qbit") return {CompressorKind::qbit, v, 0};
      return {CompressorKind::randk, 0, v};
    }
    throw ParameterError("unknown compressor spec: " + text +
                         " (expected none, qbit:<b>, randk:<k>)");
  }

  std::string to_string() const {
    switch (kind) {
      case CompressorKind::identity: return "none";
      case CompressorKind::qbit: return "qbit:" + std::to_string(bits);
      case CompressorKind::randk: return "randk:" + std::to_string(keep);
    }
    return "none";
  }
};

namespace detail {

inline void check_spec(const CompressorSpec& spec, int n) {
  if (n < 1) throw ParameterError("compressor input must have positive dimension");
  switch (spec.kind) {
    case CompressorKind::identity: return;
    case CompressorKind::qbit:
      if (spec.bits < 1) throw ParameterError("qbit compressor needs bits >= 1");
      return;
    case CompressorKind::randk:
      if (spec.keep < 1 || spec.keep > n)
        throw ParameterError("randk compressor needs 1 <= k <= n");
      return;
  }
}

}  // namespace detail

//! Applies the compressor. Unbiased for every kind: E[C(x)] = x.
//!
//! qbit stochastically rounds |x| / ||x||_inf on a 2^(b-1) grid with a fresh
//! uniform perturbation per coordinate, and maps x = 0 to 0 (the formula is
//! 0/0 there, and the zero convention preserves unbiasedness). randk keeps a
//! uniformly random k-subset of coordinates scaled by n/k.
inline Vec compress(const CompressorSpec& spec, const Vec& x, RandomStream& rng) {
  const int n = static_cast<int>(x.size());
  detail::check_spec(spec, n);
  if (!x.allFinite()) throw NumericError("compress: input vector is not finite");

  switch (spec.kind) {
    case CompressorKind::identity:
      return x;

    case CompressorKind::qbit: {
      const double inf_norm = x.lpNorm<Eigen::Infinity>();
      if (inf_norm == 0.0) return Vec::Zero(n);
      const double levels = std::ldexp(1.0, spec.bits - 1);  // 2^(b-1)
      const double scale = inf_norm / levels;
      Vec out(n);
      for (int i = 0; i < n; ++i) {
        const double kappa = rng.uniform01();
        const double code = std::floor(levels * std::abs(x[i]) / inf_norm + kappa);
        const double sign = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
        out[i] = scale * sign * code;
      }
      return out;
    }

    case CompressorKind::randk: {
      const auto subset = rng.sample_without_replacement(n, spec.keep);
      const double scale = static_cast<double>(n) / static_cast<double>(spec.keep);
      Vec out = Vec::Zero(n);
      for (int i : subset) out[i] = scale * x[i];
      return out;
    }
  }
  throw ParameterError("unreachable compressor kind");
}

//! Relative second-moment constant p >= 1 with E||C(x) - x||^2 <= p ||x||^2.
//!
//! identity: 1. randk: n/k, from the exact second moment (n/k - 1) ||x||^2.
//! qbit: 1 + n / 4^(b-1), a conservative bound from the per-coordinate
//! rounding variance (||x||_inf / 2^(b-1))^2 / 4; validated empirically, not
//! claimed tight.
inline double variance_parameter(const CompressorSpec& spec, int n) {
  detail::check_spec(spec, n);
  switch (spec.kind) {
    case CompressorKind::identity: return 1.0;
    case CompressorKind::qbit:
      return 1.0 + static_cast<double>(n) * std::ldexp(1.0, -2 * (spec.bits - 1));
    case CompressorKind::randk:
      return static_cast<double>(n) / static_cast<double>(spec.keep);
  }
  throw ParameterError("unreachable compressor kind");
}

//! Bits on the wire for one compressed n-vector.
//!
//! identity: 64 per entry. qbit: one full-precision scale plus b bits per
//! entry (sign folded into the b-bit code). randk: per kept entry, a
//! full-precision value plus a ceil(log2 n)-bit coordinate index.
inline long long payload_bits(const CompressorSpec& spec, int n) {
  detail::check_spec(spec, n);
  switch (spec.kind) {
    case CompressorKind::identity: return 64LL * n;
    case CompressorKind::qbit: return 64LL + static_cast<long long>(n) * spec.bits;
    case CompressorKind::randk: {
      const int index_bits =
          n == 1 ? 0 : std::bit_width(static_cast<unsigned>(n - 1));
      return static_cast<long long>(spec.keep) * (64LL + index_bits);
    }
  }
  throw ParameterError("unreachable compressor kind");
}

}  // namespace ltadmm
