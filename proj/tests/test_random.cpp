#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "ltadmm/random.hpp"

using ltadmm::RandomStream;
using ltadmm::StreamPurpose;

TEST_CASE("identical keys reproduce identical draws") {
  RandomStream a(42, 3, 17, StreamPurpose::x_compress, 2);
  RandomStream b(42, 3, 17, StreamPurpose::x_compress, 2);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  RandomStream c(42, 3, 17, StreamPurpose::x_compress, 2);
  RandomStream d(42, 3, 17, StreamPurpose::x_compress, 2);
  const auto va = c.normal_vector(16);
  const auto vb = d.normal_vector(16);
  for (int i = 0; i < 16; ++i) REQUIRE(va[i] == vb[i]);
}

TEST_CASE("key components all matter") {
  RandomStream base(1, 2, 3, StreamPurpose::batch_draw, 4);
  const std::uint64_t first = base.next_u64();
  REQUIRE(RandomStream(9, 2, 3, StreamPurpose::batch_draw, 4).next_u64() != first);
  REQUIRE(RandomStream(1, 9, 3, StreamPurpose::batch_draw, 4).next_u64() != first);
  REQUIRE(RandomStream(1, 2, 9, StreamPurpose::batch_draw, 4).next_u64() != first);
  REQUIRE(RandomStream(1, 2, 3, StreamPurpose::z_compress, 4).next_u64() != first);
  REQUIRE(RandomStream(1, 2, 3, StreamPurpose::batch_draw, 9).next_u64() != first);
}

TEST_CASE("uniform01 stays in [0,1) and looks uniform") {
  RandomStream rng(7, 0, 0, StreamPurpose::batch_draw);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // mean 1/2, sd of the mean = 1/sqrt(12 n)
  REQUIRE(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("uniform_int bounds and coverage") {
  RandomStream rng(11, 1, 0, StreamPurpose::batch_draw);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const int v = rng.uniform_int(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) REQUIRE(std::abs(c - 10000) < 500);
  REQUIRE_THROWS_AS(rng.uniform_int(0), ltadmm::ParameterError);
}

TEST_CASE("normal draws have the right first moments") {
  RandomStream rng(13, 0, 0, StreamPurpose::dataset_features);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  REQUIRE(std::abs(s1 / n) < 5.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("sample_without_replacement yields sorted distinct uniform subsets") {
  RandomStream rng(17, 0, 0, StreamPurpose::batch_draw);
  std::vector<int> freq(5, 0);
  const int draws = 100000;
  for (int it = 0; it < draws; ++it) {
    const auto s = rng.sample_without_replacement(5, 2);
    REQUIRE(s.size() == 2);
    REQUIRE(s[0] < s[1]);
    REQUIRE(s[0] >= 0);
    REQUIRE(s[1] < 5);
    for (int v : s) ++freq[static_cast<std::size_t>(v)];
  }
  // every index appears in a 2-of-5 subset with probability 2/5
  for (int f : freq) {
    const double p = static_cast<double>(f) / draws;
    REQUIRE(std::abs(p - 0.4) < 3.0 * std::sqrt(0.4 * 0.6 / draws) + 1e-3);
  }
  REQUIRE_THROWS_AS(rng.sample_without_replacement(3, 4), ltadmm::ParameterError);
}

TEST_CASE("streams keyed by different agents are uncorrelated") {
  RandomStream a(23, 0, 0, StreamPurpose::x_compress);
  RandomStream b(23, 1, 0, StreamPurpose::x_compress);
  const int n = 100000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform01();
    const double y = b.uniform01();
    sa += x; sb += y; saa += x * x; sbb += y * y; sab += x * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double var_a = saa / n - (sa / n) * (sa / n);
  const double var_b = sbb / n - (sb / n) * (sb / n);
  const double corr = cov / std::sqrt(var_a * var_b);
  REQUIRE(std::abs(corr) < 0.01);
}
