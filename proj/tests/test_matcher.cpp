#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sinoplace/errors.hpp"
#include "sinoplace/matcher.hpp"

using namespace sinoplace;

namespace {

Descriptor random_descriptor(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  return normalize_descriptor(Descriptor{testing::random_grid(rng, rows, cols), false});
}

std::size_t first_argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_SUITE("matcher") {

TEST_CASE("normalize") {
  Grid g(2, 2, 2.0);  // norm 4
  const Descriptor d = normalize_descriptor(Descriptor{g, false});
  CHECK(d.normalized);
  for (double v : d.data.values()) CHECK(v == doctest::Approx(0.5));
  const Descriptor again = normalize_descriptor(d);
  CHECK(testing::max_abs_diff(again.data, d.data) < 1e-12);
  CHECK_THROWS_AS(normalize_descriptor(Descriptor{Grid(3, 3), false}), ZeroDescriptor);
}

TEST_CASE("normalize backward matches finite differences") {
  std::mt19937_64 rng(1);
  const Descriptor raw{testing::random_grid(rng, 4, 3), false};
  const Grid w = testing::random_grid(rng, 4, 3, -1.0, 1.0);
  const Grid an = normalize_backward(raw, w);
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    Descriptor up = raw, dn = raw;
    up.data.values()[i] += 1e-6;
    dn.data.values()[i] -= 1e-6;
    double fu = 0, fd = 0;
    const Grid nu = normalize_descriptor(up).data, nd = normalize_descriptor(dn).data;
    for (std::size_t j = 0; j < w.size(); ++j) {
      fu += w.values()[j] * nu.values()[j];
      fd += w.values()[j] * nd.values()[j];
    }
    CHECK(std::abs((fu - fd) / 2e-6 - an.values()[i]) < 1e-7);
  }
}

TEST_CASE("self correlation peaks at zero with score one") {
  std::mt19937_64 rng(2);
  const Descriptor d = random_descriptor(rng, 24, 7);
  const auto brute = oracle::correlation_profile(d.data, d.data);
  REQUIRE(first_argmax(brute) == 0);
  const MatchResult m = correlate(d, d);
  CHECK(std::abs(m.score - 1.0) < 1e-9);
  CHECK(m.alpha_bin == 0);
  CHECK(m.alpha_hat == 0.0);
}

TEST_CASE("profile equals the brute-force loop") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Descriptor a = random_descriptor(rng, 20, 6), b = random_descriptor(rng, 20, 6);
    const MatchResult m = correlate(a, b);
    const auto brute = oracle::correlation_profile(a.data, b.data);
    REQUIRE(m.profile.size() == brute.size());
    for (std::size_t i = 0; i < brute.size(); ++i) CHECK(std::abs(m.profile[i] - brute[i]) < 1e-9);
    CHECK(m.alpha_bin == static_cast<long>(first_argmax(m.profile)));
    CHECK(m.score == *std::max_element(m.profile.begin(), m.profile.end()));
    for (double v : m.profile) CHECK(std::abs(v) <= 1.0 + 1e-9);
  }
}

TEST_CASE("row-shifted copy is found at the shift") {
  std::mt19937_64 rng(4);
  const Descriptor d = random_descriptor(rng, 30, 5);
  for (long k : {0L, 1L, 13L, 29L}) {
    const Descriptor s{shift_rows(d.data, k), true};
    const MatchResult m = correlate(d, s);
    CHECK(m.alpha_bin == k);
    CHECK(std::abs(m.score - 1.0) < 1e-9);
    CHECK(m.alpha_hat == doctest::Approx(2 * std::numbers::pi * static_cast<double>(k) / 30.0));
  }
}

TEST_CASE("symmetry") {
  std::mt19937_64 rng(5);
  const Descriptor a = random_descriptor(rng, 16, 4), b = random_descriptor(rng, 16, 4);
  const MatchResult ab = correlate(a, b), ba = correlate(b, a);
  CHECK(std::abs(ab.score - ba.score) < 1e-12);
  CHECK((ab.alpha_bin + ba.alpha_bin) % 16 == 0);
}

TEST_CASE("ties resolve to the smallest bin") {
  Grid g(8, 1);
  g(0, 0) = g(4, 0) = 1.0;
  const Descriptor d = normalize_descriptor(Descriptor{g, false});
  CHECK(correlate(d, d).alpha_bin == 0);
}

TEST_CASE("errors") {
  std::mt19937_64 rng(6);
  const Descriptor a = random_descriptor(rng, 8, 3), b = random_descriptor(rng, 8, 4);
  CHECK_THROWS_AS(correlate(a, b), ShapeMismatch);
  Descriptor raw{testing::random_grid(rng, 8, 3), false};
  CHECK_THROWS_AS(correlate(a, raw), NotNormalized);
  raw.normalized = true;  // flag set but the norm is wrong
  CHECK_THROWS_AS(correlate(a, raw), NotNormalized);
  CHECK_NOTHROW(correlate(a, a, false));
  CHECK(correlate(a, a, false).profile.empty());
}

TEST_CASE("correlation vector") {
  std::mt19937_64 rng(7);
  const Descriptor q = random_descriptor(rng, 12, 4);
  std::vector<Descriptor> support{q};
  auto one = correlation_vector(q, support);
  REQUIRE(one.size() == 1);
  CHECK(std::abs(one[0].score - 1.0) < 1e-9);
  CHECK(one[0].alpha_bin == 0);
  CHECK(correlation_vector(q, std::vector<Descriptor>{}).empty());
  for (int i = 0; i < 6; ++i) support.push_back(random_descriptor(rng, 12, 4));
  const auto fwd = correlation_vector(q, support);
  std::vector<Descriptor> rev(support.rbegin(), support.rend());
  const auto bwd = correlation_vector(q, rev);
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    CHECK(fwd[i].score == bwd[fwd.size() - 1 - i].score);
    CHECK(fwd[i].score == correlate(q, support[i]).score);
  }
}

}
