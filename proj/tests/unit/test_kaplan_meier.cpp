#include <doctest.h>

#include <numeric>

#include "ssnsm/kaplan_meier.hpp"

using namespace ssnsm;

TEST_CASE("product-limit values by hand") {
  const std::vector<double> t{1, 2, 3, 3, 4, 5};
  const std::vector<std::uint8_t> d{1, 0, 1, 1, 0, 1};
  const auto km = km_fit(t, d);
  REQUIRE(km.times == std::vector<double>{1, 3, 5});
  CHECK(km.at_risk == std::vector<std::size_t>{6, 4, 1});
  CHECK(km.survival[0] == doctest::Approx(5.0 / 6.0));
  CHECK(km.survival[1] == doctest::Approx(5.0 / 12.0));
  CHECK(km.survival[2] == doctest::Approx(0.0));
  CHECK(km(0.5) == 1.0);
  CHECK(km(1.0) == doctest::Approx(5.0 / 6.0));
  CHECK(km.left_limit(1.0) == 1.0);
  CHECK(km(2.9) == doctest::Approx(5.0 / 6.0));
  CHECK(km(4.0) == doctest::Approx(5.0 / 12.0));
}

TEST_CASE("events precede censorings at tied times") {
  const std::vector<double> t{2, 2, 3};
  const std::vector<std::uint8_t> d{1, 0, 1};
  const auto km = km_fit(t, d);
  CHECK(km.at_risk[0] == 3);
  CHECK(km.survival[0] == doctest::Approx(2.0 / 3.0));
  CHECK(km.survival[1] == doctest::Approx(0.0));
}

TEST_CASE("no censoring gives the empirical survival function") {
  const std::vector<double> t{4, 1, 3, 2, 2};
  const std::vector<std::uint8_t> d(5, 1);
  const auto km = km_fit(t, d);
  CHECK(km(1.0) == doctest::Approx(0.8));
  CHECK(km(2.0) == doctest::Approx(0.4));
  CHECK(km(3.5) == doctest::Approx(0.2));
  CHECK(km(4.0) == 0.0);
}

TEST_CASE("residual distribution masses, mean and conditional means") {
  const std::vector<double> t{1, 2, 3, 3, 4, 5};
  const std::vector<std::uint8_t> d{1, 0, 1, 1, 0, 1};
  const auto r = km_residual_distribution(t, d);
  REQUIRE(r.values == std::vector<double>{1, 3, 5});
  CHECK(r.masses[0] == doctest::Approx(1.0 / 6.0));
  CHECK(r.masses[1] == doctest::Approx(5.0 / 12.0));
  CHECK(r.masses[2] == doctest::Approx(5.0 / 12.0));
  CHECK(r.mean() == doctest::Approx(3.5));
  CHECK(r.conditional_mean_above(2.0) == doctest::Approx(4.0));
  CHECK(r.conditional_mean_above(3.5) == doctest::Approx(5.0));
  CHECK(r.conditional_mean_above(9.0) == 9.0);
  CHECK(r.survival(3.0) == doctest::Approx(5.0 / 12.0));
  CHECK(r.survival(0.0) == doctest::Approx(1.0));
}

TEST_CASE("a censored largest value keeps the leftover mass") {
  const std::vector<double> t{1, 2, 3};
  const std::vector<std::uint8_t> d{1, 1, 0};
  const auto r = km_residual_distribution(t, d);
  REQUIRE(r.values.size() == 3);
  CHECK(r.values.back() == 3.0);
  for (double m : r.masses) CHECK(m == doctest::Approx(1.0 / 3.0));
  CHECK(std::accumulate(r.masses.begin(), r.masses.end(), 0.0) == doctest::Approx(1.0));
  CHECK(r.conditional_mean_above(2.5) == doctest::Approx(3.0));
}
