#include <doctest.h>

#include <cmath>
#include <random>

#include "hypbbm/stats.hpp"

using namespace hypbbm;

TEST_CASE("compensated summation") {
  stats::CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000000; ++i) s.add(1e-16);
  s.add(-1.0);
  CHECK(s.value() == doctest::Approx(1e-10).epsilon(1e-6));
}

TEST_CASE("mean and standard error") {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const auto ms = stats::mean_se(xs);
  CHECK(ms.mean == 2.5);
  CHECK(ms.variance == doctest::Approx(5.0 / 3.0));
  CHECK(ms.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(ms.n == 4);
}

TEST_CASE("normal cdf") {
  CHECK(stats::normal_cdf(0.0) == 0.5);
  CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(stats::normal_cdf(-8.0) > 0.0);
}

TEST_CASE("table values of critical points") {
  CHECK(stats::chi_square_critical(10.0, 1e-3) == doctest::Approx(29.588).epsilon(1e-4));
  CHECK(stats::chi_square_critical(15.0, 1e-3) == doctest::Approx(37.697).epsilon(1e-4));
  CHECK(stats::f_critical(5.0, 10.0, 0.01) == doctest::Approx(5.636).epsilon(1e-3));
  // Large-n KS critical value at 1e-3 is 1.9495 / sqrt(n).
  CHECK(stats::ks_critical_value(1000000, 1e-3) * 1000.0 == doctest::Approx(1.9495).epsilon(1e-3));
  CHECK(stats::ks_critical_value(100, 0.05) == doctest::Approx(0.134).epsilon(0.02));
}

TEST_CASE("KS statistics") {
  // Two points at the quartiles of U(0, 1): D = 1/4.
  CHECK(stats::ks_statistic({0.25, 0.75}, [](double x) { return x; }) == doctest::Approx(0.25));
  CHECK(stats::ks_two_sample({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(stats::ks_two_sample({1.0, 2.0}, {3.0, 4.0}) == 1.0);

  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  std::vector<double> xs(5000);
  for (double& x : xs) x = nd(gen);
  CHECK(stats::ks_statistic(xs, stats::normal_cdf) < stats::ks_critical_value(xs.size(), 1e-3));
  for (double& x : xs) x += 0.2;
  CHECK(stats::ks_statistic(xs, stats::normal_cdf) > stats::ks_critical_value(xs.size(), 1e-3));
}

TEST_CASE("chi-square statistic") {
  const std::vector<double> obs = {10.0, 20.0, 30.0};
  const std::vector<double> probs = {1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0};
  CHECK(stats::chi_square_statistic(obs, probs) == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<double> off = {20.0, 20.0, 20.0};
  // Expected 10, 20, 30: (10^2/10 + 0 + 10^2/30).
  CHECK(stats::chi_square_statistic(off, probs) == doctest::Approx(10.0 + 10.0 / 3.0));
}

TEST_CASE("least squares") {
  const std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y = {1.0, 3.0, 5.0, 7.0};
  const auto fit = stats::least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("Hotelling test") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> reps(300, std::vector<double>(4));
  for (auto& r : reps) {
    const double common = nd(gen);
    for (double& v : r) v = common + 0.5 * nd(gen);
  }
  const std::vector<double> zero(4, 0.0);
  const auto null = stats::hotelling_t2(reps, zero, 1e-3);
  CHECK(null.statistic < null.threshold);
  CHECK(null.dims == 4);
  // A shift against the correlation is visible even when each marginal
  // moves by a fraction of its spread.
  const std::vector<double> shifted = {0.15, -0.15, 0.15, -0.15};
  CHECK(stats::hotelling_t2(reps, shifted, 1e-3).statistic > null.threshold);
}

TEST_CASE("energy distance") {
  const std::vector<double> a = {0.0, 1.0, 2.0};
  CHECK(stats::energy_distance(a, a) == doctest::Approx(0.0).epsilon(1e-15));
  // Point masses at 0 and 1: 2 |0 - 1| - 0 - 0 = 2.
  CHECK(stats::energy_distance(std::vector<double>{0.0}, std::vector<double>{1.0}) == doctest::Approx(2.0));

  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  std::vector<double> x(1000);
  std::vector<double> y(1000);
  for (double& v : x) v = nd(gen);
  for (double& v : y) v = nd(gen);
  const auto same = stats::energy_permutation_test(x, y, 500, 0.01, 7);
  CHECK(same.statistic < same.critical);
  for (double& v : y) v += 0.5;
  const auto moved = stats::energy_permutation_test(x, y, 500, 0.01, 7);
  CHECK(moved.statistic > moved.critical);
}
