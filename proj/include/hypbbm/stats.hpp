#pragma once

// Goodness-of-fit statistics and small numeric helpers shared by the
// estimators and the test suites.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace hypbbm::stats {

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double se = 0.0;        // sqrt(variance / n)
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

double normal_cdf(double x) noexcept;

/// sup |F_n - F| for the given continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Two-sample sup |F_n - G_m|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Critical value of the one-sample KS statistic at significance alpha,
/// with Stephens' finite-n correction of the Kolmogorov limit.
double ks_critical_value(std::size_t n, double alpha);

/// Pearson statistic sum (O - E)^2 / E with E = n * probs.
double chi_square_statistic(std::span<const double> observed, std::span<const double> probs);
/// Upper alpha quantile of chi-square with dof degrees of freedom.
double chi_square_critical(double dof, double alpha);
/// Upper alpha quantile of F(d1, d2).
double f_critical(double d1, double d2, double alpha);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of y on x. Needs at least two distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct T2Result {
  double statistic = 0.0;  // Hotelling T^2
  double threshold = 0.0;  // critical T^2 at the requested significance
  std::size_t replicas = 0;
  std::size_t dims = 0;
};

/// Hotelling's test that the mean of the replica vectors equals expected.
/// The covariance is estimated from the replicas; needs replicas > dims.
T2Result hotelling_t2(const std::vector<std::vector<double>>& replicas, std::span<const double> expected,
                      double alpha);

/// One-dimensional energy distance between two samples.
double energy_distance(std::span<const double> a, std::span<const double> b);

struct PermutationResult {
  double statistic = 0.0;
  double critical = 0.0;  // upper alpha quantile under relabelling
};

/// Permutation test for the energy distance with the given number of
/// relabellings drawn from seed.
PermutationResult energy_permutation_test(std::span<const double> a, std::span<const double> b,
                                          std::size_t permutations, double alpha, std::uint64_t seed);

}  // namespace hypbbm::stats
