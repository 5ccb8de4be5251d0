#include "hypbbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "hypbbm/error.hpp"
#include "hypbbm/random.hpp"

namespace hypbbm::stats {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    carry_ += (sum_ - t) + x;
  } else {
    carry_ += (x - t) + sum_;
  }
  sum_ = t;
}

MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  out.mean = mean;
  if (out.n > 1) {
    out.variance = m2 / static_cast<double>(out.n - 1);
    out.se = std::sqrt(out.variance / static_cast<double>(out.n));
  }
  return out;
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InsufficientData("KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const auto di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InsufficientData("KS two-sample with an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0) throw InsufficientData("KS critical value needs n >= 1");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double rn = std::sqrt(static_cast<double>(n));
  return c / (rn + 0.12 + 0.11 / rn);
}

double chi_square_statistic(std::span<const double> observed, std::span<const double> probs) {
  if (observed.size() != probs.size() || observed.empty()) {
    throw DomainError("chi-square needs matching non-empty bins");
  }
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = n * probs[k];
    if (!(e > 0.0)) throw DomainError("chi-square bin with zero expected count");
    const double d = observed[k] - e;
    stat += d * d / e;
  }
  return stat;
}

double chi_square_critical(double dof, double alpha) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

double f_critical(double d1, double d2, double alpha) {
  boost::math::fisher_f dist(d1, d2);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InsufficientData("least squares needs two points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw InsufficientData("least squares needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

T2Result hotelling_t2(const std::vector<std::vector<double>>& replicas, std::span<const double> expected,
                      double alpha) {
  const std::size_t n = replicas.size();
  const std::size_t p = expected.size();
  if (n <= p) throw InsufficientData("Hotelling T^2 needs more replicas than dimensions");
  Eigen::MatrixXd x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    if (replicas[i].size() != p) throw DomainError("replica vector has the wrong length");
    for (std::size_t k = 0; k < p; ++k) x(i, k) = replicas[i][k];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::VectorXd diff(p);
  for (std::size_t k = 0; k < p; ++k) diff(k) = mean(k) - expected[k];
  const Eigen::VectorXd sol = cov.ldlt().solve(diff);

  T2Result out;
  out.replicas = n;
  out.dims = p;
  out.statistic = static_cast<double>(n) * diff.dot(sol);
  const auto dn = static_cast<double>(n);
  const auto dp = static_cast<double>(p);
  out.threshold = dp * (dn - 1.0) / (dn - dp) * f_critical(dp, dn - dp, alpha);
  return out;
}

namespace {

// Sum over i < j of |x_j - x_i| for sorted x.
double within_sum(std::span<const double> sorted) {
  double s = 0.0;
  double prefix = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    s += static_cast<double>(j) * sorted[j] - prefix;
    prefix += sorted[j];
  }
  return s;
}

// Sum over all pairs of |a_i - b_j| with both sorted.
double cross_sum(std::span<const double> a, std::span<const double> b) {
  std::vector<double> prefix(b.size() + 1, 0.0);
  for (std::size_t j = 0; j < b.size(); ++j) prefix[j + 1] = prefix[j] + b[j];
  const double total = prefix.back();
  double s = 0.0;
  std::size_t k = 0;
  for (double x : a) {
    while (k < b.size() && b[k] <= x) ++k;
    const auto dk = static_cast<double>(k);
    s += x * dk - prefix[k];
    s += (total - prefix[k]) - x * (static_cast<double>(b.size()) - dk);
  }
  return s;
}

}  // namespace

double energy_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientData("energy distance of an empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto na = static_cast<double>(sa.size());
  const auto nb = static_cast<double>(sb.size());
  const double exy = cross_sum(sa, sb) / (na * nb);
  const double exx = 2.0 * within_sum(sa) / (na * na);
  const double eyy = 2.0 * within_sum(sb) / (nb * nb);
  return 2.0 * exy - exx - eyy;
}

PermutationResult energy_permutation_test(std::span<const double> a, std::span<const double> b,
                                          std::size_t permutations, double alpha, std::uint64_t seed) {
  PermutationResult out;
  out.statistic = energy_distance(a, b);
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  RandomStream rs(seed);
  std::vector<double> null_stats;
  null_stats.reserve(permutations);
  for (std::size_t k = 0; k < permutations; ++k) {
    std::shuffle(pooled.begin(), pooled.end(), rs);
    null_stats.push_back(energy_distance(std::span(pooled).first(a.size()), std::span(pooled).subspan(a.size())));
  }
  std::sort(null_stats.begin(), null_stats.end());
  const auto idx = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(permutations))) - 1;
  out.critical = null_stats[std::min(idx, null_stats.size() - 1)];
  return out;
}

}  // namespace hypbbm::stats
