#pragma once

// Asymptotic statistics of population snapshots: extremal distances and
// their rates, the distance CLT, escape rate, boundary measures, atom decay
// and box-counting dimension of boundary shadows.

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypbbm/branching.hpp"
#include "hypbbm/geometry.hpp"

namespace hypbbm {

/// Outcome of one statistical check: pass iff lower <= statistic <= upper
/// (or strictly, when requested).
struct TestReport {
  double statistic = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool pass = false;
  std::size_t sample_size = 0;
  std::string description;
  /// Reported but never counted as a failure.
  bool exploratory = false;

  static TestReport at_most(double statistic, double threshold, std::size_t n, std::string description);
  static TestReport at_least(double statistic, double threshold, std::size_t n, std::string description);
  static TestReport within(double statistic, double lo, double hi, std::size_t n, std::string description);
  static TestReport below(double statistic, double threshold, std::size_t n, std::string description);
  static TestReport above(double statistic, double threshold, std::size_t n, std::string description);
  nlohmann::json to_json() const;
};

// Reference constants, all computed from lambda.

/// r* = 1/2 + sqrt(2 lambda).
double max_rate(double lambda);
/// r_* = 1/2 - sqrt(2 lambda) for lambda <= 1/8, and 0 above.
double min_rate(double lambda);
/// -3 / sqrt(8 lambda). Throws WrongRegime for lambda > 1/8.
double max_log_correction(double lambda);
/// (1 - sqrt(1 - 8 lambda)) / 2 for lambda <= 1/8, 1 above.
double limit_set_dimension(double lambda);
/// min(2 lambda, 1).
double support_dimension(double lambda);

inline constexpr double kTransientThreshold = 0.125;

struct Extremes {
  double max = 0.0;
  double min = 0.0;
  std::size_t argmax = 0;  // first particle attaining the extreme
  std::size_t argmin = 0;
};

Extremes max_min_distance(const Population& pop, const HalfPlanePoint& origin = {});
double mean_distance(const Population& pop, const HalfPlanePoint& origin = {});

class RateSeries {
 public:
  RateSeries() = default;
  /// Throws DomainError unless t is strictly increasing.
  void push(double t, double value);
  const std::vector<std::pair<double, double>>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  std::vector<std::pair<double, double>> points_;
};

/// Least-squares slope over the trailing ceil(window_fraction * n) points.
/// Throws InsufficientData below 4 points.
double rate_fit(const RateSeries& series, double window_fraction = 1.0);

struct LogCorrection {
  RateSeries centered;  // (value - rate t) / log t
  double reference = 0.0;
};

/// (Max_t - r* t) / log t with reference -3/sqrt(8 lambda); for the minimum,
/// (Min_t - r_* t) / log t with reference +3/sqrt(8 lambda). Throws
/// WrongRegime for lambda > 1/8 and DomainError for t < e.
LogCorrection log_correction(const RateSeries& series, double lambda, bool minimum = false);

/// KS distance of (rho(., origin) - t/2) / sqrt(t) against N(0, 1) with the
/// threshold at significance 1e-3. Particles are dependent, so the verdict
/// is informative only when aggregated across replicas.
TestReport distance_clt_test(const Population& pop, double t, const HalfPlanePoint& origin = {});
/// The same statistic for the vertical projection -log Im (relative to the
/// origin's height).
TestReport vertical_clt_test(const Population& pop, double t, const HalfPlanePoint& origin = {});
/// KS distance of standardized values against N(0, 1).
TestReport standard_normal_ks(const std::vector<double>& values, double t, std::string description);

/// Whether some particle lies in the closed ball of the given radius.
bool visits_ball(const Population& pop, const HalfPlanePoint& center, double radius);

/// Least-squares slope of the mean distance over the snapshots.
double escape_rate(const std::vector<Population>& snapshots, const HalfPlanePoint& origin = {});

enum class Weighting { Mu, Lambda };

/// Arc k covers [-pi + 2 pi k / bins, -pi + 2 pi (k + 1) / bins).
std::size_t arc_index(const BoundaryPoint& xi, std::size_t bins);

/// Radial-projection masses per arc, weighted by 1/N(t) (Mu) or
/// e^{-lambda t} (Lambda). Summed with compensation.
std::vector<double> boundary_measure(const Population& pop, std::size_t bins, Weighting weighting = Weighting::Mu,
                                     double lambda = 0.0);
/// Harmonic-measure mass of each arc seen from z0.
std::vector<double> expected_arc_masses(const DiskPoint& z0, std::size_t bins);

struct AtomDecayPoint {
  double t = 0.0;
  double max_bin_mass = 0.0;
  std::size_t occupied_bins = 0;
};

inline constexpr std::size_t kAtomBins = 1024;

std::vector<AtomDecayPoint> atom_decay(const std::vector<Population>& snapshots, std::size_t bins = kAtomBins);

struct DimensionEstimate {
  std::vector<double> scales;  // arc widths, strictly decreasing
  std::vector<std::size_t> counts;
  double dimension = 0.0;      // slope of log N(eps) against log(1/eps)
  double r2 = 0.0;
};

/// Arc widths 2 pi / 2^k for k in [first, last].
std::vector<double> dyadic_scales(int first, int last);

/// Box-counting over arcs: scale eps is rounded to round(2 pi / eps) equal
/// arcs. Needs at least 100 angles and two scales.
DimensionEstimate box_dimension(const std::vector<BoundaryPoint>& angles, const std::vector<double>& scales);

}  // namespace hypbbm
