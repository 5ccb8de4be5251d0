#include "hypbbm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hypbbm/error.hpp"
#include "hypbbm/stats.hpp"

namespace hypbbm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCltAlpha = 1e-3;

}  // namespace

TestReport TestReport::at_most(double statistic, double threshold, std::size_t n, std::string description) {
  TestReport r{statistic, -std::numeric_limits<double>::infinity(), threshold, statistic <= threshold, n,
               std::move(description)};
  return r;
}

TestReport TestReport::at_least(double statistic, double threshold, std::size_t n, std::string description) {
  return {statistic, threshold, std::numeric_limits<double>::infinity(), statistic >= threshold, n,
          std::move(description)};
}

TestReport TestReport::within(double statistic, double lo, double hi, std::size_t n, std::string description) {
  return {statistic, lo, hi, lo <= statistic && statistic <= hi, n, std::move(description)};
}

TestReport TestReport::below(double statistic, double threshold, std::size_t n, std::string description) {
  TestReport r = at_most(statistic, threshold, n, std::move(description));
  r.pass = statistic < threshold;
  return r;
}

TestReport TestReport::above(double statistic, double threshold, std::size_t n, std::string description) {
  TestReport r = at_least(statistic, threshold, n, std::move(description));
  r.pass = statistic > threshold;
  return r;
}

nlohmann::json TestReport::to_json() const {
  auto bound = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"statistic", statistic}, {"lower", bound(lower)},       {"upper", bound(upper)},
          {"pass", pass},           {"sample_size", sample_size}, {"description", description},
          {"exploratory", exploratory}};
}

double max_rate(double lambda) { return 0.5 + std::sqrt(2.0 * lambda); }

double min_rate(double lambda) { return lambda <= kTransientThreshold ? 0.5 - std::sqrt(2.0 * lambda) : 0.0; }

double max_log_correction(double lambda) {
  if (lambda > kTransientThreshold) {
    throw WrongRegime("the log correction needs lambda <= 1/8, got " + std::to_string(lambda));
  }
  return -3.0 / std::sqrt(8.0 * lambda);
}

double limit_set_dimension(double lambda) {
  return lambda <= kTransientThreshold ? 0.5 * (1.0 - std::sqrt(1.0 - 8.0 * lambda)) : 1.0;
}

double support_dimension(double lambda) { return std::min(2.0 * lambda, 1.0); }

Extremes max_min_distance(const Population& pop, const HalfPlanePoint& origin) {
  if (pop.particles.empty()) throw InsufficientData("extremes of an empty population");
  Extremes e;
  e.max = -std::numeric_limits<double>::infinity();
  e.min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double d = dist_halfplane(pop.particles[i].position, origin);
    if (d > e.max) {
      e.max = d;
      e.argmax = i;
    }
    if (d < e.min) {
      e.min = d;
      e.argmin = i;
    }
  }
  return e;
}

double mean_distance(const Population& pop, const HalfPlanePoint& origin) {
  if (pop.particles.empty()) throw InsufficientData("mean distance of an empty population");
  stats::CompensatedSum s;
  for (const Particle& p : pop.particles) s.add(dist_halfplane(p.position, origin));
  return s.value() / static_cast<double>(pop.size());
}

void RateSeries::push(double t, double value) {
  if (!points_.empty() && !(t > points_.back().first)) throw DomainError("rate series times must increase");
  points_.emplace_back(t, value);
}

double rate_fit(const RateSeries& series, double window_fraction) {
  if (!(window_fraction > 0.0) || window_fraction > 1.0) throw DomainError("window fraction must be in (0, 1]");
  const auto& pts = series.points();
  const auto take = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(pts.size()) - 1e-9));
  if (take < 4) throw InsufficientData("rate fit needs at least 4 points in the window");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = pts.size() - take; i < pts.size(); ++i) {
    x.push_back(pts[i].first);
    y.push_back(pts[i].second);
  }
  return stats::least_squares(x, y).slope;
}

LogCorrection log_correction(const RateSeries& series, double lambda, bool minimum) {
  const double ref = max_log_correction(lambda);
  const double rate = minimum ? min_rate(lambda) : max_rate(lambda);
  LogCorrection out;
  out.reference = minimum ? -ref : ref;
  for (const auto& [t, value] : series.points()) {
    if (t < std::numbers::e) throw DomainError("log correction needs t >= e");
    out.centered.push(t, (value - rate * t) / std::log(t));
  }
  return out;
}

TestReport standard_normal_ks(const std::vector<double>& values, double t, std::string description) {
  if (values.size() < 30) throw InsufficientData("CLT test needs at least 30 particles");
  if (!(t > 0.0)) throw DomainError("CLT test needs t > 0");
  std::vector<double> z;
  z.reserve(values.size());
  const double sd = std::sqrt(t);
  for (double v : values) z.push_back((v - 0.5 * t) / sd);
  const double d = stats::ks_statistic(std::move(z), stats::normal_cdf);
  return TestReport::at_most(d, stats::ks_critical_value(values.size(), kCltAlpha), values.size(),
                           std::move(description));
}

TestReport distance_clt_test(const Population& pop, double t, const HalfPlanePoint& origin) {
  std::vector<double> d;
  d.reserve(pop.size());
  for (const Particle& p : pop.particles) d.push_back(dist_halfplane(p.position, origin));
  return standard_normal_ks(d, t, "KS distance of standardized hyperbolic distances vs N(0,1)");
}

TestReport vertical_clt_test(const Population& pop, double t, const HalfPlanePoint& origin) {
  std::vector<double> d;
  d.reserve(pop.size());
  for (const Particle& p : pop.particles) d.push_back(origin.w() - p.position.w());
  return standard_normal_ks(d, t, "KS distance of standardized -log Im vs N(0,1)");
}

bool visits_ball(const Population& pop, const HalfPlanePoint& center, double radius) {
  return std::any_of(pop.particles.begin(), pop.particles.end(),
                     [&](const Particle& p) { return dist_halfplane(p.position, center) <= radius; });
}

double escape_rate(const std::vector<Population>& snapshots, const HalfPlanePoint& origin) {
  if (snapshots.size() < 4) throw InsufficientData("escape rate needs at least 4 snapshots");
  std::vector<double> t;
  std::vector<double> m;
  for (const Population& pop : snapshots) {
    t.push_back(pop.t);
    m.push_back(mean_distance(pop, origin));
  }
  return stats::least_squares(t, m).slope;
}

std::size_t arc_index(const BoundaryPoint& xi, std::size_t bins) {
  const double pos = (xi.angle() + kPi) / kTwoPi * static_cast<double>(bins);
  const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
  return std::min(k, bins - 1);
}

std::vector<double> boundary_measure(const Population& pop, std::size_t bins, Weighting weighting, double lambda) {
  if (bins < 2) throw DomainError("boundary measure needs at least 2 bins");
  std::vector<stats::CompensatedSum> sums(bins);
  const double weight = weighting == Weighting::Mu ? 1.0 / static_cast<double>(pop.size())
                                                   : std::exp(-lambda * pop.t);
  for (const Particle& p : pop.particles) sums[arc_index(radial_projection(p.position), bins)].add(weight);
  std::vector<double> out(bins);
  for (std::size_t k = 0; k < bins; ++k) out[k] = sums[k].value();
  return out;
}

std::vector<double> expected_arc_masses(const DiskPoint& z0, std::size_t bins) {
  if (bins < 2) throw DomainError("need at least 2 bins");
  std::vector<double> out(bins);
  const double width = kTwoPi / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double lo = -kPi + width * static_cast<double>(k);
    out[k] = arc_harmonic_measure(z0, lo, lo + width);
  }
  return out;
}

std::vector<AtomDecayPoint> atom_decay(const std::vector<Population>& snapshots, std::size_t bins) {
  if (snapshots.empty()) throw InsufficientData("atom decay needs at least one snapshot");
  std::vector<AtomDecayPoint> out;
  for (const Population& pop : snapshots) {
    const auto masses = boundary_measure(pop, bins);
    AtomDecayPoint pt;
    pt.t = pop.t;
    pt.max_bin_mass = *std::max_element(masses.begin(), masses.end());
    pt.occupied_bins = static_cast<std::size_t>(std::count_if(masses.begin(), masses.end(), [](double m) { return m > 0.0; }));
    out.push_back(pt);
  }
  return out;
}

std::vector<double> dyadic_scales(int first, int last) {
  std::vector<double> out;
  for (int k = first; k <= last; ++k) out.push_back(kTwoPi / std::ldexp(1.0, k));
  return out;
}

DimensionEstimate box_dimension(const std::vector<BoundaryPoint>& angles, const std::vector<double>& scales) {
  if (angles.size() < 100) throw InsufficientData("box dimension needs at least 100 angles");
  if (scales.size() < 2) throw InsufficientData("box dimension needs at least 2 scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0) || (i > 0 && !(scales[i] < scales[i - 1]))) {
      throw DomainError("scales must be positive and strictly decreasing");
    }
  }
  DimensionEstimate est;
  est.scales = scales;
  std::vector<double> x;
  std::vector<double> y;
  for (double eps : scales) {
    const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kTwoPi / eps)));
    std::vector<char> hit(bins, 0);
    for (const auto& a : angles) hit[bins == 1 ? 0 : arc_index(a, bins)] = 1;
    const auto count = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    est.counts.push_back(count);
    x.push_back(std::log(static_cast<double>(bins) / kTwoPi));  // log(1 / eps) for the rounded width
    y.push_back(std::log(static_cast<double>(count)));
  }
  const auto fit = stats::least_squares(x, y);
  est.dimension = fit.slope;
  est.r2 = fit.r2;
  return est;
}

}  // namespace hypbbm
