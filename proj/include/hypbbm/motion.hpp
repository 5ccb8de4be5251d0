#pragma once

// Hyperbolic Brownian motion (generator half the Laplacian) in the
// logarithmic half-plane chart. The vertical coordinate w = log Im z is a
// Brownian motion with drift -1/2 and is advanced exactly; the horizontal
// coordinate is conditionally Gaussian with variance int exp(2 w_s) ds,
// which is approximated per step.

#include <cmath>
#include <iosfwd>
#include <vector>

#include "hypbbm/geometry.hpp"
#include "hypbbm/random.hpp"

namespace hypbbm {

enum class UIntegration { LeftEndpoint, Trapezoid };

struct StepScheme {
  double dt_max = 1e-2;
  UIntegration u_integration = UIntegration::Trapezoid;

  /// Throws DomainError unless dt_max > 0.
  void validate() const;
};

/// Scheme defaults: path statistics and excursion maxima.
inline constexpr double kPathDt = 1e-2;
inline constexpr double kExcursionDt = 1e-3;

/// Mutable walker state used in hot loops. Caches exp(2w).
class Walker {
 public:
  explicit Walker(const HalfPlanePoint& p) : u_(p.u()), w_(p.w()), e2w_(std::exp(2.0 * p.w())) {}

  void advance(double dt, RandomStream& rs, UIntegration scheme) {
    const double sdt = std::sqrt(dt);
    const double z1 = rs.normal();
    const double z2 = rs.normal();
    const double w_next = w_ - 0.5 * dt + sdt * z1;
    const double e2w_next = std::exp(2.0 * w_next);
    const double var = scheme == UIntegration::Trapezoid ? 0.5 * dt * (e2w_ + e2w_next) : dt * e2w_;
    u_ += std::sqrt(var) * z2;
    w_ = w_next;
    e2w_ = e2w_next;
  }

  HalfPlanePoint point() const { return {u_, w_}; }
  double u() const noexcept { return u_; }
  double w() const noexcept { return w_; }
  double exp2w() const noexcept { return e2w_; }

 private:
  double u_;
  double w_;
  double e2w_;
};

/// One step of length dt: w' = w - dt/2 + sqrt(dt) Z1, u' = u + sigma Z2.
HalfPlanePoint step(const HalfPlanePoint& p, double dt, RandomStream& rs, const StepScheme& scheme);

struct PathStep {
  double dt;
  HalfPlanePoint point;
};

struct PathSegment {
  HalfPlanePoint start;
  std::vector<PathStep> steps;
  double total_duration = 0.0;

  const HalfPlanePoint& end() const { return steps.empty() ? start : steps.back().point; }
};

/// ceil(duration / dt_max) steps; the last one is shortened to land exactly
/// on the duration.
PathSegment sample_path(const HalfPlanePoint& start, double duration, const StepScheme& scheme,
                        RandomStream& rs);

/// max rho(B_s, B_0) over the step grid. A lower bound for the continuous
/// maximum.
double max_distance_on_interval(const HalfPlanePoint& start, double duration, const StepScheme& scheme,
                                RandomStream& rs);

/// Endpoint and grid maximum of rho(B_s, B_0) for one path, without storing
/// it. Without track_max the maximum field holds the endpoint distance.
struct PathSummary {
  HalfPlanePoint end;
  double max_distance = 0.0;
};
PathSummary summarize_path(const HalfPlanePoint& start, double duration, const StepScheme& scheme,
                           RandomStream& rs, bool track_max);

/// CSV rows "t,u,w" with a header line.
void write_path_csv(const PathSegment& path, std::ostream& out);

}  // namespace hypbbm
