#include "hypbbm/motion.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "hypbbm/error.hpp"

namespace hypbbm {

void StepScheme::validate() const {
  if (!(dt_max > 0.0) || !std::isfinite(dt_max)) throw DomainError("dt_max must be positive");
}

HalfPlanePoint step(const HalfPlanePoint& p, double dt, RandomStream& rs, const StepScheme& scheme) {
  if (!(dt > 0.0)) throw DomainError("step length must be positive");
  Walker walker(p);
  walker.advance(dt, rs, scheme.u_integration);
  return walker.point();
}

namespace {

std::size_t step_count(double duration, double dt_max) {
  return static_cast<std::size_t>(std::ceil(duration / dt_max - 1e-9));
}

// Calls visit(dt, walker) after every step.
template <typename Visit>
void walk(const HalfPlanePoint& start, double duration, const StepScheme& scheme, RandomStream& rs,
          Visit visit) {
  scheme.validate();
  if (!(duration >= 0.0)) throw DomainError("duration must be >= 0");
  Walker walker(start);
  const std::size_t n = step_count(duration, scheme.dt_max);
  double elapsed = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = k + 1 == n ? duration - elapsed : scheme.dt_max;
    if (dt <= 0.0) break;
    walker.advance(dt, rs, scheme.u_integration);
    elapsed += dt;
    visit(dt, walker);
  }
}

}  // namespace

PathSegment sample_path(const HalfPlanePoint& start, double duration, const StepScheme& scheme,
                        RandomStream& rs) {
  PathSegment seg;
  seg.start = start;
  seg.total_duration = duration;
  seg.steps.reserve(step_count(duration, scheme.dt_max));
  walk(start, duration, scheme, rs,
       [&](double dt, const Walker& w) { seg.steps.push_back({dt, w.point()}); });
  return seg;
}

PathSummary summarize_path(const HalfPlanePoint& start, double duration, const StepScheme& scheme,
                           RandomStream& rs, bool track_max) {
  PathSummary out{start, 0.0};
  Walker last(start);
  // The grid maximum is located with q = 2 (cosh rho - 1), which is monotone
  // in rho and cheap given the cached exp(2w); rho is evaluated only for the
  // winner.
  const double inv_v0 = std::exp(-start.w());
  double best_q = 0.0;
  HalfPlanePoint best = start;
  walk(start, duration, scheme, rs, [&](double, const Walker& w) {
    last = w;
    if (!track_max) return;
    const double du = w.u() - start.u();
    const double sh = std::sinh(0.5 * (w.w() - start.w()));
    double q = du * du * inv_v0 / std::sqrt(w.exp2w()) + 4.0 * sh * sh;
    if (!std::isfinite(q)) q = 2.0 * (std::cosh(dist_halfplane(w.point(), start)) - 1.0);
    if (q > best_q) {
      best_q = q;
      best = w.point();
    }
  });
  out.end = last.point();
  out.max_distance = dist_halfplane(out.end, start);
  if (track_max) out.max_distance = std::max(out.max_distance, dist_halfplane(best, start));
  return out;
}

double max_distance_on_interval(const HalfPlanePoint& start, double duration, const StepScheme& scheme,
                                RandomStream& rs) {
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  return summarize_path(start, duration, scheme, rs, true).max_distance;
}

void write_path_csv(const PathSegment& path, std::ostream& out) {
  out << "t,u,w\n";
  char buf[96];
  double t = 0.0;
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", t, path.start.u(), path.start.w());
  out << buf;
  for (const auto& s : path.steps) {
    t += s.dt;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", t, s.point.u(), s.point.w());
    out << buf;
  }
}

}  // namespace hypbbm
