#include "hypbbm/geometry.hpp"

#include <cmath>
#include <limits>

#include "hypbbm/error.hpp"

namespace hypbbm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 1 - |z|^2 without forming |z|^2 first.
double one_minus_norm_sq(Complex z) {
  const double r = std::abs(z);
  return (1.0 - r) * (1.0 + r);
}

}  // namespace

DiskPoint::DiskPoint(double re, double im) : re_(re), im_(im) {
  if (!std::isfinite(re) || !std::isfinite(im) || re * re + im * im >= 1.0) {
    throw DomainError("disk point must satisfy |z| < 1");
  }
}

HalfPlanePoint::HalfPlanePoint(double u, double w) : u_(u), w_(w) {
  if (!std::isfinite(u) || !std::isfinite(w)) {
    throw DomainError("half-plane coordinates must be finite");
  }
}

double normalize_angle(double angle) noexcept {
  double a = std::remainder(angle, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

BoundaryPoint::BoundaryPoint(double angle) : angle_(normalize_angle(angle)) {
  if (!std::isfinite(angle)) throw DomainError("boundary angle must be finite");
}

bool BoundaryPoint::operator==(const BoundaryPoint& other) const noexcept {
  return std::abs(std::remainder(angle_ - other.angle_, kTwoPi)) <= 1e-12;
}

MoebiusMap::MoebiusMap(Complex a, Complex c) {
  const double na = std::abs(a);
  const double nc = std::abs(c);
  const double det = (na - nc) * (na + nc);
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw DomainError("Moebius pair needs |a|^2 - |c|^2 > 0");
  }
  const double scale = 1.0 / std::sqrt(det);
  a_ = a * scale;
  c_ = c * scale;
}

MoebiusMap MoebiusMap::rotation(double theta) { return {std::polar(1.0, theta / 2.0), 0.0}; }

bool in_aff(const MoebiusMap& g, double tol) noexcept {
  const double scale = std::abs(g.a()) + std::abs(g.c());
  return std::abs((g.a() + g.c()).imag()) <= tol * scale;
}

AffineMap::AffineMap(double shift, double log_scale) : shift_(shift), log_scale_(log_scale) {
  if (!std::isfinite(shift) || !std::isfinite(log_scale)) {
    throw DomainError("affine map parameters must be finite");
  }
}

HalfPlanePoint disk_to_halfplane(const DiskPoint& z) {
  const double x = z.re();
  const double y = z.im();
  const double d = (1.0 - x) * (1.0 - x) + y * y;
  return {-2.0 * y / d, std::log(one_minus_norm_sq(z.z())) - std::log(d)};
}

Complex disk_coordinates(const HalfPlanePoint& p) noexcept {
  const double u = p.u();
  if (p.w() <= 0.0) {
    const double v = std::exp(p.w());
    const double den = u * u + (v + 1.0) * (v + 1.0);
    return {(u * u + v * v - 1.0) / den, -2.0 * u / den};
  }
  // Divide numerator and denominator by v^2 so that large heights stay finite.
  const double s = std::exp(-p.w());
  const double us = u * s;
  const double den = us * us + (1.0 + s) * (1.0 + s);
  return {(us * us + (1.0 - s) * (1.0 + s)) / den, -2.0 * us * s / den};
}

DiskPoint halfplane_to_disk(const HalfPlanePoint& p) {
  const Complex z = disk_coordinates(p);
  if (!(std::norm(z) < 1.0)) {
    throw OverflowNearBoundary("half-plane point (u=" + std::to_string(p.u()) +
                               ", w=" + std::to_string(p.w()) +
                               ") is too close to the boundary for the disk chart");
  }
  return DiskPoint(z);
}

double log_disk_gap(const HalfPlanePoint& p) noexcept {
  // 1 - |z|^2 = 4v / (u^2 + (v + 1)^2)
  const double u = p.u();
  if (p.w() <= 0.0) {
    const double v = std::exp(p.w());
    return std::log(4.0) + p.w() - std::log(u * u + (v + 1.0) * (v + 1.0));
  }
  const double s = std::exp(-p.w());
  return std::log(4.0) - p.w() - std::log(u * s * u * s + (1.0 + s) * (1.0 + s));
}

double dist_disk(const DiskPoint& z, const DiskPoint& w) {
  // |1 - z conj(w)|^2 - |z - w|^2 = (1 - |z|^2)(1 - |w|^2)
  const double chord = std::abs(z.z() - w.z());
  if (chord == 0.0) return 0.0;
  const double q = chord / std::sqrt(one_minus_norm_sq(z.z()) * one_minus_norm_sq(w.z()));
  return 2.0 * std::asinh(q);
}

double dist_halfplane(const HalfPlanePoint& p, const HalfPlanePoint& q) {
  // rho = 2 asinh(h), h^2 = (du / (2 sqrt(v1 v2)))^2 + sinh^2(dw / 2)
  const double du = p.u() - q.u();
  const double half_dw = 0.5 * (p.w() - q.w());
  const double mid = 0.5 * (p.w() + q.w());
  if (du == 0.0 && half_dw == 0.0) return 0.0;

  const double a = du == 0.0 ? 0.0 : 0.5 * du * std::exp(-mid);
  const double b = std::sinh(half_dw);
  const double h = std::hypot(a, b);
  if (std::isfinite(h)) return 2.0 * std::asinh(h);

  // Overflow: evaluate log h by log-sum-exp. Here h is huge, so
  // 2 asinh(h) = 2 log(2h) to double precision.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double log_a = du == 0.0 ? kNegInf : std::log(std::abs(du)) - mid - std::log(2.0);
  const double abs_x = std::abs(half_dw);
  const double log_b = half_dw == 0.0
                           ? kNegInf
                           : abs_x + std::log1p(-std::exp(-2.0 * abs_x)) - std::log(2.0);
  const double hi = std::max(log_a, log_b);
  const double lo = std::min(log_a, log_b);
  const double log_h = hi + 0.5 * std::log1p(std::exp(2.0 * (lo - hi)));
  return 2.0 * (log_h + std::log(2.0));
}

double rho_minus_log_im(const HalfPlanePoint& p) {
  if (p.w() <= 0.0) {
    const double v = std::exp(p.w());
    const double m = 1.0 + p.u() * p.u() + v * v;
    const double val = std::log(0.5 * (m + std::sqrt((m - 2.0 * v) * (m + 2.0 * v))));
    if (std::isfinite(val)) return val;
  }
  return dist_to_origin(p) + p.w();
}

MoebiusMap gamma(const DiskPoint& z0) {
  const Complex z = z0.z();
  const double r2 = z0.norm_sq();
  const double k = std::abs(1.0 - z) * std::sqrt(one_minus_norm_sq(z));
  return {(1.0 - z) / k, (z - r2) / k};
}

AffineMap affine_gamma(const HalfPlanePoint& p) noexcept { return AffineMap(p.u(), p.w()); }

DiskPoint apply(const MoebiusMap& g, const DiskPoint& z) {
  const Complex num = g.a() * z.z() + g.c();
  const Complex den = std::conj(g.c()) * z.z() + std::conj(g.a());
  const Complex out = num / den;
  if (!(std::norm(out) < 1.0)) {
    throw OverflowNearBoundary("Moebius image rounds onto the unit circle");
  }
  return DiskPoint(out);
}

BoundaryPoint apply(const MoebiusMap& g, const BoundaryPoint& xi) {
  const Complex x = xi.z();
  const Complex out = (g.a() * x + g.c()) / (std::conj(g.c()) * x + std::conj(g.a()));
  return BoundaryPoint(std::arg(out));
}

HalfPlanePoint apply(const AffineMap& g, const HalfPlanePoint& p) {
  return {g.shift() + std::exp(g.log_scale()) * p.u(), g.log_scale() + p.w()};
}

MoebiusMap compose(const MoebiusMap& g, const MoebiusMap& h) {
  return {g.a() * h.a() + g.c() * std::conj(h.c()), g.a() * h.c() + g.c() * std::conj(h.a())};
}

MoebiusMap inverse(const MoebiusMap& g) { return {std::conj(g.a()), -g.c()}; }

AffineMap compose(const AffineMap& g, const AffineMap& h) noexcept {
  return AffineMap(g.shift() + std::exp(g.log_scale()) * h.shift(), g.log_scale() + h.log_scale());
}

AffineMap inverse(const AffineMap& g) noexcept {
  return AffineMap(-g.shift() * std::exp(-g.log_scale()), -g.log_scale());
}

MoebiusMap to_moebius(const AffineMap& g) {
  const double half = 0.5 * g.log_scale();
  const double skew = 0.5 * g.shift() * std::exp(-half);
  return {Complex(std::cosh(half), skew), Complex(std::sinh(half), -skew)};
}

double poisson_kernel(const DiskPoint& z0, const BoundaryPoint& xi) {
  return one_minus_norm_sq(z0.z()) / std::norm(xi.z() - z0.z());
}

double arc_harmonic_measure(const DiskPoint& z0, double lo, double hi) {
  const double width = hi - lo;
  if (!(width > 0.0) || width > kTwoPi) throw DomainError("arc width must lie in (0, 2pi]");
  if (width == kTwoPi) return 1.0;
  // Harmonic measure from z0 is the pushforward of arc length under a map
  // sending 0 to z0.
  const MoebiusMap back = inverse(gamma(z0));
  const double a = apply(back, BoundaryPoint(lo)).angle();
  const double b = apply(back, BoundaryPoint(hi)).angle();
  double d = b - a;
  if (d < 0.0) d += kTwoPi;
  return d / kTwoPi;
}

BoundaryPoint radial_projection(const DiskPoint& z) noexcept {
  if (z.re() == 0.0 && z.im() == 0.0) return BoundaryPoint(0.0);
  return BoundaryPoint(std::atan2(z.im(), z.re()));
}

BoundaryPoint radial_projection(const HalfPlanePoint& p) noexcept {
  // Angle of (u^2 + v^2 - 1 - 2iu), rescaled by 1/v^2 for large v.
  const double u = p.u();
  double re = 0.0;
  double im = 0.0;
  if (p.w() <= 0.0) {
    const double v = std::exp(p.w());
    re = u * u + (v - 1.0) * (v + 1.0);
    im = -2.0 * u;
  } else {
    const double s = std::exp(-p.w());
    re = u * s * u * s + (1.0 - s) * (1.0 + s);
    im = -2.0 * u * s * s;
  }
  if (re == 0.0 && im == 0.0) return BoundaryPoint(0.0);
  return BoundaryPoint(std::atan2(im, re));
}

double psi(double x) {
  if (!(x >= 0.0)) throw DomainError("psi needs x >= 0");
  return x <= 1.0 ? x * std::sqrt(x) : std::sqrt(x);
}

double heat_tail_bound(double R, double t, const BoundConstants& k) {
  if (!(R >= 0.0) || !(t > 0.0)) throw DomainError("heat bound needs R >= 0 and t > 0");
  const double g = R + 0.5 * t;
  return k.heat / std::sqrt(1.0 + R) * psi((1.0 + R) / t) * std::exp(-g * g / (2.0 * t));
}

double max_excursion_bound(double c, const BoundConstants& k) {
  if (!(c > 0.0)) throw DomainError("excursion bound needs c > 0");
  const double d = c - 0.5;
  return k.excursion * std::exp(-0.5 * d * d);
}

}  // namespace hypbbm
