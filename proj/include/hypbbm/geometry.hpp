#pragma once

// Models of the hyperbolic plane: the Poincare disk, the upper half-plane in
// logarithmic coordinates (u, w) with z = u + i*exp(w), and the boundary
// circle. All values are immutable and all functions are pure.

#include <complex>
#include <numbers>

namespace hypbbm {

using Complex = std::complex<double>;

/// A point of the open unit disk.
class DiskPoint {
 public:
  DiskPoint() = default;
  /// Throws DomainError unless re^2 + im^2 < 1 and both are finite.
  DiskPoint(double re, double im);
  explicit DiskPoint(Complex z) : DiskPoint(z.real(), z.imag()) {}

  double re() const noexcept { return re_; }
  double im() const noexcept { return im_; }
  Complex z() const noexcept { return {re_, im_}; }
  double norm_sq() const noexcept { return re_ * re_ + im_ * im_; }

 private:
  double re_ = 0.0;
  double im_ = 0.0;
};

/// A point u + i*exp(w) of the upper half-plane. The height exp(w) is never
/// stored: particles far out toward the real axis have w of order -t.
class HalfPlanePoint {
 public:
  HalfPlanePoint() = default;  // the point i
  /// Throws DomainError unless both coordinates are finite.
  HalfPlanePoint(double u, double w);

  double u() const noexcept { return u_; }
  double w() const noexcept { return w_; }

  bool operator==(const HalfPlanePoint&) const = default;

 private:
  double u_ = 0.0;
  double w_ = 0.0;
};

/// A point exp(i*angle) of the unit circle, angle kept in (-pi, pi].
class BoundaryPoint {
 public:
  BoundaryPoint() = default;
  explicit BoundaryPoint(double angle);

  double angle() const noexcept { return angle_; }
  Complex z() const noexcept { return std::polar(1.0, angle_); }

  /// Equal when the angles agree modulo 2*pi within 1e-12.
  bool operator==(const BoundaryPoint& other) const noexcept;

 private:
  double angle_ = 0.0;
};

/// Normalizes an angle into (-pi, pi].
double normalize_angle(double angle) noexcept;

/// Orientation-preserving isometry z -> (a z + c) / (conj(c) z + conj(a)),
/// |a|^2 - |c|^2 = 1. The pair is rescaled on construction.
class MoebiusMap {
 public:
  MoebiusMap() = default;  // identity
  /// Throws DomainError if |a|^2 - |c|^2 <= 0.
  MoebiusMap(Complex a, Complex c);

  Complex a() const noexcept { return a_; }
  Complex c() const noexcept { return c_; }

  static MoebiusMap identity() { return {}; }
  /// Rotation z -> exp(i*theta) z.
  static MoebiusMap rotation(double theta);

 private:
  Complex a_{1.0, 0.0};
  Complex c_{0.0, 0.0};
};

/// Membership in the subgroup fixing the boundary point 1, i.e. a + c real.
/// The tolerance is relative to |a| + |c|.
bool in_aff(const MoebiusMap& g, double tol = 1e-12) noexcept;

/// Half-plane affine isometry z -> exp(log_scale) z + shift. This is the
/// subgroup of MoebiusMap fixing the disk boundary point 1, written in the
/// half-plane chart where it acts on (u, w) by
/// (u, w) -> (shift + exp(log_scale) u, log_scale + w).
class AffineMap {
 public:
  AffineMap() = default;  // identity
  AffineMap(double shift, double log_scale);

  double shift() const noexcept { return shift_; }
  double log_scale() const noexcept { return log_scale_; }

 private:
  double shift_ = 0.0;
  double log_scale_ = 0.0;
};

// Charts.

/// z -> i (1 + z) / (1 - z), returned in logarithmic coordinates.
HalfPlanePoint disk_to_halfplane(const DiskPoint& z);
/// z -> (z - i) / (z + i). Throws OverflowNearBoundary when the image rounds
/// onto the unit circle.
DiskPoint halfplane_to_disk(const HalfPlanePoint& p);
/// The disk image of p without the |z| < 1 check. Used for output only.
Complex disk_coordinates(const HalfPlanePoint& p) noexcept;
/// log(1 - |z|^2) of the disk image of p, finite for every finite p.
double log_disk_gap(const HalfPlanePoint& p) noexcept;

// Distances.

double dist_disk(const DiskPoint& z, const DiskPoint& w);
double dist_halfplane(const HalfPlanePoint& p, const HalfPlanePoint& q);
/// Distance to the origin i of the half-plane.
inline double dist_to_origin(const HalfPlanePoint& p) { return dist_halfplane(p, HalfPlanePoint{}); }
/// rho(p, i) + log Im p, which tends to log(1 + u^2) as w -> -infinity.
double rho_minus_log_im(const HalfPlanePoint& p);

// Isometries.

/// The unique element of the boundary-1 stabilizer mapping 0 to z0.
MoebiusMap gamma(const DiskPoint& z0);
/// The same map in the half-plane chart: z -> Im(p) z + Re(p).
AffineMap affine_gamma(const HalfPlanePoint& p) noexcept;

DiskPoint apply(const MoebiusMap& g, const DiskPoint& z);
BoundaryPoint apply(const MoebiusMap& g, const BoundaryPoint& xi);
HalfPlanePoint apply(const AffineMap& g, const HalfPlanePoint& p);

/// compose(g, h) acts as g after h.
MoebiusMap compose(const MoebiusMap& g, const MoebiusMap& h);
MoebiusMap inverse(const MoebiusMap& g);
AffineMap compose(const AffineMap& g, const AffineMap& h) noexcept;
AffineMap inverse(const AffineMap& g) noexcept;

/// Conjugates a half-plane affine map into the disk.
MoebiusMap to_moebius(const AffineMap& g);

// Boundary.

double poisson_kernel(const DiskPoint& z0, const BoundaryPoint& xi);
/// Mass of the arc from angle lo counterclockwise to angle hi (hi - lo in
/// (0, 2*pi]) under the harmonic measure seen from z0.
double arc_harmonic_measure(const DiskPoint& z0, double lo, double hi);

/// Angle of z; angle 0 for z = 0.
BoundaryPoint radial_projection(const DiskPoint& z) noexcept;
/// Angle of the disk image of p, computed without leaving the log chart.
BoundaryPoint radial_projection(const HalfPlanePoint& p) noexcept;

// Comparison ceilings used by the statistical tests. The leading constants
// are not known in closed form.

struct BoundConstants {
  double heat = 10.0;
  double excursion = 10.0;
};

/// x^(3/2) on [0, 1], x^(1/2) above.
double psi(double x);
/// Upper bound on the heat kernel of (1/2)Laplacian at distance R, time t.
double heat_tail_bound(double R, double t, const BoundConstants& k = {});
/// K exp(-(c - 1/2)^2 / 2), the tail ceiling for the unit-time excursion.
double max_excursion_bound(double c, const BoundConstants& k = {});

}  // namespace hypbbm
