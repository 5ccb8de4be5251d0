#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hypbbm/error.hpp"
#include "hypbbm/geometry.hpp"

using namespace hypbbm;

namespace {

constexpr double kPi = std::numbers::pi;

// Textbook forms of the two metrics, used as oracles on the safe range.
double disk_metric_log_ratio(Complex z, Complex w) {
  const double a = std::abs(1.0 - z * std::conj(w));
  const double b = std::abs(z - w);
  return std::log((a + b) / (a - b));
}

double halfplane_metric_log_ratio(Complex z, Complex w) {
  const double a = std::abs(z - std::conj(w));
  const double b = std::abs(z - w);
  return std::log((a + b) / (a - b));
}

Complex as_complex(const HalfPlanePoint& p) { return {p.u(), std::exp(p.w())}; }

DiskPoint random_disk(std::mt19937_64& rng, double max_radius = 0.95) {
  std::uniform_real_distribution<double> r(0.0, max_radius);
  std::uniform_real_distribution<double> phi(-kPi, kPi);
  return DiskPoint(std::polar(r(rng), phi(rng)));
}

MoebiusMap random_moebius(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phi(-kPi, kPi);
  return compose(gamma(random_disk(rng, 0.9)), MoebiusMap::rotation(phi(rng)));
}

void check_same_action(const MoebiusMap& g, const MoebiusMap& h, std::mt19937_64& rng, double tol) {
  for (int k = 0; k < 20; ++k) {
    const DiskPoint z = random_disk(rng, 0.8);
    const Complex a = apply(g, z).z();
    const Complex b = apply(h, z).z();
    CHECK(std::abs(a - b) < tol);
  }
}

}  // namespace

TEST_CASE("disk points reject the closed boundary") {
  CHECK_THROWS_AS(DiskPoint(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(DiskPoint(0.8, 0.6), DomainError);
  CHECK_NOTHROW(DiskPoint(0.6, 0.79));
  CHECK_THROWS_AS(HalfPlanePoint(0.0, std::nan("")), DomainError);
}

TEST_CASE("boundary angles are normalized to (-pi, pi]") {
  CHECK(BoundaryPoint(-kPi).angle() == doctest::Approx(kPi));
  CHECK(BoundaryPoint(3.0 * kPi).angle() == doctest::Approx(kPi));
  CHECK(BoundaryPoint(2.0 * kPi + 0.25).angle() == doctest::Approx(0.25));
  CHECK(BoundaryPoint(0.1) == BoundaryPoint(0.1 + 2.0 * kPi));
  CHECK_FALSE(BoundaryPoint(0.1) == BoundaryPoint(0.1 + 1e-9));
}

TEST_CASE("disk_to_halfplane") {
  const HalfPlanePoint o = disk_to_halfplane(DiskPoint{});
  CHECK(o.u() == 0.0);
  CHECK(o.w() == 0.0);

  // Toward -1 along the real axis the image approaches the boundary point 0.
  double prev_w = 0.0;
  for (double eps : {1e-2, 1e-4, 1e-8}) {
    const HalfPlanePoint p = disk_to_halfplane(DiskPoint(-1.0 + eps, 0.0));
    CHECK(std::abs(p.u()) < 1e-12);
    CHECK(p.w() < prev_w);
    prev_w = p.w();
  }
  CHECK(prev_w < -15.0);

  const DiskPoint z(0.3, 0.4);
  const DiskPoint back = halfplane_to_disk(disk_to_halfplane(z));
  CHECK(std::abs(back.z() - z.z()) < 1e-12);
}

TEST_CASE("halfplane_to_disk") {
  CHECK(std::abs(halfplane_to_disk(HalfPlanePoint{}).z()) == 0.0);

  // Oracle: (z - i)/(z + i) at z = i e^20 in extended precision.
  const long double v = std::exp(20.0L);
  const long double gap = 1.0L - (v - 1.0L) / (v + 1.0L);
  const DiskPoint far = halfplane_to_disk(HalfPlanePoint(0.0, 20.0));
  CHECK(far.im() == 0.0);
  CHECK(far.re() > 0.0);
  CHECK((1.0 - far.re()) == doctest::Approx(static_cast<double>(gap)).epsilon(1e-6));
  CHECK(static_cast<double>(gap) == doctest::Approx(2.0 * std::exp(-20.0)).epsilon(1e-8));

  CHECK_THROWS_AS(halfplane_to_disk(HalfPlanePoint(0.0, -745.0)), OverflowNearBoundary);
  // The gap stays available in log form.
  CHECK(log_disk_gap(HalfPlanePoint(0.0, -745.0)) == doctest::Approx(std::log(4.0) - 745.0 - std::log(1.0)));
  CHECK(log_disk_gap(HalfPlanePoint(0.0, 20.0)) == doctest::Approx(std::log(4.0) - 20.0).epsilon(1e-8));
}

TEST_CASE("chart round trips on random points") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 1000; ++k) {
    const DiskPoint z = random_disk(rng, 0.99);
    const DiskPoint back = halfplane_to_disk(disk_to_halfplane(z));
    CHECK(std::abs(back.z() - z.z()) < 1e-12);
    const double gap = std::log((1.0 - std::abs(z.z())) * (1.0 + std::abs(z.z())));
    CHECK(log_disk_gap(disk_to_halfplane(z)) == doctest::Approx(gap).epsilon(1e-9));
  }
}

TEST_CASE("dist_disk") {
  CHECK(dist_disk(DiskPoint{}, DiskPoint{}) == 0.0);
  CHECK(dist_disk(DiskPoint{}, DiskPoint(0.5, 0.0)) == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const DiskPoint z = random_disk(rng);
    const DiskPoint w = random_disk(rng);
    const MoebiusMap g = random_moebius(rng);
    const double d = dist_disk(z, w);
    CHECK(std::abs(dist_disk(apply(g, z), apply(g, w)) - d) < 1e-9);
    CHECK(std::abs(disk_metric_log_ratio(z.z(), w.z()) - d) < 1e-9);
    CHECK(dist_disk(w, z) == doctest::Approx(d));
  }
}

TEST_CASE("dist_disk triangle inequality") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 500; ++k) {
    const DiskPoint a = random_disk(rng);
    const DiskPoint b = random_disk(rng);
    const DiskPoint c = random_disk(rng);
    CHECK(dist_disk(a, c) <= dist_disk(a, b) + dist_disk(b, c) + 1e-12);
  }
}

TEST_CASE("dist_halfplane") {
  CHECK(dist_halfplane(HalfPlanePoint{}, HalfPlanePoint(0.0, -3.0)) == doctest::Approx(3.0).epsilon(1e-14));
  const HalfPlanePoint p(0.7, -1.2);
  CHECK(dist_halfplane(p, p) == 0.0);

  const HalfPlanePoint a(0.0, 0.0);
  const HalfPlanePoint b(1.0, -1.0);
  CHECK(std::abs(dist_halfplane(a, b) - dist_disk(halfplane_to_disk(a), halfplane_to_disk(b))) < 1e-9);

  // Log-form evaluation far from the origin.
  const double far = dist_halfplane(HalfPlanePoint(0.0, 0.0), HalfPlanePoint(0.0, -700.0));
  CHECK(std::isfinite(far));
  CHECK(far == doctest::Approx(700.0).epsilon(1e-14));
  const double far2 = dist_halfplane(HalfPlanePoint(5.0, -800.0), HalfPlanePoint(-5.0, -800.0));
  // 2 asinh(5 e^800) ~ 2 (log 10 + 800)
  CHECK(far2 == doctest::Approx(2.0 * (std::log(10.0) + 800.0)).epsilon(1e-14));
}

TEST_CASE("chart consistency of the two metrics") {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 1000; ++k) {
    const DiskPoint z = random_disk(rng, 1.0 - 1e-6);
    const DiskPoint w = random_disk(rng, 1.0 - 1e-6);
    const HalfPlanePoint pz = disk_to_halfplane(z);
    const HalfPlanePoint pw = disk_to_halfplane(w);
    const double dh = dist_halfplane(pz, pw);
    CHECK(std::abs(dist_disk(z, w) - dh) < 1e-9 * std::max(1.0, dh));
    if (dh < 20.0) CHECK(std::abs(halfplane_metric_log_ratio(as_complex(pz), as_complex(pw)) - dh) < 1e-9);
  }
}

TEST_CASE("rho_minus_log_im") {
  CHECK(rho_minus_log_im(HalfPlanePoint{}) == doctest::Approx(0.0));
  CHECK(std::abs(rho_minus_log_im(HalfPlanePoint(3.0, -30.0)) - std::log(10.0)) < 1e-6);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> w(-20.0, 5.0);
  for (int k = 0; k < 100; ++k) {
    const HalfPlanePoint p(u(rng), w(rng));
    CHECK(dist_to_origin(p) >= -p.w() - 1e-12);
    CHECK(rho_minus_log_im(p) == doctest::Approx(dist_to_origin(p) + p.w()).epsilon(1e-9));
    if (p.w() <= 0.0) CHECK(rho_minus_log_im(p) >= 0.0);
  }
}

TEST_CASE("gamma maps 0 to z0 and fixes the boundary point 1") {
  const MoebiusMap id = gamma(DiskPoint{});
  CHECK(std::abs(id.a() - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(id.c()) < 1e-15);

  const DiskPoint z0(0.2, -0.7);
  const MoebiusMap g = gamma(z0);
  CHECK(std::abs(apply(g, DiskPoint{}).z() - z0.z()) < 1e-12);
  CHECK(apply(g, BoundaryPoint(0.0)) == BoundaryPoint(0.0));
  CHECK(in_aff(g));
  CHECK(std::abs(std::norm(g.a()) - std::norm(g.c()) - 1.0) < 1e-12);
}

TEST_CASE("gamma agrees with the half-plane affine map") {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 50; ++k) {
    const DiskPoint z0 = random_disk(rng, 0.9);
    check_same_action(gamma(z0), to_moebius(affine_gamma(disk_to_halfplane(z0))), rng, 1e-12);
  }
}

TEST_CASE("apply and compose") {
  std::mt19937_64 rng(23);
  const DiskPoint z(0.1, 0.5);
  CHECK(std::abs(apply(MoebiusMap::identity(), z).z() - z.z()) == 0.0);

  for (int k = 0; k < 1000; ++k) {
    const MoebiusMap g = random_moebius(rng);
    const DiskPoint p = random_disk(rng, 0.999);
    CHECK(std::norm(apply(g, p).z()) < 1.0);
    CHECK(std::abs(apply(compose(g, inverse(g)), p).z() - p.z()) < 1e-12);
  }

  const MoebiusMap g = random_moebius(rng);
  const MoebiusMap h = random_moebius(rng);
  const MoebiusMap f = random_moebius(rng);
  check_same_action(compose(g, MoebiusMap::identity()), g, rng, 1e-14);
  for (int k = 0; k < 100; ++k) {
    const DiskPoint p = random_disk(rng, 0.9);
    CHECK(std::abs(apply(compose(g, h), p).z() - apply(g, apply(h, p)).z()) < 1e-10);
  }
  check_same_action(compose(compose(g, h), f), compose(g, compose(h, f)), rng, 1e-10);
  check_same_action(inverse(compose(g, h)), compose(inverse(h), inverse(g)), rng, 1e-10);
}

TEST_CASE("Aff is closed under compose and inverse") {
  std::mt19937_64 rng(29);
  for (int k = 0; k < 200; ++k) {
    const MoebiusMap g = gamma(random_disk(rng, 0.9));
    const MoebiusMap h = gamma(random_disk(rng, 0.9));
    CHECK(in_aff(compose(g, h), 1e-10));
    CHECK(in_aff(inverse(g), 1e-10));
  }
  CHECK_FALSE(in_aff(MoebiusMap::rotation(0.3)));
}

TEST_CASE("group word lr equals sequential application") {
  const DiskPoint zl(0.3, -0.2);
  const DiskPoint zr(-0.4, 0.5);
  const MoebiusMap g_l = gamma(zl);
  const MoebiusMap g_r = gamma(zr);
  const MoebiusMap word = compose(g_l, g_r);
  // Two-step application: first g_r, then g_l.
  const DiskPoint step1 = apply(g_r, DiskPoint{});
  const DiskPoint step2 = apply(g_l, step1);
  CHECK(std::abs(apply(word, DiskPoint{}).z() - step2.z()) < 1e-12);
}

TEST_CASE("affine maps compose like their Moebius images") {
  const AffineMap a(0.4, -1.3);
  const AffineMap b(-2.0, 0.7);
  std::mt19937_64 rng(31);
  check_same_action(to_moebius(compose(a, b)), compose(to_moebius(a), to_moebius(b)), rng, 1e-12);
  check_same_action(to_moebius(inverse(a)), inverse(to_moebius(a)), rng, 1e-12);
  const HalfPlanePoint p(0.3, -0.4);
  const HalfPlanePoint back = apply(inverse(a), apply(a, p));
  CHECK(back.u() == doctest::Approx(p.u()).epsilon(1e-14));
  CHECK(back.w() == doctest::Approx(p.w()).epsilon(1e-14));
  CHECK(in_aff(to_moebius(a)));
}

TEST_CASE("poisson kernel") {
  for (double phi : {-3.0, -1.0, 0.0, 2.5}) CHECK(poisson_kernel(DiskPoint{}, BoundaryPoint(phi)) == doctest::Approx(1.0).epsilon(1e-14));

  auto quadrature = [](const DiskPoint& z0) {
    constexpr int n = 4096;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += poisson_kernel(z0, BoundaryPoint(-kPi + 2.0 * kPi * k / n));
    return s / n;
  };
  CHECK(std::abs(quadrature(DiskPoint(0.5, 0.0)) - 1.0) < 1e-8);
  std::mt19937_64 rng(37);
  for (int k = 0; k < 10; ++k) CHECK(std::abs(quadrature(random_disk(rng, 0.9)) - 1.0) < 1e-8);

  const DiskPoint z0(0.5, 0.0);
  CHECK(poisson_kernel(z0, BoundaryPoint(0.0)) == doctest::Approx(3.0).epsilon(1e-14));
  for (double phi = -3.0; phi < 3.1; phi += 0.1) CHECK(poisson_kernel(z0, BoundaryPoint(phi)) <= 3.0 + 1e-12);
}

TEST_CASE("arc harmonic measure matches quadrature of the kernel") {
  const DiskPoint z0(0.5, 0.0);
  for (double lo : {-kPi, -1.0, 0.3, 2.5}) {
    const double width = 0.7;
    constexpr int n = 20000;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += poisson_kernel(z0, BoundaryPoint(lo + width * (k + 0.5) / n));
    const double quad = s * width / n / (2.0 * kPi);
    CHECK(arc_harmonic_measure(z0, lo, lo + width) == doctest::Approx(quad).epsilon(1e-7));
  }
  CHECK(arc_harmonic_measure(z0, -kPi, kPi) == 1.0);
  CHECK(arc_harmonic_measure(DiskPoint{}, 0.0, 1.0) == doctest::Approx(1.0 / (2.0 * kPi)));
}

TEST_CASE("radial projection") {
  CHECK(radial_projection(DiskPoint{}).angle() == 0.0);
  CHECK(radial_projection(DiskPoint(std::polar(0.3, 2.0))).angle() == doctest::Approx(2.0));

  std::mt19937_64 rng(41);
  for (int k = 0; k < 200; ++k) {
    const DiskPoint z = random_disk(rng);
    const double theta = 0.01 * k - 1.0;
    const BoundaryPoint rotated = radial_projection(apply(MoebiusMap::rotation(theta), z));
    CHECK(rotated == BoundaryPoint(radial_projection(z).angle() + theta));
    // The log-chart projection agrees with the disk one.
    const double a = radial_projection(disk_to_halfplane(z)).angle();
    CHECK(std::abs(std::remainder(a - radial_projection(z).angle(), 2.0 * kPi)) < 1e-9);
  }
  // Deep toward the real axis the angle is still defined: u = 1 maps to -i.
  CHECK(radial_projection(HalfPlanePoint(1.0, -700.0)).angle() == doctest::Approx(-kPi / 2));
  CHECK(radial_projection(HalfPlanePoint(0.0, 700.0)).angle() == doctest::Approx(0.0));
}

TEST_CASE("comparison ceilings") {
  CHECK(psi(1.0) == 1.0);
  CHECK(psi(0.25) == doctest::Approx(0.125));
  CHECK(psi(4.0) == doctest::Approx(2.0));

  double prev = heat_tail_bound(0.0, 1.0);
  for (int r = 1; r <= 20; ++r) {
    const double cur = heat_tail_bound(r, 1.0);
    CHECK(cur < prev);
    CHECK(cur > 0.0);
    prev = cur;
  }
  CHECK(std::isfinite(heat_tail_bound(0.0, 1e-3)));
  CHECK(max_excursion_bound(0.5) == doctest::Approx(BoundConstants{}.excursion));
  CHECK(max_excursion_bound(0.5, {1.0, 3.0}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(heat_tail_bound(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(max_excursion_bound(0.0), DomainError);
}
