#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hypbbm/branching.hpp"
#include "hypbbm/error.hpp"
#include "hypbbm/estimators.hpp"
#include "hypbbm/stats.hpp"

using namespace hypbbm;

namespace {

constexpr double kAlpha = 1e-3;

RunConfig config(double lambda, double horizon, std::vector<double> times, std::uint64_t seed) {
  RunConfig c;
  c.lambda = lambda;
  c.horizon = horizon;
  c.snapshot_times = std::move(times);
  c.seed = seed;
  return c;
}

double distance(const HalfPlanePoint& a, const HalfPlanePoint& b) { return dist_halfplane(a, b); }

// Fraction of replicas with a particle within distance 2 of i, per snapshot.
std::vector<double> occupation(double lambda, const std::vector<double>& times, std::size_t replicas,
                               std::uint64_t base) {
  std::vector<double> hits(times.size(), 0.0);
  for (std::size_t r = 0; r < replicas; ++r) {
    const RunResult res = run(config(lambda, times.back(), times, replica_seed(base, r)));
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (visits_ball(res.snapshots[k], HalfPlanePoint{}, 2.0)) hits[k] += 1.0;
    }
  }
  for (double& h : hits) h /= static_cast<double>(replicas);
  return hits;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(run(config(0.0, 1.0, {}, 1)), ValidationError);
  CHECK_THROWS_AS(run(config(1.0, 1.0, {2.0}, 1)), ValidationError);
  CHECK_THROWS_AS(run(config(1.0, 1.0, {0.5, 0.25}, 1)), ValidationError);
  try {
    run(config(-1.0, 1.0, {}, 1));
  } catch (const ValidationError& e) {
    CHECK(e.key() == "lambda");
  }
  RunConfig capped = config(1.0, 20.0, {20.0}, 1);
  capped.particle_cap = 1000;
  CHECK_THROWS_AS(run(capped), PopulationCapExceeded);
}

TEST_CASE("horizon zero leaves the start point") {
  RunConfig c = config(1.0, 0.0, {0.0}, 2);
  c.start = HalfPlanePoint{0.5, -1.0};
  const RunResult res = run(c);
  REQUIRE(res.snapshots.size() == 1);
  REQUIRE(res.snapshots[0].size() == 1);
  CHECK(res.snapshots[0].particles[0].position == c.start);
}

TEST_CASE("snapshot counts match the tree cross sections") {
  const RunResult res = run(config(1.0, 4.0, {0.0, 1.0, 2.5, 4.0}, 3));
  for (const Population& pop : res.snapshots) {
    const CrossSection cs = cross_section(res.tree, pop.t);
    REQUIRE(pop.size() == cs.count());
    for (std::size_t j = 0; j < pop.size(); ++j) {
      CHECK(pop.particles[j].vertex == cs.elements[j].vertex);
      CHECK(pop.particles[j].offset == doctest::Approx(cs.elements[j].offset).epsilon(1e-12));
    }
  }
}

TEST_CASE("snapshot counts have the geometric law") {
  std::vector<double> observed(11, 0.0);
  std::vector<double> sizes;
  for (std::size_t r = 0; r < 10000; ++r) {
    const RunResult res = run(config(1.0, 1.0, {1.0}, replica_seed(4, r)));
    const std::size_t n = res.snapshots[0].size();
    observed[std::min<std::size_t>(n, 11) - 1] += 1.0;
    sizes.push_back(static_cast<double>(n));
  }
  std::vector<double> probs(11);
  double head = 0.0;
  for (std::size_t n = 1; n <= 10; ++n) head += probs[n - 1] = population_pmf(1.0, 1.0, n);
  probs[10] = 1.0 - head;
  CHECK(stats::chi_square_statistic(observed, probs) < stats::chi_square_critical(10.0, kAlpha));
  const auto ms = stats::mean_se(sizes);
  CHECK(std::abs(ms.mean - std::exp(1.0)) < 3.0 * ms.se);
}

TEST_CASE("a degenerate tree moves like a single particle") {
  constexpr std::size_t n = 4000;
  std::vector<double> bbm_w;
  std::vector<double> bbm_u;
  std::vector<double> single_w;
  std::vector<double> single_u;
  for (std::size_t r = 0; r < n; ++r) {
    const RunResult res = run(config(1e-6, 4.0, {4.0}, replica_seed(5, r)));
    REQUIRE(res.snapshots[0].size() == 1);
    bbm_w.push_back(res.snapshots[0].particles[0].position.w());
    bbm_u.push_back(res.snapshots[0].particles[0].position.u());
    RandomStream rs(replica_seed(6, r));
    const HalfPlanePoint end = sample_path({}, 4.0, {}, rs).end();
    single_w.push_back(end.w());
    single_u.push_back(end.u());
  }
  // Asymptotic two-sample critical value for equal sizes.
  const double crit = std::sqrt(-0.5 * std::log(kAlpha / 2.0)) * std::sqrt(2.0 / static_cast<double>(n));
  CHECK(stats::ks_two_sample(bbm_w, single_w) < crit);
  CHECK(stats::ks_two_sample(bbm_u, single_u) < crit);
  CHECK(stats::ks_statistic(bbm_w, [](double x) { return stats::normal_cdf((x + 2.0) / 2.0); }) <
        stats::ks_critical_value(n, kAlpha));
}

TEST_CASE("runs are deterministic per seed") {
  const RunResult a = run(config(1.0, 3.0, {1.0, 3.0}, 7));
  const RunResult b = run(config(1.0, 3.0, {1.0, 3.0}, 7));
  std::ostringstream sa;
  std::ostringstream sb;
  write_particles_jsonl(a, 0, sa);
  write_particles_jsonl(b, 0, sb);
  CHECK(sa.str() == sb.str());
  std::ostringstream summary;
  write_summary_rows(a, 3, summary);
  CHECK(summary.str().rfind("3,1,", 0) == 0);

  // A snapshot added later in time does not perturb earlier ones.
  const RunResult c = run(config(1.0, 3.0, {1.0}, 7));
  REQUIRE(c.snapshots[0].size() == a.snapshots[0].size());
  for (std::size_t j = 0; j < c.snapshots[0].size(); ++j) {
    CHECK(c.snapshots[0].particles[j].position == a.snapshots[0].particles[j].position);
  }
}

TEST_CASE("empirical measures") {
  const RunResult single = run(config(1.0, 0.0, {0.0}, 8));
  const EmpiricalMeasure point = empirical(single.snapshots[0], Pushforward::Identity);
  REQUIRE(point.atoms.size() == 1);
  CHECK(std::get<HalfPlanePoint>(point.atoms[0].value) == HalfPlanePoint{});
  CHECK(point.total_weight == 1.0);

  const RunResult res = run(config(1.0, 4.0, {4.0}, 9));
  const Population& pop = res.snapshots[0];
  for (Pushforward pf : {Pushforward::Identity, Pushforward::Radial, Pushforward::Vertical, Pushforward::Distance,
                         Pushforward::RealPart}) {
    const EmpiricalMeasure m = empirical(pop, pf);
    CHECK(std::abs(m.total_weight - 1.0) < 1e-12);
    for (const auto& a : m.atoms) CHECK(a.weight == 1.0 / static_cast<double>(pop.size()));
  }

  const EmpiricalMeasure lam = lambda_measure(pop, 1.0);
  const EmpiricalMeasure mu = empirical(pop, Pushforward::Identity);
  const double martingale = static_cast<double>(pop.size()) * std::exp(-4.0);
  CHECK(lam.total_weight == doctest::Approx(martingale).epsilon(1e-12));
  for (std::size_t j = 0; j < pop.size(); ++j) {
    CHECK(std::abs(lam.atoms[j].weight - martingale * mu.atoms[j].weight) < 1e-12);
  }
  CHECK(lambda_measure(single.snapshots[0], 1.0).total_weight == 1.0);

  Population synthetic{1.0, {}};
  for (int j = 0; j < 5; ++j) synthetic.particles.push_back({0, 0.0, HalfPlanePoint{0.0, -3.0}, 0.0});
  const EmpiricalMeasure dist = empirical(synthetic, Pushforward::Distance);
  for (const auto& a : dist.atoms) CHECK(std::get<double>(a.value) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(empirical(Population{}, Pushforward::Identity), DomainError);
}

TEST_CASE("Lambda has mean total mass one") {
  std::vector<double> mass;
  for (std::size_t r = 0; r < 10000; ++r) {
    const RunResult res = run(config(1.0, 3.0, {3.0}, replica_seed(10, r)));
    mass.push_back(lambda_measure(res.snapshots[0], 1.0).total_weight);
  }
  const auto ms = stats::mean_se(mass);
  CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.se);
}

TEST_CASE("many-to-one") {
  ManyToOneConfig mc;
  mc.lambda = 0.5;
  mc.t = 2.0;
  mc.bbm_replicas = 2000;
  mc.single_replicas = 10000;
  mc.seed = 11;

  const auto ones = many_to_one({false, [](const HalfPlanePoint&, double) { return 1.0; }}, mc);
  CHECK(ones.rhs == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(ones.rhs_se == 0.0);
  CHECK(std::abs(ones.lhs - std::exp(1.0)) < 3.0 * ones.lhs_se);

  const auto ball = many_to_one(
      {false, [](const HalfPlanePoint& p, double) { return distance(p, HalfPlanePoint{}) <= 1.0 ? 1.0 : 0.0; }}, mc);
  INFO("ball z = " << ball.z_score());
  CHECK(ball.z_score() < 3.0);

  const auto tube = many_to_one({true, [](const HalfPlanePoint&, double m) { return m <= 2.0 ? 1.0 : 0.0; }}, mc);
  INFO("tube z = " << tube.z_score());
  CHECK(tube.z_score() < 3.0);

  mc.bbm_replicas = 50;
  CHECK_THROWS_AS(many_to_one({false, [](const HalfPlanePoint&, double) { return 1.0; }}, mc), DomainError);
}

TEST_CASE("path maxima dominate the current distance") {
  RunConfig c = config(1.0, 3.0, {1.0, 3.0}, 12);
  c.track_path_max = true;
  const RunResult res = run(c);
  for (const Population& pop : res.snapshots) {
    for (const Particle& p : pop.particles) CHECK(p.path_max >= distance(p.position, c.start) - 1e-12);
  }
  // Path maxima never decrease along an ancestral line.
  for (const Particle& late : res.snapshots[1].particles) {
    for (const Particle& early : res.snapshots[0].particles) {
      if (res.address(early).is_prefix_of(res.address(late)) || res.address(early) == res.address(late)) {
        CHECK(late.path_max >= early.path_max);
      }
    }
  }
}

TEST_CASE("group elements") {
  RunConfig c = config(1.0, 4.0, {4.0}, 13);
  const RunResult res = run(c);
  REQUIRE(res.segment_end[0].has_value());

  // The root word is a single factor.
  const AffineMap g_root = group_element_affine(res, NodeAddress::root());
  const AffineMap expect_root = affine_gamma(*res.segment_end[0]);
  CHECK(g_root.shift() == expect_root.shift());
  CHECK(g_root.log_scale() == expect_root.log_scale());

  std::size_t depth3 = 0;
  for (std::size_t i = 0; i < res.tree.size(); ++i) {
    if (!res.segment_end[i]) continue;
    const NodeAddress v = res.tree.address(i);
    const AffineMap g = group_element_affine(res, v);
    const HalfPlanePoint at = apply(g, HalfPlanePoint{});
    CHECK(std::abs(at.u() - res.vertex_position[i]->u()) < 1e-8);
    CHECK(std::abs(at.w() - res.vertex_position[i]->w()) < 1e-8);

    // Recursion G_{vL} = G_v o g_{vL}.
    if (const auto l = res.tree.find(v.child(Side::Left)); l && res.segment_end[*l]) {
      const AffineMap gl = compose(g, affine_gamma(*res.segment_end[*l]));
      const AffineMap direct = group_element_affine(res, v.child(Side::Left));
      CHECK(gl.shift() == doctest::Approx(direct.shift()).epsilon(1e-12));
      CHECK(gl.log_scale() == doctest::Approx(direct.log_scale()).epsilon(1e-12));
    }

    if (v.length() == 3) {
      ++depth3;
      // Construction (A): position at v is G_{v'} applied to the fresh BM
      // endpoint, here computed with Moebius products in the disk chart.
      MoebiusMap prod;
      for (std::size_t k = 0; k < 3; ++k) {
        const auto j = res.tree.find(NodeAddress(v.word().substr(0, k)));
        prod = compose(prod, gamma(halfplane_to_disk(*res.segment_end[*j])));
      }
      const DiskPoint z = apply(prod, halfplane_to_disk(*res.segment_end[i]));
      const DiskPoint expect = halfplane_to_disk(*res.vertex_position[i]);
      CHECK(std::abs(z.re() - expect.re()) < 1e-8);
      CHECK(std::abs(z.im() - expect.im()) < 1e-8);
      // The Moebius form of G_v agrees with the affine product.
      const DiskPoint probe(0.3, -0.2);
      const DiskPoint a = apply(group_element(res, v), probe);
      const DiskPoint b = apply(compose(prod, gamma(halfplane_to_disk(*res.segment_end[i]))), probe);
      CHECK(std::abs(a.re() - b.re()) < 1e-8);
      CHECK(std::abs(a.im() - b.im()) < 1e-8);
    }
  }
  CHECK(depth3 > 0);
  CHECK_THROWS_AS(group_element(res, NodeAddress("LLLLLLLLLLLLLLLLLLLLLLLLLLLLLL")), UnknownAddress);

  // With a general start, gamma of the start is prepended.
  c.start = HalfPlanePoint{0.7, 0.4};
  const RunResult moved = run(c);
  const NodeAddress v = moved.tree.address(0);
  const HalfPlanePoint at = apply(compose(affine_gamma(c.start), group_element_affine(moved, v)), HalfPlanePoint{});
  CHECK(std::abs(at.u() - moved.vertex_position[0]->u()) < 1e-12);
  CHECK(std::abs(at.w() - moved.vertex_position[0]->w()) < 1e-12);
}

TEST_CASE("runs are equivariant under the start isometry") {
  for (const HalfPlanePoint z0 : {HalfPlanePoint{0.5, 0.0}, HalfPlanePoint{-2.0, 1.5}, HalfPlanePoint{0.1, -3.0}}) {
    RunConfig c = config(1.0, 5.0, {2.0, 5.0}, 14);
    const RunResult base = run(c);
    c.start = z0;
    const RunResult moved = run(c);
    const AffineMap g = affine_gamma(z0);
    for (std::size_t k = 0; k < base.snapshots.size(); ++k) {
      REQUIRE(base.snapshots[k].size() == moved.snapshots[k].size());
      double worst = 0.0;
      for (std::size_t j = 0; j < base.snapshots[k].size(); ++j) {
        const HalfPlanePoint image = apply(g, base.snapshots[k].particles[j].position);
        const HalfPlanePoint direct = moved.snapshots[k].particles[j].position;
        worst = std::max({worst, std::abs(image.u() - direct.u()), std::abs(image.w() - direct.w())});
      }
      CHECK(worst < 1e-8);
    }
  }
}

TEST_CASE("snapshot particles are distinct") {
  const RunResult res = run(config(1.0, 6.0, {0.5, 3.0, 6.0}, 15));
  for (const Population& pop : res.snapshots) {
    std::set<std::pair<double, double>> seen;
    for (const Particle& p : pop.particles) seen.insert({p.position.u(), p.position.w()});
    CHECK(seen.size() == pop.size());
  }
}

TEST_CASE("compact sets are vacated in the transient regime") {
  const auto f = occupation(0.05, {10.0, 25.0, 40.0}, 500, 16);
  INFO("fractions " << f[0] << " " << f[1] << " " << f[2]);
  CHECK(f[0] > f[1]);
  CHECK(f[1] > f[2]);
}

TEST_CASE("compact sets keep being visited in the recurrent regime") {
  const auto f = occupation(0.25, {10.0, 20.0, 30.0}, 500, 17);
  INFO("fractions " << f[0] << " " << f[1] << " " << f[2]);
  for (double x : f) CHECK(x > 0.5);
}
