#include "hypbbm/branching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "hypbbm/error.hpp"
#include "hypbbm/parallel.hpp"
#include "hypbbm/random.hpp"
#include "hypbbm/stats.hpp"

namespace hypbbm {

void RunConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda", "must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon", "must be >= 0");
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end())) {
    throw ValidationError("snapshots", "must be sorted");
  }
  for (double t : snapshot_times) {
    if (!(t >= 0.0) || t > horizon) throw ValidationError("snapshots", "must lie within [0, horizon]");
  }
  if (!(scheme.dt_max > 0.0)) throw ValidationError("dt", "must be > 0");
  if (particle_cap == 0) throw ValidationError("particle_cap", "must be >= 1");
}

namespace {

std::size_t sub_steps(double span, double dt_max) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / dt_max - 1e-9)));
}

}  // namespace

RunResult run(const RunConfig& config) {
  config.validate();
  RunResult result{config, sample_tree(config.lambda, config.horizon, config.seed, config.particle_cap),
                   {}, {}, {}};
  const YuleTree& tree = result.tree;
  const std::size_t n = tree.size();
  result.segment_end.assign(n, std::nullopt);
  result.vertex_position.assign(n, std::nullopt);
  result.snapshots.resize(config.snapshot_times.size());
  for (std::size_t k = 0; k < config.snapshot_times.size(); ++k) {
    result.snapshots[k].t = config.snapshot_times[k];
  }
  std::vector<double> vertex_path_max;
  if (config.track_path_max) vertex_path_max.assign(n, 0.0);

  const auto& times = config.snapshot_times;
  const double dt_max = config.scheme.dt_max;
  const UIntegration integ = config.scheme.u_integration;

  // Preorder guarantees the parent is done before its children.
  for (std::size_t i = 0; i < n; ++i) {
    const YuleVertex& v = tree.vertex(i);
    const bool is_root = v.parent == YuleVertex::kNone;
    const auto parent = static_cast<std::size_t>(v.parent);
    const HalfPlanePoint base = is_root ? config.start : *result.vertex_position[parent];
    const AffineMap lift = affine_gamma(base);
    const double s0 = tree.edge_start(i);
    const double s_end = std::min(v.birth, config.horizon);
    double path_max = config.track_path_max && !is_root ? vertex_path_max[parent] : 0.0;

    Walker local{HalfPlanePoint{}};
    RandomStream rs(derive_key(v.key, kMotionTag));
    auto position = [&] { return apply(lift, local.point()); };

    // Snapshots on this edge: s0 < t <= s_end, plus t = 0 on the root edge.
    auto k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), s0) - times.begin());
    if (is_root) {
      k = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), 0.0) - times.begin());
      for (; k < times.size() && times[k] == 0.0; ++k) {
        result.snapshots[k].particles.push_back({i, 0.0, config.start, 0.0});
      }
    }

    double now = s0;
    auto advance_to = [&](double target) {
      const double span = target - now;
      if (span <= 0.0) return;
      const std::size_t steps = sub_steps(span, dt_max);
      double done = 0.0;
      for (std::size_t j = 0; j < steps; ++j) {
        const double dt = j + 1 == steps ? span - done : dt_max;
        local.advance(dt, rs, integ);
        done += dt;
        if (config.track_path_max) path_max = std::max(path_max, dist_halfplane(position(), config.start));
      }
      now = target;
    };

    for (; k < times.size() && times[k] <= s_end; ++k) {
      advance_to(times[k]);
      result.snapshots[k].particles.push_back({i, times[k] - s0, position(), path_max});
    }
    advance_to(s_end);
    if (v.birth <= config.horizon) {
      result.segment_end[i] = local.point();
      result.vertex_position[i] = position();
      if (config.track_path_max) vertex_path_max[i] = path_max;
    }
  }
  return result;
}

EmpiricalMeasure empirical(const Population& pop, Pushforward pushforward, const HalfPlanePoint& origin) {
  if (pop.particles.empty()) throw DomainError("empirical measure of an empty population");
  EmpiricalMeasure m;
  const double weight = 1.0 / static_cast<double>(pop.size());
  m.atoms.reserve(pop.size());
  stats::CompensatedSum total;
  for (const Particle& p : pop.particles) {
    Atom atom;
    switch (pushforward) {
      case Pushforward::Identity: atom = p.position; break;
      case Pushforward::Radial: atom = radial_projection(p.position); break;
      case Pushforward::Vertical: atom = -p.position.w(); break;
      case Pushforward::Distance: atom = dist_halfplane(p.position, origin); break;
      case Pushforward::RealPart: atom = p.position.u(); break;
    }
    m.atoms.push_back({atom, weight});
    total.add(weight);
  }
  m.total_weight = total.value();
  return m;
}

EmpiricalMeasure lambda_measure(const Population& pop, double lambda) {
  if (pop.particles.empty()) throw DomainError("lambda measure of an empty population");
  EmpiricalMeasure m;
  const double weight = std::exp(-lambda * pop.t);
  m.atoms.reserve(pop.size());
  for (const Particle& p : pop.particles) m.atoms.push_back({p.position, weight});
  m.total_weight = static_cast<double>(pop.size()) * weight;
  return m;
}

double ManyToOneEstimate::combined_se() const { return std::hypot(lhs_se, rhs_se); }

double ManyToOneEstimate::z_score() const {
  const double se = combined_se();
  const double diff = std::abs(lhs - rhs);
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / se;
}

std::uint64_t replica_seed(std::uint64_t base, std::size_t replica) noexcept {
  return derive_key(base, 0x7265706c00000000ULL + replica);
}

ManyToOneEstimate many_to_one(const PathFunctional& f, const ManyToOneConfig& cfg) {
  if (cfg.bbm_replicas < 100 || cfg.single_replicas < 100) {
    throw DomainError("many-to-one needs at least 100 replicas per arm");
  }
  if (!(cfg.t > 0.0)) throw DomainError("many-to-one needs t > 0");

  std::vector<double> sums(cfg.bbm_replicas);
  const std::uint64_t bbm_base = derive_key(cfg.seed, 0xbb);
  parallel_for(cfg.bbm_replicas, cfg.workers, [&](std::size_t r) {
    RunConfig rc;
    rc.lambda = cfg.lambda;
    rc.horizon = cfg.t;
    rc.snapshot_times = {cfg.t};
    rc.start = cfg.start;
    rc.scheme = cfg.scheme;
    rc.seed = replica_seed(bbm_base, r);
    rc.track_path_max = f.needs_path_max;
    const RunResult res = run(rc);
    if (cfg.on_replica) cfg.on_replica(r, res);
    stats::CompensatedSum s;
    for (const Particle& p : res.snapshots.front().particles) s.add(f.f(p.position, p.path_max));
    sums[r] = s.value();
  });

  std::vector<double> singles(cfg.single_replicas);
  const std::uint64_t single_base = derive_key(cfg.seed, 0x51);
  parallel_for(cfg.single_replicas, cfg.workers, [&](std::size_t r) {
    RandomStream rs(replica_seed(single_base, r));
    const PathSummary ps = summarize_path(cfg.start, cfg.t, cfg.scheme, rs, f.needs_path_max);
    singles[r] = f.f(ps.end, ps.max_distance);
  });

  const auto lhs = stats::mean_se(sums);
  const auto rhs = stats::mean_se(singles);
  const double growth = std::exp(cfg.lambda * cfg.t);
  return {lhs.mean, lhs.se, growth * rhs.mean, growth * rhs.se};
}

namespace {

std::vector<std::size_t> path_to(const RunResult& result, const NodeAddress& v) {
  const auto idx = result.tree.find(v);
  if (!idx || !result.segment_end[*idx]) {
    throw UnknownAddress("vertex '" + v.word() + "' was not reached before the horizon");
  }
  std::vector<std::size_t> path;
  for (auto cur = static_cast<std::int32_t>(*idx); cur != YuleVertex::kNone;
       cur = result.tree.vertex(static_cast<std::size_t>(cur)).parent) {
    path.push_back(static_cast<std::size_t>(cur));
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

AffineMap group_element_affine(const RunResult& result, const NodeAddress& v) {
  AffineMap g;
  for (std::size_t i : path_to(result, v)) g = compose(g, affine_gamma(*result.segment_end[i]));
  return g;
}

MoebiusMap group_element(const RunResult& result, const NodeAddress& v) {
  return to_moebius(group_element_affine(result, v));
}

void write_particles_jsonl(const RunResult& result, std::size_t replica, std::ostream& out) {
  for (const Population& pop : result.snapshots) {
    for (const Particle& p : pop.particles) {
      const Complex z = disk_coordinates(p.position);
      nlohmann::json rec;
      rec["replica"] = replica;
      rec["t"] = pop.t;
      rec["address"] = result.address(p).word();
      rec["u"] = p.position.u();
      rec["w"] = p.position.w();
      rec["disk_re"] = z.real();
      rec["disk_im"] = z.imag();
      out << rec.dump() << '\n';
    }
  }
}

void write_summary_rows(const RunResult& result, std::size_t replica, std::ostream& out) {
  char buf[256];
  for (const Population& pop : result.snapshots) {
    double mx = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    stats::CompensatedSum sum;
    for (const Particle& p : pop.particles) {
      const double d = dist_halfplane(p.position, result.config.start);
      mx = std::max(mx, d);
      mn = std::min(mn, d);
      sum.add(d);
    }
    const auto count = static_cast<double>(pop.size());
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%.17g,%.17g,%.17g,%.17g\n", replica, pop.t, pop.size(),
                  count * std::exp(-result.config.lambda * pop.t), mx, mn, sum.value() / count);
    out << buf;
  }
}

}  // namespace hypbbm
