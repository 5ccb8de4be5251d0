#pragma once

// Branching hyperbolic Brownian motion. Every Yule-tree edge [v', v] carries
// an independent Brownian segment B^v started at the origin i; the particle
// on that edge sits at g_z B^v_s where z is the position reached at v' and
// g_z is the affine isometry sending i to z. Positions are kept in the
// logarithmic half-plane chart throughout.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "hypbbm/geometry.hpp"
#include "hypbbm/motion.hpp"
#include "hypbbm/yule.hpp"

namespace hypbbm {

struct RunConfig {
  double lambda = 1.0;
  double horizon = 0.0;
  std::vector<double> snapshot_times;  // sorted, within [0, horizon]
  HalfPlanePoint start;
  StepScheme scheme;
  std::uint64_t seed = 0;
  std::size_t particle_cap = kDefaultVertexCap;
  /// Record for every particle the grid maximum of rho(position, start)
  /// along its ancestral path. Costs one distance per step.
  bool track_path_max = false;

  void validate() const;
};

struct Particle {
  std::size_t vertex = 0;  // edge [v', v]
  double offset = 0.0;     // time since |v'|
  HalfPlanePoint position;
  double path_max = 0.0;   // only filled with track_path_max
};

struct Population {
  double t = 0.0;
  std::vector<Particle> particles;  // in address order

  std::size_t size() const noexcept { return particles.size(); }
};

struct RunResult {
  RunConfig config;
  YuleTree tree;
  /// B^v at the end of edge v, started from the origin; empty when the edge
  /// is cut by the horizon.
  std::vector<std::optional<HalfPlanePoint>> segment_end;
  /// Position of the process at vertex v.
  std::vector<std::optional<HalfPlanePoint>> vertex_position;
  std::vector<Population> snapshots;  // one per snapshot time

  NodeAddress address(const Particle& p) const { return tree.address(p.vertex); }
};

/// Simulates one replica. Throws PopulationCapExceeded past the cap.
RunResult run(const RunConfig& config);

enum class Pushforward { Identity, Radial, Vertical, Distance, RealPart };

using Atom = std::variant<HalfPlanePoint, BoundaryPoint, double>;

struct WeightedAtom {
  Atom value;
  double weight;
};

struct EmpiricalMeasure {
  std::vector<WeightedAtom> atoms;
  double total_weight = 0.0;
};

/// Uniform weights 1/N(t) on the image of each particle. Vertical is
/// -log Im, distance is rho(., origin), real part is Re in the half-plane.
EmpiricalMeasure empirical(const Population& pop, Pushforward pushforward,
                           const HalfPlanePoint& origin = {});
/// Weights e^{-lambda t} on particle positions.
EmpiricalMeasure lambda_measure(const Population& pop, double lambda);

/// A bounded functional of a particle's path, seen through its endpoint and
/// the grid maximum of rho(., start) along it.
struct PathFunctional {
  bool needs_path_max = false;
  std::function<double(const HalfPlanePoint& end, double path_max)> f;
};

struct ManyToOneEstimate {
  double lhs = 0.0;  // mean over BBM replicas of the population sum
  double lhs_se = 0.0;
  double rhs = 0.0;  // e^{lambda t} times the single-particle mean
  double rhs_se = 0.0;

  double combined_se() const;
  /// |lhs - rhs| in units of the combined standard error.
  double z_score() const;
};

struct ManyToOneConfig {
  double lambda = 1.0;
  double t = 1.0;
  std::size_t bbm_replicas = 1000;
  std::size_t single_replicas = 10000;
  std::uint64_t seed = 0;
  StepScheme scheme;
  HalfPlanePoint start;
  std::size_t workers = 1;
  /// Called from the worker with every finished BBM replica.
  std::function<void(std::size_t replica, const RunResult&)> on_replica;
};

ManyToOneEstimate many_to_one(const PathFunctional& f, const ManyToOneConfig& config);

/// G_v = g_{v_1} ... g_{v_k} along the path from the root to v, where
/// g_u is the boundary-1 stabilizer element sending the origin to the end
/// of segment B^u. Throws UnknownAddress when v's edge did not complete.
MoebiusMap group_element(const RunResult& result, const NodeAddress& v);
/// The same product kept in the half-plane chart.
AffineMap group_element_affine(const RunResult& result, const NodeAddress& v);

/// Seed of replica r under a base seed.
std::uint64_t replica_seed(std::uint64_t base, std::size_t replica) noexcept;

/// {replica, t, address, u, w, disk_re, disk_im} per particle.
void write_particles_jsonl(const RunResult& result, std::size_t replica, std::ostream& out);

inline constexpr const char* kSummaryHeader = "replica,t,N,martingale,max_dist,min_dist,mean_dist";
/// Rows of the summary CSV (no header) for each snapshot of one replica.
void write_summary_rows(const RunResult& result, std::size_t replica, std::ostream& out);

}  // namespace hypbbm
