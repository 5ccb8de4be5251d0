#include "hypbbm/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "hypbbm/error.hpp"
#include "hypbbm/parallel.hpp"
#include "hypbbm/stats.hpp"

namespace hypbbm {

namespace {

constexpr double kAlpha = 1e-3;

constexpr std::pair<ExperimentKind, std::string_view> kKinds[] = {
    {ExperimentKind::PopulationLaw, "population_law"}, {ExperimentKind::SingleBm, "single_bm"},
    {ExperimentKind::ManyToOne, "many_to_one"},        {ExperimentKind::Rates, "rates"},
    {ExperimentKind::LogCorrection, "log_correction"}, {ExperimentKind::Clt, "clt"},
    {ExperimentKind::Escape, "escape"},                {ExperimentKind::Boundary, "boundary"},
    {ExperimentKind::Dimension, "dimension"},          {ExperimentKind::RegimeProbe, "regime_probe"},
};

constexpr std::pair<Functional, std::string_view> kFunctionals[] = {
    {Functional::One, "one"}, {Functional::Ball, "ball"}, {Functional::PathMax, "path_max"}};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& key, std::string_view v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ValidationError(key, "expected a finite number, got '" + std::string(v) + "'");
  }
  return x;
}

std::uint64_t parse_unsigned(const std::string& key, std::string_view v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return x;
}

std::vector<double> parse_list(const std::string& key, std::string_view v) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_double(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ValidationError(key, "empty list");
  return out;
}

bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(key, "expected true or false");
}

// Integer times in [first, t], plus t itself.
std::vector<double> integer_grid(double first, double t) {
  std::vector<double> out;
  for (double s = first; s <= t + 1e-12; s += 1.0) out.push_back(s);
  if (out.empty() || out.back() < t - 1e-12) out.push_back(t);
  return out;
}

std::vector<double> default_snapshots(ExperimentKind kind, double t) {
  switch (kind) {
    case ExperimentKind::Rates:
    case ExperimentKind::Escape: return integer_grid(1.0, t);
    case ExperimentKind::LogCorrection: return integer_grid(3.0, t);
    case ExperimentKind::RegimeProbe: return {t / 4.0, 5.0 * t / 8.0, t};
    default: return {t};
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw InsufficientData("median of an empty sample");
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid)));
}

// Per-replica output slots, concatenated in replica order at the end.
struct Slots {
  std::vector<std::string> summary;
  std::vector<std::string> particles;

  explicit Slots(std::size_t n) : summary(n), particles(n) {}

  void record(std::size_t r, const RunResult& res, bool dump) {
    std::ostringstream os;
    write_summary_rows(res, r, os);
    summary[r] = os.str();
    if (dump) {
      std::ostringstream ps;
      write_particles_jsonl(res, r, ps);
      particles[r] = ps.str();
    }
  }

  void flush(RunRecord& rec) const {
    rec.summary_csv = std::string(kSummaryHeader) + "\n";
    for (const auto& s : summary) rec.summary_csv += s;
    for (const auto& s : particles) rec.particles_jsonl += s;
  }
};

RunConfig replica_config(const ExperimentSpec& spec, std::size_t r) {
  RunConfig c = spec.config;
  c.seed = replica_seed(spec.config.seed, r);
  return c;
}

// Runs every replica and hands the result to fn(r, result) on the worker.
template <typename Fn>
void for_each_replica(const ExperimentSpec& spec, const ExecuteOptions& opt, Slots& slots, Fn fn) {
  parallel_for(spec.replicas, opt.workers, [&](std::size_t r) {
    const RunResult res = run(replica_config(spec, r));
    slots.record(r, res, opt.dump_particles);
    fn(r, res);
  });
}

void add(RunRecord& rec, std::string name, TestReport report) { rec.reports.push_back({std::move(name), std::move(report)}); }

// Chi-square of counts against the geometric law on {1..10, >10}.
double geometric_chi_square(const std::vector<std::size_t>& counts, double lambda, double t) {
  std::vector<double> observed(11, 0.0);
  for (std::size_t n : counts) observed[std::min<std::size_t>(n, 11) - 1] += 1.0;
  std::vector<double> probs(11, 0.0);
  double head = 0.0;
  for (std::size_t n = 1; n <= 10; ++n) head += probs[n - 1] = population_pmf(lambda, t, n);
  probs[10] = 1.0 - head;
  return stats::chi_square_statistic(observed, probs);
}

void run_population_law(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  const auto& times = spec.config.snapshot_times;
  const double lambda = spec.config.lambda;
  std::vector<std::vector<std::size_t>> counts(spec.replicas);
  Slots slots(spec.replicas);
  parallel_for(spec.replicas, opt.workers, [&](std::size_t r) {
    const YuleTree tree =
        sample_tree(lambda, spec.config.horizon, replica_seed(spec.config.seed, r), spec.config.particle_cap);
    std::string rows;
    char buf[128];
    for (double t : times) {
      const std::size_t n = cross_section(tree, t).count();
      counts[r].push_back(n);
      // Tree-only kind: no positions, so the distance columns stay empty.
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%.17g,,,\n", r, t, n,
                    static_cast<double>(n) * std::exp(-lambda * t));
      rows += buf;
    }
    slots.summary[r] = rows;
  });
  slots.flush(rec);

  const double t = times.back();
  std::vector<std::size_t> final_counts;
  for (const auto& c : counts) final_counts.push_back(c.back());
  const double chi2 = geometric_chi_square(final_counts, lambda, t);
  add(rec, "geometric_law",
      TestReport::at_most(chi2, stats::chi_square_critical(10.0, kAlpha), spec.replicas,
                          "chi-square of N(t) against the geometric law on {1..10, >10}, significance 1e-3"));

  std::vector<double> sizes(final_counts.begin(), final_counts.end());
  const auto ms = stats::mean_se(sizes);
  add(rec, "mean_population",
      TestReport::at_most(std::abs(ms.mean - std::exp(lambda * t)) / ms.se, 3.0, spec.replicas,
                          "|mean N(t) - exp(lambda t)| in standard errors"));

  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  std::vector<double> observed(11, 0.0);
  for (std::size_t n : final_counts) observed[std::min<std::size_t>(n, 11) - 1] += 1.0;
  double head = 0.0;
  for (std::size_t n = 1; n <= 11; ++n) {
    const double p = n <= 10 ? population_pmf(lambda, t, n) : 1.0 - head;
    head += p;
    csv << (n <= 10 ? std::to_string(n) : std::string(">10")) << ',' << fmt(observed[n - 1]) << ','
        << fmt(p * static_cast<double>(spec.replicas)) << '\n';
  }
  rec.kind_csv = csv.str();

  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> m;
    for (const auto& c : counts) m.push_back(static_cast<double>(c[k]) * std::exp(-lambda * times[k]));
    const auto mm = stats::mean_se(m);
    const double z = mm.se > 0.0 ? std::abs(mm.mean - 1.0) / mm.se : std::abs(mm.mean - 1.0);
    add(rec, "martingale_mean_t" + fmt(times[k]),
        TestReport::at_most(z, 3.0, spec.replicas, "|mean N(t) exp(-lambda t) - 1| in standard errors"));
    rec.estimates["martingale_mean"].push_back({{"t", times[k]}, {"mean", mm.mean}, {"se", mm.se}});
  }
}

void run_single_bm(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  const double t = spec.config.horizon;
  const HalfPlanePoint start = spec.config.start;
  const bool track = spec.config.track_path_max;
  std::vector<PathSummary> paths(spec.replicas);
  const std::uint64_t base = derive_key(spec.config.seed, 0x51);
  parallel_for(spec.replicas, opt.workers, [&](std::size_t r) {
    RandomStream rs(replica_seed(base, r));
    paths[r] = summarize_path(start, t, spec.config.scheme, rs, track);
  });

  std::ostringstream summary;
  std::ostringstream csv;
  std::ostringstream particles;
  summary << kSummaryHeader << '\n';
  csv << kind_csv_header(spec.kind) << '\n';
  std::vector<double> vertical;
  std::vector<double> ends;
  std::vector<double> maxima;
  stats::CompensatedSum rate;
  char buf[256];
  for (std::size_t r = 0; r < spec.replicas; ++r) {
    const HalfPlanePoint end = paths[r].end;
    const double d = dist_halfplane(end, start);
    std::snprintf(buf, sizeof buf, "%zu,%.17g,1,1,%.17g,%.17g,%.17g\n", r, t, d, d, d);
    summary << buf;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r, end.u(), end.w(), d,
                  track ? paths[r].max_distance : d);
    csv << buf;
    if (opt.dump_particles) {
      const Complex z = disk_coordinates(end);
      nlohmann::json j = {{"replica", r}, {"t", t},          {"address", ""},    {"u", end.u()},
                          {"w", end.w()}, {"disk_re", z.real()}, {"disk_im", z.imag()}};
      particles << j.dump() << '\n';
    }
    vertical.push_back(start.w() - end.w());
    ends.push_back(d);
    maxima.push_back(paths[r].max_distance);
    rate.add(d / t);
  }
  rec.summary_csv = summary.str();
  rec.kind_csv = csv.str();
  rec.particles_jsonl = particles.str();

  add(rec, "vertical_law", standard_normal_ks(vertical, t, "KS of -log Im (relative to start) against N(t/2, t), significance 1e-3"));
  const double mean_rate = rate.value() / static_cast<double>(spec.replicas);
  add(rec, "escape_mean", TestReport::within(mean_rate, 0.47, 0.53, spec.replicas, "mean rho(B_t, B_0) / t"));

  if (!track) return;
  const auto n = static_cast<double>(spec.replicas);
  auto tail = [&](const std::vector<double>& xs, double c) {
    return static_cast<double>(std::count_if(xs.begin(), xs.end(), [c](double x) { return x >= c; })) / n;
  };
  for (double c : {1.5, 2.0, 2.5}) {
    const double pm = tail(maxima, c);
    const double pe = tail(ends, c);
    const double se = std::sqrt((pm * (1.0 - pm) + 4.0 * pe * (1.0 - pe)) / n);
    add(rec, "excursion_tail_c" + fmt(c),
        TestReport::at_most(pm - 2.0 * pe - 3.0 * se, 0.0, spec.replicas,
                            "P[M >= c] - 2 P[rho(B_t, B_0) >= c] - 3 combined standard errors"));
    rec.estimates["excursion_tail"].push_back({{"c", c}, {"max_tail", pm}, {"end_tail", pe}});
  }
  std::vector<double> x;
  std::vector<double> y;
  for (double c = 2.0; c <= 4.0 + 1e-9; c += 0.25) {
    const double p = tail(maxima, c);
    if (p <= 0.0) continue;
    x.push_back(-(c - 0.5 * t) * (c - 0.5 * t) / (2.0 * t));
    y.push_back(std::log(p));
  }
  if (x.size() >= 2) {
    add(rec, "excursion_tail_rate",
        TestReport::within(stats::least_squares(x, y).slope, 0.8, 1.2, spec.replicas,
                           "slope of log P[M >= c] against -(c - t/2)^2 / (2t) over c in [2, 4]"));
  }
}

void run_many_to_one(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  Slots slots(spec.replicas);
  ManyToOneConfig mc;
  mc.lambda = spec.config.lambda;
  mc.t = spec.config.horizon;
  mc.bbm_replicas = spec.replicas;
  mc.single_replicas = spec.single_replicas;
  mc.seed = spec.config.seed;
  mc.scheme = spec.config.scheme;
  mc.start = spec.config.start;
  mc.workers = opt.workers;
  mc.on_replica = [&](std::size_t r, const RunResult& res) { slots.record(r, res, opt.dump_particles); };

  const double radius = spec.functional_radius;
  const HalfPlanePoint start = spec.config.start;
  PathFunctional f;
  switch (spec.functional) {
    case Functional::One: f = {false, [](const HalfPlanePoint&, double) { return 1.0; }}; break;
    case Functional::Ball:
      f = {false, [=](const HalfPlanePoint& p, double) { return dist_halfplane(p, start) <= radius ? 1.0 : 0.0; }};
      break;
    case Functional::PathMax: f = {true, [=](const HalfPlanePoint&, double m) { return m <= radius ? 1.0 : 0.0; }}; break;
  }
  const ManyToOneEstimate e = many_to_one(f, mc);
  slots.flush(rec);
  add(rec, "many_to_one",
      TestReport::at_most(e.z_score(), 3.0, spec.replicas,
                          "|BBM sum - exp(lambda t) single-particle mean| in combined standard errors"));
  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n'
      << fmt(e.lhs) << ',' << fmt(e.lhs_se) << ',' << fmt(e.rhs) << ',' << fmt(e.rhs_se) << ',' << fmt(e.z_score())
      << '\n';
  rec.kind_csv = csv.str();
}

// Replica-by-snapshot extremes.
struct ExtremeTable {
  std::vector<std::vector<Extremes>> rows;  // [replica][snapshot]
  std::vector<std::vector<double>> means;
};

ExtremeTable collect_extremes(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  ExtremeTable table;
  table.rows.resize(spec.replicas);
  table.means.resize(spec.replicas);
  Slots slots(spec.replicas);
  const HalfPlanePoint origin = spec.config.start;
  for_each_replica(spec, opt, slots, [&](std::size_t r, const RunResult& res) {
    for (const Population& pop : res.snapshots) {
      table.rows[r].push_back(max_min_distance(pop, origin));
      table.means[r].push_back(mean_distance(pop, origin));
    }
  });
  slots.flush(rec);
  return table;
}

double column_mean(const std::vector<std::vector<Extremes>>& rows, std::size_t k, bool max) {
  stats::CompensatedSum s;
  for (const auto& row : rows) s.add(max ? row[k].max : row[k].min);
  return s.value() / static_cast<double>(rows.size());
}

TestReport min_rate_report(const ExtremeTable& table, const ExperimentSpec& spec) {
  const double t = spec.config.snapshot_times.back();
  const double r_lo = min_rate(spec.config.lambda);
  return TestReport::within(column_mean(table.rows, table.rows[0].size() - 1, false) / t, r_lo, r_lo + 0.12,
                            spec.replicas, "replica-mean Min_t / t at the last snapshot");
}

void run_rates(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  const ExtremeTable table = collect_extremes(spec, opt, rec);
  const auto& times = spec.config.snapshot_times;
  const double lambda = spec.config.lambda;
  const double r_star = max_rate(lambda);
  RateSeries max_series;
  RateSeries min_series;
  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double mx = column_mean(table.rows, k, true);
    const double mn = column_mean(table.rows, k, false);
    csv << fmt(times[k]) << ',' << fmt(mx) << ',' << fmt(mn) << ',' << (times[k] > 0.0 ? fmt(mx / times[k]) : "")
        << ',' << fmt(r_star) << '\n';
    if (times[k] > 0.0) {
      max_series.push(times[k], mx);
      min_series.push(times[k], mn);
    }
  }
  rec.kind_csv = csv.str();
  const double t = times.back();
  add(rec, "max_rate",
      TestReport::within(column_mean(table.rows, times.size() - 1, true) / t, r_star - 0.12, r_star, spec.replicas,
                         "replica-mean Max_t / t at the last snapshot"));
  add(rec, "min_rate", min_rate_report(table, spec));
  rec.estimates["max_rate_reference"] = r_star;
  rec.estimates["min_rate_reference"] = min_rate(lambda);
  if (max_series.size() >= 4) {
    // A short series widens the window to its last four points.
    const double window = std::max(spec.window, 4.0 / static_cast<double>(max_series.size()));
    rec.estimates["max_rate_fit"] = rate_fit(max_series, window);
    rec.estimates["min_rate_fit"] = rate_fit(min_series, window);
  }
}

void run_log_correction(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  const ExtremeTable table = collect_extremes(spec, opt, rec);
  const auto& times = spec.config.snapshot_times;
  const double lambda = spec.config.lambda;
  std::size_t positive = 0;
  std::vector<stats::CompensatedSum> max_c(times.size());
  std::vector<stats::CompensatedSum> min_c(times.size());
  double max_ref = 0.0;
  double min_ref = 0.0;
  for (const auto& row : table.rows) {
    RateSeries mx;
    RateSeries mn;
    for (std::size_t k = 0; k < times.size(); ++k) {
      mx.push(times[k], row[k].max);
      mn.push(times[k], row[k].min);
    }
    const LogCorrection cmax = log_correction(mx, lambda);
    const LogCorrection cmin = log_correction(mn, lambda, true);
    max_ref = cmax.reference;
    min_ref = cmin.reference;
    bool all_positive = true;
    for (std::size_t k = 0; k < times.size(); ++k) {
      max_c[k].add(cmax.centered.points()[k].second);
      min_c[k].add(cmin.centered.points()[k].second);
      all_positive = all_positive && cmin.centered.points()[k].second > 0.0;
    }
    if (all_positive) ++positive;
  }
  const auto n = static_cast<double>(spec.replicas);
  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    csv << fmt(times[k]) << ',' << fmt(max_c[k].value() / n) << ',' << fmt(min_c[k].value() / n) << ','
        << fmt(max_ref) << ',' << fmt(min_ref) << '\n';
  }
  rec.kind_csv = csv.str();
  add(rec, "min_rate", min_rate_report(table, spec));
  add(rec, "min_correction_sign",
      TestReport::at_least(static_cast<double>(positive) / n, 0.8, spec.replicas,
                           "fraction of replicas whose (Min_t - r_* t) / log t is positive at every snapshot"));
  rec.estimates["max_centered_final"] = max_c.back().value() / n;
  rec.estimates["min_centered_final"] = min_c.back().value() / n;
  rec.estimates["max_reference"] = max_ref;
  rec.estimates["min_reference"] = min_ref;
}

void run_clt(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  std::vector<double> ks_dist(spec.replicas, std::nan(""));
  std::vector<double> ks_vert(spec.replicas, std::nan(""));
  Slots slots(spec.replicas);
  const double t = spec.config.snapshot_times.back();
  for_each_replica(spec, opt, slots, [&](std::size_t r, const RunResult& res) {
    const Population& pop = res.snapshots.back();
    if (pop.size() < 30) return;  // too few particles for a KS statistic
    ks_dist[r] = distance_clt_test(pop, t, spec.config.start).statistic;
    ks_vert[r] = vertical_clt_test(pop, t, spec.config.start).statistic;
  });
  slots.flush(rec);
  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  std::vector<double> d;
  std::vector<double> gap;
  for (std::size_t r = 0; r < spec.replicas; ++r) {
    csv << r << ',' << (std::isnan(ks_dist[r]) ? "" : fmt(ks_dist[r])) << ','
        << (std::isnan(ks_vert[r]) ? "" : fmt(ks_vert[r])) << '\n';
    if (std::isnan(ks_dist[r])) continue;
    d.push_back(ks_dist[r]);
    gap.push_back(std::abs(ks_dist[r] - ks_vert[r]));
  }
  rec.kind_csv = csv.str();
  if (d.empty()) throw InsufficientData("no replica reached 30 particles at the CLT snapshot");
  add(rec, "distance_ks_median",
      TestReport::at_most(median(d), 0.1, d.size(), "median KS distance of (rho - t/2) / sqrt(t) against N(0, 1)"));
  add(rec, "ks_gap_median",
      TestReport::at_most(median(gap), 0.05, d.size(), "median |KS(distance) - KS(vertical)|"));
}

void run_escape(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  const ExtremeTable table = collect_extremes(spec, opt, rec);
  const auto& times = spec.config.snapshot_times;
  std::vector<double> mean_curve;
  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    stats::CompensatedSum s;
    for (const auto& m : table.means) s.add(m[k]);
    mean_curve.push_back(s.value() / static_cast<double>(spec.replicas));
    csv << fmt(times[k]) << ',' << fmt(mean_curve.back()) << '\n';
  }
  rec.kind_csv = csv.str();
  add(rec, "escape_rate",
      TestReport::within(stats::least_squares(times, mean_curve).slope, 0.45, 0.55, spec.replicas,
                         "least-squares slope of the replica-mean mean distance"));
}

void run_boundary(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  const std::size_t bins = spec.bins;
  const double lambda = spec.config.lambda;
  std::vector<std::vector<double>> lam(spec.replicas);
  std::vector<std::vector<double>> mu(spec.replicas);
  Slots slots(spec.replicas);
  for_each_replica(spec, opt, slots, [&](std::size_t r, const RunResult& res) {
    lam[r] = boundary_measure(res.snapshots.back(), bins, Weighting::Lambda, lambda);
    mu[r] = boundary_measure(res.snapshots.back(), bins, Weighting::Mu);
  });
  slots.flush(rec);

  const std::vector<double> expected = expected_arc_masses(halfplane_to_disk(spec.config.start), bins);
  const auto t2 = stats::hotelling_t2(lam, expected, kAlpha);
  add(rec, "lambda_hotelling",
      TestReport::at_most(t2.statistic, t2.threshold, spec.replicas,
                          "Hotelling T^2 of replica Lambda arc masses against the harmonic measure, significance 1e-3"));

  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  double worst = 0.0;
  const double width = 2.0 * std::numbers::pi / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    std::vector<double> lk;
    std::vector<double> mk;
    for (std::size_t r = 0; r < spec.replicas; ++r) {
      lk.push_back(lam[r][k]);
      mk.push_back(mu[r][k]);
    }
    const auto ls = stats::mean_se(lk);
    const auto ms = stats::mean_se(mk);
    worst = std::max(worst, std::abs(ls.mean - expected[k]) / ls.se);
    const double lo = -std::numbers::pi + width * static_cast<double>(k);
    csv << k << ',' << fmt(lo) << ',' << fmt(lo + width) << ',' << fmt(ls.mean) << ',' << fmt(ls.se) << ','
        << fmt(ms.mean) << ',' << fmt(expected[k]) << '\n';
  }
  rec.kind_csv = csv.str();
  add(rec, "lambda_per_arc",
      TestReport::at_most(worst, 3.0, spec.replicas,
                          "largest per-arc |mean Lambda mass - harmonic measure| in standard errors"));
}

void run_dimension(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  std::vector<std::vector<BoundaryPoint>> angles(spec.replicas);
  Slots slots(spec.replicas);
  for_each_replica(spec, opt, slots, [&](std::size_t r, const RunResult& res) {
    for (const Particle& p : res.snapshots.back().particles) angles[r].push_back(radial_projection(p.position));
  });
  slots.flush(rec);
  std::vector<BoundaryPoint> pooled;
  for (const auto& a : angles) pooled.insert(pooled.end(), a.begin(), a.end());
  const DimensionEstimate est = box_dimension(pooled, dyadic_scales(spec.scale_first, spec.scale_last));
  const double ref = limit_set_dimension(spec.config.lambda);
  TestReport report = TestReport::within(est.dimension, ref - 0.15, ref + 0.15, pooled.size(),
                                         "box-counting slope of pooled boundary angles");
  report.exploratory = true;
  add(rec, "box_dimension", report);
  rec.estimates["limit_set_dimension"] = ref;
  rec.estimates["support_dimension"] = support_dimension(spec.config.lambda);
  rec.estimates["box_dimension"] = est.dimension;
  rec.estimates["r2"] = est.r2;
  rec.estimates["angles"] = pooled.size();
  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  for (std::size_t k = 0; k < est.scales.size(); ++k) csv << fmt(est.scales[k]) << ',' << est.counts[k] << '\n';
  rec.kind_csv = csv.str();
}

void run_regime_probe(const ExperimentSpec& spec, const ExecuteOptions& opt, RunRecord& rec) {
  const auto& times = spec.config.snapshot_times;
  std::vector<std::vector<char>> hits(spec.replicas);
  Slots slots(spec.replicas);
  for_each_replica(spec, opt, slots, [&](std::size_t r, const RunResult& res) {
    for (const Population& pop : res.snapshots) hits[r].push_back(visits_ball(pop, spec.config.start, spec.radius));
  });
  slots.flush(rec);
  std::vector<double> fraction(times.size(), 0.0);
  for (const auto& h : hits) {
    for (std::size_t k = 0; k < times.size(); ++k) fraction[k] += h[k];
  }
  std::ostringstream csv;
  csv << kind_csv_header(spec.kind) << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    fraction[k] /= static_cast<double>(spec.replicas);
    csv << fmt(times[k]) << ',' << fmt(fraction[k]) << '\n';
  }
  rec.kind_csv = csv.str();
  rec.estimates["occupation"] = fraction;
  if (spec.config.lambda <= kTransientThreshold) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < times.size(); ++k) worst = std::max(worst, fraction[k] - fraction[k - 1]);
    if (times.size() >= 2) {
      add(rec, "occupation_decreasing",
          TestReport::below(worst, 0.0, spec.replicas,
                            "largest change of the ball-occupation fraction between checkpoints"));
    }
  } else {
    add(rec, "occupation_floor",
        TestReport::above(*std::min_element(fraction.begin(), fraction.end()), 0.5, spec.replicas,
                          "smallest ball-occupation fraction over the checkpoints"));
  }
}

}  // namespace

std::string_view kind_name(ExperimentKind kind) noexcept {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::string_view kind_csv_header(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::PopulationLaw: return "n,observed,expected";
    case ExperimentKind::SingleBm: return "replica,u,w,distance,path_max";
    case ExperimentKind::ManyToOne: return "lhs,lhs_se,rhs,rhs_se,z";
    case ExperimentKind::Rates: return "t,max,min,max_over_t,reference";
    case ExperimentKind::LogCorrection: return "t,max_centered,min_centered,max_reference,min_reference";
    case ExperimentKind::Clt: return "replica,ks_distance,ks_vertical";
    case ExperimentKind::Escape: return "t,mean_distance";
    case ExperimentKind::Boundary: return "arc,lo,hi,lambda_mean,lambda_se,mu_mean,expected";
    case ExperimentKind::Dimension: return "scale,count";
    case ExperimentKind::RegimeProbe: return "t,fraction";
  }
  return "";
}

std::string ExperimentSpec::canonical() const {
  std::ostringstream os;
  os << "kind = " << kind_name(kind) << '\n'
     << "lambda = " << fmt(config.lambda) << '\n'
     << "t = " << fmt(config.horizon) << '\n'
     << "snapshots = ";
  for (std::size_t k = 0; k < config.snapshot_times.size(); ++k) {
    os << (k ? ", " : "") << fmt(config.snapshot_times[k]);
  }
  os << '\n'
     << "replicas = " << replicas << '\n'
     << "seed = " << config.seed << '\n'
     << "dt = " << fmt(config.scheme.dt_max) << '\n'
     << "u_integration = " << (config.scheme.u_integration == UIntegration::Trapezoid ? "trapezoid" : "left")
     << '\n'
     << "start_log = " << fmt(config.start.u()) << ", " << fmt(config.start.w()) << '\n'
     << "particle_cap = " << config.particle_cap << '\n'
     << "track_path_max = " << (config.track_path_max ? "true" : "false") << '\n';
  for (const auto& [f, name] : kFunctionals) {
    if (f == functional) os << "functional = " << name << '\n';
  }
  os << "single_replicas = " << single_replicas << '\n'
     << "functional_radius = " << fmt(functional_radius) << '\n'
     << "bins = " << bins << '\n'
     << "radius = " << fmt(radius) << '\n'
     << "scale_first = " << scale_first << '\n'
     << "scale_last = " << scale_last << '\n'
     << "window = " << fmt(window) << '\n'
     << "output_dir = " << output_dir << '\n';
  return os.str();
}

void ExperimentSpec::validate() const {
  if (!(config.horizon >= 0.0)) throw ValidationError("t", "must be >= 0");
  if (replicas < 1) throw ValidationError("replicas", "must be >= 1");
  if (config.snapshot_times.empty()) throw ValidationError("snapshots", "needs at least one time");
  config.validate();
  switch (kind) {
    case ExperimentKind::ManyToOne:
      if (replicas < 100) throw ValidationError("replicas", "many_to_one needs at least 100");
      if (single_replicas < 100) throw ValidationError("single_replicas", "many_to_one needs at least 100");
      if (!(config.horizon > 0.0)) throw ValidationError("t", "must be > 0");
      break;
    case ExperimentKind::SingleBm:
      if (replicas < 30) throw ValidationError("replicas", "single_bm needs at least 30 for its KS test");
      if (!(config.horizon > 0.0)) throw ValidationError("t", "must be > 0");
      break;
    case ExperimentKind::Rates:
    case ExperimentKind::Escape:
      if (config.snapshot_times.size() < 4) throw ValidationError("snapshots", "needs at least 4 times");
      break;
    case ExperimentKind::LogCorrection:
      max_log_correction(config.lambda);  // throws WrongRegime above 1/8
      if (config.snapshot_times.front() < std::numbers::e) throw ValidationError("snapshots", "must be >= e");
      break;
    case ExperimentKind::Boundary:
      if (bins < 2) throw ValidationError("bins", "must be >= 2");
      if (replicas <= bins) throw ValidationError("replicas", "must exceed bins for the Hotelling test");
      break;
    case ExperimentKind::Dimension:
      if (scale_first < 1 || scale_last <= scale_first || scale_last > 30) {
        throw ValidationError("scale_last", "need 1 <= scale_first < scale_last <= 30");
      }
      break;
    case ExperimentKind::RegimeProbe:
      if (!(radius > 0.0)) throw ValidationError("radius", "must be > 0");
      break;
    case ExperimentKind::Clt:
      if (!(config.snapshot_times.back() > 0.0)) throw ValidationError("t", "must be > 0");
      break;
    case ExperimentKind::PopulationLaw: break;
  }
  if (!(window > 0.0 && window <= 1.0)) throw ValidationError("window", "must be in (0, 1]");
  if (!(functional_radius > 0.0)) throw ValidationError("functional_radius", "must be > 0");
}

ExperimentSpec parse_spec(std::string_view text) {
  std::map<std::string, std::pair<std::string, std::size_t>> values;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");
    if (!values.emplace(key, std::pair{value, line_no}).second) {
      throw ParseError(line_no, "duplicate key '" + key + "'");
    }
  }

  static const std::set<std::string> known = {
      "kind",     "lambda",       "t",          "snapshots",        "replicas",    "seed",
      "dt",       "u_integration", "start",     "start_log",        "particle_cap", "track_path_max",
      "functional", "functional_radius", "single_replicas", "bins", "radius", "scale_first",
      "scale_last", "window", "output_dir"};
  for (const auto& [key, v] : values) {
    if (!known.contains(key)) throw ValidationError(key, "unknown key");
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second.first;
  };

  ExperimentSpec spec;
  const std::string* kind = get("kind");
  if (!kind) throw ValidationError("kind", "required");
  const auto* found = std::find_if(std::begin(kKinds), std::end(kKinds), [&](const auto& p) { return p.second == *kind; });
  if (found == std::end(kKinds)) throw ValidationError("kind", "unknown kind '" + *kind + "'");
  spec.kind = found->first;

  if (const auto* v = get("lambda")) {
    spec.config.lambda = parse_double("lambda", *v);
  } else if (spec.kind != ExperimentKind::SingleBm) {
    throw ValidationError("lambda", "required");
  }
  if (!(spec.config.lambda > 0.0)) throw ValidationError("lambda", "must be > 0");
  const std::string* t = get("t");
  if (!t) throw ValidationError("t", "required");
  spec.config.horizon = parse_double("t", *t);
  if (!(spec.config.horizon >= 0.0)) throw ValidationError("t", "must be >= 0");

  if (const auto* v = get("snapshots")) {
    spec.config.snapshot_times = parse_list("snapshots", *v);
  } else {
    spec.config.snapshot_times = default_snapshots(spec.kind, spec.config.horizon);
  }
  if (const auto* v = get("replicas")) spec.replicas = parse_unsigned("replicas", *v);
  if (const auto* v = get("seed")) spec.config.seed = parse_unsigned("seed", *v);
  if (const auto* v = get("dt")) spec.config.scheme.dt_max = parse_double("dt", *v);
  if (const auto* v = get("u_integration")) {
    if (*v == "trapezoid") {
      spec.config.scheme.u_integration = UIntegration::Trapezoid;
    } else if (*v == "left") {
      spec.config.scheme.u_integration = UIntegration::LeftEndpoint;
    } else {
      throw ValidationError("u_integration", "expected trapezoid or left");
    }
  }
  if (get("start") && get("start_log")) throw ValidationError("start", "give either start or start_log");
  if (const auto* v = get("start")) {
    const auto xy = parse_list("start", *v);
    if (xy.size() != 2) throw ValidationError("start", "expected 'x, y' in the disk");
    try {
      spec.config.start = disk_to_halfplane(DiskPoint(xy[0], xy[1]));
    } catch (const DomainError& e) {
      throw ValidationError("start", e.what());
    }
  }
  if (const auto* v = get("start_log")) {
    const auto uw = parse_list("start_log", *v);
    if (uw.size() != 2) throw ValidationError("start_log", "expected 'u, w'");
    spec.config.start = HalfPlanePoint(uw[0], uw[1]);
  }
  if (const auto* v = get("particle_cap")) spec.config.particle_cap = parse_unsigned("particle_cap", *v);
  if (const auto* v = get("track_path_max")) spec.config.track_path_max = parse_bool("track_path_max", *v);
  if (const auto* v = get("functional")) {
    const auto* f =
        std::find_if(std::begin(kFunctionals), std::end(kFunctionals), [&](const auto& p) { return p.second == *v; });
    if (f == std::end(kFunctionals)) throw ValidationError("functional", "expected one, ball or path_max");
    spec.functional = f->first;
  }
  if (const auto* v = get("functional_radius")) spec.functional_radius = parse_double("functional_radius", *v);
  if (const auto* v = get("single_replicas")) spec.single_replicas = parse_unsigned("single_replicas", *v);
  if (const auto* v = get("bins")) spec.bins = parse_unsigned("bins", *v);
  if (const auto* v = get("radius")) spec.radius = parse_double("radius", *v);
  if (const auto* v = get("scale_first")) spec.scale_first = static_cast<int>(parse_unsigned("scale_first", *v));
  if (const auto* v = get("scale_last")) spec.scale_last = static_cast<int>(parse_unsigned("scale_last", *v));
  if (const auto* v = get("window")) spec.window = parse_double("window", *v);
  if (const auto* v = get("output_dir")) spec.output_dir = *v;
  if (spec.kind == ExperimentKind::ManyToOne && spec.functional == Functional::PathMax) {
    spec.config.track_path_max = true;
  }
  if (spec.kind == ExperimentKind::SingleBm) spec.config.lambda = 1.0;  // unused by single paths

  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open spec file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

const TestReport& RunRecord::report(std::string_view name) const {
  for (const auto& r : reports) {
    if (r.name == name) return r.report;
  }
  throw Error("no report named '" + std::string(name) + "'");
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_name(spec.kind);
  j["spec_hash"] = hex(spec_hash);
  j["seed"] = spec.config.seed;
  j["version"] = version;
  j["replicas"] = spec.replicas;
  j["lambda"] = spec.config.lambda;
  j["t"] = spec.config.horizon;
  nlohmann::json reps = nlohmann::json::object();
  for (const auto& r : reports) reps[r.name] = r.report.to_json();
  j["reports"] = reps;
  j["estimates"] = estimates;
  return j;
}

RunRecord execute(const ExperimentSpec& spec, const ExecuteOptions& options) {
  spec.validate();
  RunRecord rec;
  rec.spec = spec;
  rec.spec_hash = fnv1a(spec.canonical());
  rec.version = kVersion;
  switch (spec.kind) {
    case ExperimentKind::PopulationLaw: run_population_law(spec, options, rec); break;
    case ExperimentKind::SingleBm: run_single_bm(spec, options, rec); break;
    case ExperimentKind::ManyToOne: run_many_to_one(spec, options, rec); break;
    case ExperimentKind::Rates: run_rates(spec, options, rec); break;
    case ExperimentKind::LogCorrection: run_log_correction(spec, options, rec); break;
    case ExperimentKind::Clt: run_clt(spec, options, rec); break;
    case ExperimentKind::Escape: run_escape(spec, options, rec); break;
    case ExperimentKind::Boundary: run_boundary(spec, options, rec); break;
    case ExperimentKind::Dimension: run_dimension(spec, options, rec); break;
    case ExperimentKind::RegimeProbe: run_regime_probe(spec, options, rec); break;
  }
  return rec;
}

std::string plot_script(const RunRecord& record) {
  const std::string kind(kind_name(record.spec.kind));
  const std::string csv = "'" + kind + ".csv'";
  std::ostringstream os;
  os << "# gnuplot script for " << kind << " (spec " << hex(record.spec_hash) << ")\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set terminal pngcairo size 900,600\n"
     << "set output '" << kind << ".png'\n";
  switch (record.spec.kind) {
    case ExperimentKind::PopulationLaw:
      os << "set style data histograms\nset style fill solid 0.5\n"
         << "plot " << csv << " using 2:xtic(1), '' using 3\n";
      break;
    case ExperimentKind::SingleBm:
      os << "set xlabel 'distance'\nbinwidth = 0.25\nbin(x) = binwidth * floor(x / binwidth)\n"
         << "plot " << csv << " using (bin($4)):(1.0) smooth freq with boxes title 'endpoint distance'\n";
      break;
    case ExperimentKind::ManyToOne:
      os << "set style data histograms\nset style histogram errorbars\n"
         << "plot " << csv << " using 1:2 title 'BBM sum', '' using 3:4 title 'single particle'\n";
      break;
    case ExperimentKind::Rates:
      os << "set xlabel 't'\n"
         << "plot " << csv << " using 1:2 with linespoints, '' using 1:3 with linespoints, "
         << "'' using 1:($5 * $1) with lines title 'r* t'\n";
      break;
    case ExperimentKind::LogCorrection:
      os << "set xlabel 't'\n"
         << "plot " << csv << " using 1:2 with linespoints, '' using 1:3 with linespoints, "
         << "'' using 1:4 with lines, '' using 1:5 with lines\n";
      break;
    case ExperimentKind::Clt:
      os << "set xlabel 'replica'\nplot " << csv << " using 1:2 with points, '' using 1:3 with points\n";
      break;
    case ExperimentKind::Escape:
      os << "set xlabel 't'\nplot " << csv << " using 1:2 with linespoints, x / 2 title 't/2'\n";
      break;
    case ExperimentKind::Boundary:
      os << "set xlabel 'arc'\n"
         << "plot " << csv << " using 1:4:5 with yerrorbars, '' using 1:7 with lines, '' using 1:6 with points\n";
      break;
    case ExperimentKind::Dimension:
      os << "set logscale xy\nset xlabel 'arc width'\nplot " << csv << " using 1:2 with linespoints\n";
      break;
    case ExperimentKind::RegimeProbe:
      os << "set xlabel 't'\nset yrange [0:1]\nplot " << csv << " using 1:2 with linespoints\n";
      break;
  }
  os << "set output 'summary.png'\nset xlabel 't'\n"
     << "plot 'summary.csv' using 2:5 with points title 'max_dist', '' using 2:6 with points title 'min_dist'\n";
  return os.str();
}

void emit_report(const RunRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << content;
  };
  write("summary.csv", record.summary_csv);
  write(std::string(kind_name(record.spec.kind)) + ".csv", record.kind_csv);
  write("report.json", record.to_json().dump(2) + "\n");
  write("plot.gp", plot_script(record));
  if (!record.particles_jsonl.empty()) write("particles.jsonl", record.particles_jsonl);
}

}  // namespace hypbbm
