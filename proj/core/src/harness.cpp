#include "rggfpp/harness.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <tuple>

#include "rggfpp/csv.hpp"
#include "rggfpp/errors.hpp"
#include "rggfpp/estimators.hpp"

namespace rggfpp {

namespace {

using Json = nlohmann::json;

ConfigInvalid invalid(std::string field, std::string message) {
  return ConfigInvalid(std::vector<ConfigError>{{std::move(field), std::move(message)}});
}

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Key table

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

double to_double(const std::string& field, const std::string& value) {
  try {
    const double x = parse_double(value);
    if (!std::isfinite(x)) throw std::invalid_argument("not finite");
    return x;
  } catch (const std::exception&) {
    throw invalid(field, "expected a finite number, got '" + value + "'");
  }
}

std::uint64_t to_unsigned(const std::string& field, const std::string& value) {
  std::string v = value;
  v.erase(std::remove_if(v.begin(), v.end(), [](unsigned char c) { return std::isspace(c); }), v.end());
  if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw invalid(field, "expected a non-negative integer, got '" + value + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw invalid(field, "integer out of range: '" + value + "'");
  }
}

std::vector<double> to_list(const std::string& field, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(to_double(field, item));
  }
  return out;
}

std::string trimmed(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n\"");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n\"");
  return s.substr(a, b - a + 1);
}

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const std::string& key, double ExperimentConfig::*m) {
      t[key] = [key, m](ExperimentConfig& c, const std::string& v) { c.*m = to_double(key, v); };
    };
    auto opt_real = [&t](const std::string& key, std::optional<double> ExperimentConfig::*m) {
      t[key] = [key, m](ExperimentConfig& c, const std::string& v) { c.*m = to_double(key, v); };
    };
    auto count = [&t](const std::string& key, std::size_t ExperimentConfig::*m) {
      t[key] = [key, m](ExperimentConfig& c, const std::string& v) { c.*m = to_unsigned(key, v); };
    };
    auto list = [&t](const std::string& key, std::vector<double> ExperimentConfig::*m) {
      t[key] = [key, m](ExperimentConfig& c, const std::string& v) { c.*m = to_list(key, v); };
    };
    t["model.dim"] = [](ExperimentConfig& c, const std::string& v) {
      const auto d = to_unsigned("model.dim", v);
      if (d > 16) throw invalid("model.dim", "dimension above 16 is not supported");
      c.dim = static_cast<int>(d);
    };
    real("model.intensity", &ExperimentConfig::intensity);
    real("model.radius", &ExperimentConfig::radius);
    real("model.side", &ExperimentConfig::side);
    t["model.distribution"] = [](ExperimentConfig& c, const std::string& v) { c.distribution = trimmed(v); };
    t["run.seed"] = [](ExperimentConfig& c, const std::string& v) { c.seed = to_unsigned("run.seed", v); };
    count("run.replicas", &ExperimentConfig::replicas);
    count("run.first_replica", &ExperimentConfig::first_replica);
    count("run.jobs", &ExperimentConfig::jobs);
    t["run.output"] = [](ExperimentConfig& c, const std::string& v) { c.output = trimmed(v); };
    list("tiers.distances", &ExperimentConfig::tiers);
    count("tiers.directions", &ExperimentConfig::directions);
    count("phi.bootstrap", &ExperimentConfig::bootstrap);
    list("shape.extents", &ExperimentConfig::extents);
    opt_real("shape.phi", &ExperimentConfig::phi);
    count("shape.phi_replicas", &ExperimentConfig::phi_replicas);
    opt_real("shape.phi_tier", &ExperimentConfig::phi_tier);
    opt_real("tails.tier", &ExperimentConfig::tail_tier);
    real("tails.window_low_quantile", &ExperimentConfig::tail_low_quantile);
    real("tails.window_high_quantile", &ExperimentConfig::tail_high_quantile);
    count("tails.min_replicas", &ExperimentConfig::tail_min_replicas);
    real("wander.exponent", &ExperimentConfig::wander_exponent);
    opt_real("wander.pitch", &ExperimentConfig::wander_pitch);
    count("wander.min_replicas", &ExperimentConfig::wander_min_replicas);
    real("tree.epsilon", &ExperimentConfig::cone_epsilon);
    opt_real("tree.min_radius", &ExperimentConfig::cone_min_radius);
    list("tree.scan_radii", &ExperimentConfig::scan_radii);
    list("rays.band_radii", &ExperimentConfig::band_radii);
    opt_real("rays.band_width", &ExperimentConfig::band_width);
    list("holes.sides", &ExperimentConfig::hole_sides);
    real("holes.resolution", &ExperimentConfig::hole_resolution);
    opt_real("holes.margin", &ExperimentConfig::hole_margin);
    list("perc-scan.radii", &ExperimentConfig::scan_r);
    list("augmented.spacings", &ExperimentConfig::spacings);
    opt_real("augmented.kappa", &ExperimentConfig::kappa);
    real("augmented.delta", &ExperimentConfig::delta);
    list("augmented.norms", &ExperimentConfig::aug_norms);
    t["augmented.budget"] = [](ExperimentConfig& c, const std::string& v) {
      c.fixed_budget = to_unsigned("augmented.budget", v);
    };
    return t;
  }();
  return table;
}

ExperimentConfig apply_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
  ExperimentConfig config;
  std::vector<ConfigError> errors;
  const auto& table = key_table();
  for (const auto& [key, value] : entries) {
    const auto it = table.find(key);
    if (it == table.end()) {
      errors.push_back({key, "unknown configuration key"});
      continue;
    }
    try {
      it->second(config, value);
    } catch (const ConfigInvalid& e) {
      errors.insert(errors.end(), e.errors().begin(), e.errors().end());
    }
  }
  if (!errors.empty()) throw ConfigInvalid(std::move(errors));
  return config;
}

std::string json_scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string s;
    for (const auto& item : v) {
      if (!s.empty()) s += ",";
      s += json_scalar(item);
    }
    return s;
  }
  throw invalid("", "unsupported JSON value " + v.dump());
}

// ---------------------------------------------------------------------------
// Output helpers

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string cell(double x) { return format_double(x); }
std::string cell(std::uint64_t x) { return std::to_string(x); }
std::string cell(std::size_t x, int) { return std::to_string(x); }

struct Row {
  std::size_t tier = 0;
  std::uint64_t replica = 0;
  std::size_t seq = 0;
  std::vector<std::string> cells;
};

struct ExperimentOutput {
  std::vector<std::string> header;
  std::vector<Row> rows;
  Summary summary;
  std::vector<std::pair<std::uint64_t, std::string>> errors;
  std::vector<std::pair<std::uint64_t, double>> wall;
  bool sort_rows = true;
};

std::vector<std::uint64_t> replica_ids(std::size_t first, std::size_t count) {
  std::vector<std::uint64_t> ids(count);
  for (std::size_t k = 0; k < count; ++k) ids[k] = first + k;
  return ids;
}

template <class R>
std::vector<std::pair<std::uint64_t, R>> collect(std::vector<ReplicaOutcome<R>>&& outcomes, ExperimentOutput& out) {
  std::vector<std::pair<std::uint64_t, R>> ok;
  for (auto& o : outcomes) {
    out.wall.emplace_back(o.replica, o.wall_seconds);
    if (o.value)
      ok.emplace_back(o.replica, std::move(*o.value));
    else
      out.errors.emplace_back(o.replica, o.error);
  }
  return ok;
}

Point scaled(const Point& u, double s) {
  Point p(u);
  for (auto& c : p) c *= s;
  return p;
}

Point random_in_ball(int dim, double radius, RandomStream& rng) {
  const Point u = random_direction(dim, rng);
  const double s = radius * std::pow(rng.uniform01(), 1.0 / dim);
  return scaled(u, s);
}

double vector_norm(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Pair samples: endpoints at -x/2 and +x/2 around the box center.

struct PairSample {
  std::size_t tier = 0;
  std::size_t sample = 0;
  double norm = 0.0;
  double time = 0.0;
  std::size_t hops = 0;
  double hausdorff = 0.0;
  double vertex_norm = 0.0;
};

std::vector<PairSample> measure_pairs(const ExperimentConfig& c, const ModelSpec& model, std::uint64_t seed,
                                      std::uint64_t replica, std::span<const double> tiers, bool wander) {
  const Instance inst = make_instance(model, seed, replica);
  auto rng = make_stream(seed, replica, Purpose::kDirections);
  const double pitch = c.wander_pitch.value_or(model.radius / 4.0);
  std::vector<PairSample> out;
  for (std::size_t k = 0; k < tiers.size(); ++k) {
    for (std::size_t s = 0; s < c.directions; ++s) {
      const Point u = random_direction(model.dim, rng);
      const Point x = scaled(u, -0.5 * tiers[k]);
      const Point y = scaled(u, 0.5 * tiers[k]);
      const auto fp = first_passage_time(inst.graph, inst.labels, inst.field, x, y);
      PairSample p;
      p.tier = k;
      p.sample = s;
      p.norm = tiers[k];
      p.time = fp.time;
      p.hops = fp.geodesic.hops();
      const auto& cloud = inst.graph.cloud();
      const auto qx = cloud.point(fp.geodesic.vertices.front());
      const auto qy = cloud.point(fp.geodesic.vertices.back());
      p.vertex_norm = distance(qx, qy);
      if (wander) p.hausdorff = wander_record(fp.geodesic.polyline(cloud), qx, qy, pitch).hausdorff;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<std::pair<std::uint64_t, std::vector<PairSample>>> run_pairs(const ExperimentConfig& c,
                                                                         std::span<const double> tiers, bool wander,
                                                                         ExperimentOutput& out) {
  const ModelSpec model = c.model();
  const auto ids = replica_ids(c.first_replica, c.replicas);
  return collect(run_replicas<std::vector<PairSample>>(
                     ids, c.jobs, [&](std::uint64_t r) { return measure_pairs(c, model, c.seed, r, tiers, wander); }),
                 out);
}

std::vector<TierSample> tier_samples(std::span<const double> tiers,
                                     const std::vector<std::pair<std::uint64_t, std::vector<PairSample>>>& results) {
  std::vector<TierSample> out(tiers.size());
  for (std::size_t k = 0; k < tiers.size(); ++k) out[k].norm = tiers[k];
  for (const auto& [replica, samples] : results)
    for (const auto& p : samples) out[p.tier].times.push_back(p.time);
  return out;
}

void pair_rows(ExperimentOutput& out, const std::vector<std::pair<std::uint64_t, std::vector<PairSample>>>& results,
               bool wander) {
  out.header = {"tier", "replica", "sample", "vertex_norm", wander ? "hausdorff" : "time", "hops"};
  for (const auto& [replica, samples] : results) {
    for (const auto& p : samples) {
      Row row{p.tier, replica, p.sample, {}};
      row.cells = {cell(p.norm), cell(replica), cell(p.sample, 0), cell(p.vertex_norm),
                   cell(wander ? p.hausdorff : p.time), cell(p.hops, 0)};
      out.rows.push_back(std::move(row));
    }
  }
}

void fit_into(Summary& s, const LinearFit& fit) {
  s.scalars["slope"] = fit.slope;
  s.scalars["intercept"] = fit.intercept;
  s.scalars["r2"] = fit.r_squared;
  s.scalars["fit_points"] = static_cast<double>(fit.n);
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentOutput run_phi(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto results = run_pairs(c, c.tiers, false, out);
  pair_rows(out, results, false);
  const auto samples = tier_samples(c.tiers, results);
  auto rng = make_stream(c.seed, 0, Purpose::kBootstrap);
  const auto est = estimate_phi(samples, rng, c.bootstrap);
  auto& s = out.summary;
  s.scalars["estimate"] = est.phi;
  s.scalars["ci_low"] = est.ci_low;
  s.scalars["ci_high"] = est.ci_high;
  s.scalars["ci_level"] = est.level;
  s.scalars["n"] = static_cast<double>(est.n);
  s.scalars["band_constant"] = phi_band_constant(est.tiers, est.phi);
  if (est.tiers.size() >= 2) s.scalars["top_tier_drift_se"] = top_tier_drift(est.tiers);
  for (const auto& t : est.tiers) {
    s.series["tier"].push_back(t.norm);
    s.series["mean_time"].push_back(t.mean);
    s.series["variance"].push_back(t.variance);
    s.series["std_error"].push_back(t.std_error);
    s.series["samples"].push_back(static_cast<double>(t.n));
  }
  return out;
}

ExperimentOutput run_variance(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto results = run_pairs(c, c.tiers, false, out);
  pair_rows(out, results, false);
  const auto v = variance_scaling(tier_samples(c.tiers, results));
  auto& s = out.summary;
  fit_into(s, v.fit);
  s.scalars["estimate"] = v.fit.slope;
  s.scalars["ratio_spread"] = v.ratio_spread;
  s.scalars["n"] = static_cast<double>(results.size() * c.directions);
  for (const auto& row : v.rows) {
    s.series["tier"].push_back(row.norm);
    s.series["variance"].push_back(row.variance);
    s.series["ratio"].push_back(row.ratio);
  }
  return out;
}

ExperimentOutput run_tails(const ExperimentConfig& c) {
  ExperimentOutput out;
  const std::vector<double> tier{c.tail_tier.value_or(c.tiers.back())};
  const auto results = run_pairs(c, tier, false, out);
  pair_rows(out, results, false);
  const auto samples = tier_samples(tier, results);
  const auto curve = moderate_tail(samples.front(), c.tail_low_quantile, c.tail_high_quantile, c.tail_min_replicas);
  auto& s = out.summary;
  fit_into(s, curve.fit);
  s.scalars["estimate"] = curve.fit.slope;
  s.scalars["tier"] = tier.front();
  s.scalars["n"] = static_cast<double>(curve.ell.size());
  s.scalars["window_low"] = curve.window_low;
  s.scalars["window_high"] = curve.window_high;
  s.scalars["survival_at_zero"] = survival_at(curve, 0.0);
  s.scalars["mean_time"] = summarize(samples.front()).mean;
  for (double q : {0.5, 0.75, 0.9, 0.95, 0.99}) s.series["ell_quantiles"].push_back(quantile_sorted(curve.ell, q));
  return out;
}

ExperimentOutput run_wander(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto results = run_pairs(c, c.tiers, true, out);
  pair_rows(out, results, true);
  std::vector<WanderRecord> records;
  for (const auto& [replica, samples] : results) {
    for (const auto& p : samples) {
      WanderRecord r;
      r.norm = p.vertex_norm;
      r.tier = p.norm;
      r.hausdorff = p.hausdorff;
      records.push_back(std::move(r));
    }
  }
  const auto fit = wander_fit(records, c.wander_exponent);
  auto& s = out.summary;
  fit_into(s, fit.fit);
  s.scalars["estimate"] = fit.fit.slope;
  s.scalars["bound_exponent"] = c.wander_exponent;
  s.scalars["top_tier"] = fit.top_norm;
  s.scalars["top_violation_fraction"] = fit.top_violation_fraction;
  s.scalars["top_n"] = static_cast<double>(fit.top_n);
  s.scalars["n"] = static_cast<double>(records.size());
  for (double tier : c.tiers) {
    std::vector<double> values;
    for (const auto& r : records)
      if (r.tier == tier) values.push_back(r.hausdorff);
    s.series["tier"].push_back(tier);
    s.series["median_hausdorff"].push_back(values.empty() ? 0.0 : median(values));
  }
  return out;
}

double estimate_phi_phase(const ExperimentConfig& c, ExperimentOutput& out) {
  const double tier = c.phi_tier.value_or(c.tiers.back());
  const std::uint64_t seed = mix_seed({c.seed, 0x7068692d706861ULL});
  const ModelSpec model = c.model();
  const auto ids = replica_ids(0, c.phi_replicas);
  const std::vector<double> tiers{tier};
  ExperimentOutput phase;
  const auto results = collect(run_replicas<std::vector<PairSample>>(
                                   ids, c.jobs,
                                   [&](std::uint64_t r) { return measure_pairs(c, model, seed, r, tiers, false); }),
                               phase);
  for (const auto& [replica, msg] : phase.errors) out.errors.emplace_back(replica, "phi phase: " + msg);
  auto rng = make_stream(seed, 0, Purpose::kBootstrap);
  const auto est = estimate_phi(tier_samples(tiers, results), rng, c.bootstrap);
  out.summary.scalars["phi_ci_low"] = est.ci_low;
  out.summary.scalars["phi_ci_high"] = est.ci_high;
  out.summary.scalars["phi_tier"] = tier;
  out.summary.scalars["phi_samples"] = static_cast<double>(est.n);
  return est.phi;
}

struct ShapeReplica {
  std::vector<ShapeDeviation> deviations;
  std::vector<GrowthSet> sets;
  std::vector<std::size_t> members;
  double center_offset = 0.0;
};

ExperimentOutput run_shape(const ExperimentConfig& c) {
  ExperimentOutput out;
  const double phi = c.phi ? *c.phi : estimate_phi_phase(c, out);
  out.summary.labels["phi_source"] = c.phi ? "given" : "estimated";
  out.summary.scalars["phi"] = phi;
  std::vector<double> thresholds;
  for (double e : c.extents) thresholds.push_back(e / phi);

  const ModelSpec model = c.model();
  const auto ids = replica_ids(c.first_replica, c.replicas);
  const auto results = collect(run_replicas<ShapeReplica>(ids, c.jobs,
                                                          [&](std::uint64_t r) {
                                                            const Instance inst = make_instance(model, c.seed, r);
                                                            const Point o(model.dim, 0.0);
                                                            DijkstraLimits limits;
                                                            limits.max_distance = thresholds.back();
                                                            const auto tree = fpt_all_from(inst.graph, inst.labels,
                                                                                           inst.field, o, limits);
                                                            ShapeReplica rep;
                                                            rep.center_offset =
                                                                vector_norm(inst.graph.cloud().point(tree.source));
                                                            for (double t : thresholds) {
                                                              rep.sets.push_back(growth_set(inst.graph.cloud(),
                                                                                            inst.labels, tree.dist, t,
                                                                                            tree.source));
                                                              rep.members.push_back(rep.sets.back().members.size());
                                                              rep.sets.back().members.clear();
                                                              rep.deviations.push_back(
                                                                  shape_deviation(rep.sets.back(), phi));
                                                            }
                                                            return rep;
                                                          }),
                               out);

  out.header = {"extent",   "replica",  "threshold",     "phi_t",   "inner_radius", "outer_radius",
                "delta_out", "delta_in", "max_deviation", "members", "center_offset"};
  std::vector<ShapeDeviation> all;
  for (const auto& [replica, rep] : results) {
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      const auto& d = rep.deviations[k];
      const auto& g = rep.sets[k];
      all.push_back(d);
      out.rows.push_back({k, replica, 0,
                          {cell(c.extents[k]), cell(replica), cell(d.threshold), cell(d.phi_t), cell(g.inner_radius),
                           cell(g.outer_radius), cell(d.delta_out), cell(d.delta_in), cell(d.max_deviation),
                           cell(rep.members[k], 0), cell(rep.center_offset)}});
    }
  }
  const auto band = shape_band(all);
  auto& s = out.summary;
  fit_into(s, band.fit);
  s.scalars["estimate"] = band.fit.slope;
  s.scalars["strictly_decreasing"] = band.strictly_decreasing ? 1.0 : 0.0;
  s.scalars["n"] = static_cast<double>(results.size());
  for (std::size_t k = 0; k < band.tiers.size(); ++k) {
    s.series["extent"].push_back(c.extents[k]);
    s.series["threshold"].push_back(band.tiers[k].threshold);
    s.series["median_max_deviation"].push_back(band.tiers[k].median_max_deviation);
  }
  return out;
}

struct TreeReplica {
  std::vector<ConeScan> scans;
};

ExperimentOutput run_tree(const ExperimentConfig& c) {
  ExperimentOutput out;
  const ModelSpec model = c.model();
  const auto radii = c.effective_scan_radii();
  const auto ids = replica_ids(c.first_replica, c.replicas);
  const auto results = collect(run_replicas<TreeReplica>(ids, c.jobs,
                                                         [&](std::uint64_t r) {
                                                           const Instance inst = make_instance(model, c.seed, r);
                                                           auto rng = make_stream(c.seed, r, Purpose::kDirections);
                                                           const Point root =
                                                               random_in_ball(model.dim, model.side / 8.0, rng);
                                                           DijkstraLimits limits;
                                                           const auto tree = fpt_all_from(inst.graph, inst.labels,
                                                                                          inst.field, root, limits);
                                                           TreeReplica rep;
                                                           for (double radius : radii) {
                                                             ConeOptions opt;
                                                             opt.epsilon = c.cone_epsilon;
                                                             opt.scan_radius = radius;
                                                             opt.min_radius = c.cone_min_radius;
                                                             rep.scans.push_back(
                                                                 cone_scan(inst.graph.cloud(), tree, opt));
                                                             rep.scans.back().records.shrink_to_fit();
                                                           }
                                                           return rep;
                                                         }),
                               out);
  out.header = {"scan_radius", "replica", "min_radius", "checked", "violators", "violation_radius", "max_angle"};
  std::size_t stable = 0;
  for (const auto& [replica, rep] : results) {
    for (std::size_t k = 0; k < rep.scans.size(); ++k) {
      const auto& scan = rep.scans[k];
      double max_angle = 0.0;
      for (const auto& rec : scan.records) max_angle = std::max(max_angle, rec.angle);
      out.rows.push_back({k, replica, 0,
                          {cell(scan.scan_radius), cell(replica), cell(scan.min_radius),
                           cell(scan.records.size(), 0), cell(scan.violators.size(), 0),
                           cell(scan.violation_radius), cell(max_angle)}});
    }
    if (rep.scans.front().violators == rep.scans.back().violators) ++stable;
  }
  auto& s = out.summary;
  const double n = static_cast<double>(results.size());
  s.scalars["n"] = n;
  s.scalars["stabilized"] = static_cast<double>(stable);
  s.scalars["estimate"] = n > 0 ? static_cast<double>(stable) / n : 0.0;
  s.scalars["stabilized_fraction"] = s.scalars["estimate"];
  s.scalars["epsilon"] = c.cone_epsilon;
  s.scalars["min_radius"] = c.cone_min_radius.value_or(cone_min_radius(c.cone_epsilon));
  s.series["scan_radius"] = radii;
  s.labels["surrogate"] = "violation set restricted to the scan ball around the root";
  return out;
}

struct RayReplica {
  std::vector<std::pair<std::size_t, double>> bands;
};

ExperimentOutput run_rays(const ExperimentConfig& c) {
  ExperimentOutput out;
  const ModelSpec model = c.model();
  const auto radii = c.effective_band_radii();
  const double width = c.band_width.value_or(4.0 * model.radius);
  const auto ids = replica_ids(c.first_replica, c.replicas);
  const auto results = collect(run_replicas<RayReplica>(ids, c.jobs,
                                                        [&](std::uint64_t r) {
                                                          const Instance inst = make_instance(model, c.seed, r);
                                                          auto rng = make_stream(c.seed, r, Purpose::kDirections);
                                                          const Point root =
                                                              random_in_ball(model.dim, model.side / 8.0, rng);
                                                          const auto tree =
                                                              fpt_all_from(inst.graph, inst.labels, inst.field, root);
                                                          const auto children = tree_children(tree);
                                                          auto aux = make_stream(c.seed, r, Purpose::kAuxiliary);
                                                          RayReplica rep;
                                                          for (double radius : radii) {
                                                            const auto rays = ray_directions(
                                                                inst.graph.cloud(), tree, children, radius - width,
                                                                radius);
                                                            rep.bands.emplace_back(rays.size(),
                                                                                   direction_gap(rays, model.dim, aux));
                                                          }
                                                          return rep;
                                                        }),
                               out);
  out.header = {"band_radius", "replica", "band_width", "leaves", "gap"};
  std::vector<std::vector<double>> gaps(radii.size());
  for (const auto& [replica, rep] : results) {
    for (std::size_t k = 0; k < radii.size(); ++k) {
      gaps[k].push_back(rep.bands[k].second);
      out.rows.push_back({k, replica, 0,
                          {cell(radii[k]), cell(replica), cell(width), cell(rep.bands[k].first, 0),
                           cell(rep.bands[k].second)}});
    }
  }
  auto& s = out.summary;
  s.scalars["n"] = static_cast<double>(results.size());
  for (std::size_t k = 0; k < radii.size(); ++k) {
    s.series["band_radius"].push_back(radii[k]);
    s.series["median_gap"].push_back(gaps[k].empty() ? 0.0 : median(gaps[k]));
  }
  if (!results.empty()) {
    s.scalars["estimate"] = s.series["median_gap"].back();
    s.scalars["gap_shrinks"] = s.series["median_gap"].back() < s.series["median_gap"].front() ? 1.0 : 0.0;
  }
  s.labels["surrogate"] = "tree-leaf directions in an annulus stand in for asymptotic directions";
  return out;
}

struct HoleReplica {
  double diameter = 0.0;
  double giant_fraction = 0.0;
};

ExperimentOutput run_holes(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto ids = replica_ids(c.first_replica, c.replicas);
  const double margin = c.hole_margin.value_or(5.0 * c.radius);
  out.header = {"side", "replica", "resolution", "diameter", "diameter_over_log", "giant_fraction"};
  std::vector<double> medians;
  for (std::size_t k = 0; k < c.hole_sides.size(); ++k) {
    const double side = c.hole_sides[k];
    ModelSpec model = c.model();
    model.side = side + 2.0 * margin;
    std::uint64_t bits = 0;
    std::memcpy(&bits, &side, sizeof bits);
    const std::uint64_t seed = mix_seed({c.seed, bits});
    const auto results =
        collect(run_replicas<HoleReplica>(ids, c.jobs,
                                          [&](std::uint64_t r) {
                                            const BoxDomain domain(model.dim, model.side);
                                            auto rng = make_stream(seed, r, Purpose::kPoints);
                                            const auto graph =
                                                build_rgg(sample_ppp(domain, model.intensity, rng, model.radius),
                                                          model.radius);
                                            const auto labels = components(graph);
                                            const auto scan = hole_diameter(graph, labels, side, c.hole_resolution);
                                            return HoleReplica{scan.diameter,
                                                               static_cast<double>(labels.giant_size()) /
                                                                   static_cast<double>(graph.num_vertices())};
                                          }),
                out);
    std::vector<double> ratios;
    for (const auto& [replica, rep] : results) {
      const double ratio = rep.diameter / std::log(side);
      ratios.push_back(ratio);
      out.rows.push_back({k, replica, 0,
                          {cell(side), cell(replica), cell(c.hole_resolution), cell(rep.diameter), cell(ratio),
                           cell(rep.giant_fraction)}});
    }
    medians.push_back(ratios.empty() ? 0.0 : median(ratios));
  }
  auto& s = out.summary;
  s.series["side"] = c.hole_sides;
  s.series["median_diameter_over_log"] = medians;
  double worst = 0.0;
  for (std::size_t k = 1; k < medians.size(); ++k) {
    const double lo = std::min(medians[k - 1], medians[k]);
    const double hi = std::max(medians[k - 1], medians[k]);
    worst = std::max(worst, lo > 0.0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity());
  }
  s.scalars["max_adjacent_variation"] = worst;
  s.scalars["estimate"] = medians.empty() ? 0.0 : medians.back();
  s.scalars["n"] = static_cast<double>(ids.size());
  return out;
}

ExperimentOutput run_perc_scan(const ExperimentConfig& c) {
  ExperimentOutput out;
  out.sort_rows = true;
  const auto ids = replica_ids(c.first_replica, c.replicas);
  out.header = {"r", "giant_fraction", "second_component_fraction"};
  for (std::size_t k = 0; k < c.scan_r.size(); ++k) {
    ModelSpec model = c.model();
    model.radius = c.scan_r[k];
    const auto results = collect(
        run_replicas<std::pair<double, double>>(ids, c.jobs,
                                                [&](std::uint64_t r) {
                                                  const BoxDomain domain(model.dim, model.side);
                                                  auto rng = make_stream(c.seed, r, Purpose::kPoints);
                                                  const auto graph = build_rgg(
                                                      sample_ppp(domain, model.intensity, rng, model.radius),
                                                      model.radius);
                                                  const auto labels = components(graph);
                                                  const double n = std::max<double>(1.0, graph.num_vertices());
                                                  return std::make_pair(
                                                      static_cast<double>(labels.giant_size()) / n,
                                                      static_cast<double>(labels.second_size()) / n);
                                                }),
        out);
    double g = 0.0, s2 = 0.0;
    for (const auto& [replica, v] : results) {
      g += v.first;
      s2 += v.second;
    }
    const double n = std::max<double>(1.0, static_cast<double>(results.size()));
    out.rows.push_back({k, 0, 0, {cell(c.scan_r[k]), cell(g / n), cell(s2 / n)}});
    out.summary.series["r"].push_back(c.scan_r[k]);
    out.summary.series["giant_fraction"].push_back(g / n);
    out.summary.series["second_component_fraction"].push_back(s2 / n);
  }
  out.summary.scalars["n"] = static_cast<double>(ids.size());
  return out;
}

struct AugmentedReplica {
  std::vector<DiscrepancyRow> rows;
  StructuralTally tally;
};

ExperimentOutput run_augmented(const ExperimentConfig& c) {
  ExperimentOutput out;
  const ModelSpec model = c.model();
  const double kappa = c.effective_kappa();
  const auto ids = replica_ids(c.first_replica, c.replicas);
  const auto results =
      collect(run_replicas<AugmentedReplica>(ids, c.jobs,
                                             [&](std::uint64_t r) {
                                               const Instance inst = make_instance(model, c.seed, r);
                                               auto rng = make_stream(c.seed, r, Purpose::kDirections);
                                               std::vector<Point> targets;
                                               for (double norm : c.aug_norms)
                                                 targets.push_back(scaled(random_direction(model.dim, rng), norm));
                                               DiscrepancyOptions opt;
                                               opt.delta = c.delta;
                                               opt.fixed_budget = c.fixed_budget;
                                               AugmentedReplica rep;
                                               rep.rows = discrepancy_rates(inst.graph, inst.labels, inst.field,
                                                                            targets, c.spacings, kappa, opt, rep.tally);
                                               return rep;
                                             }),
              out);
  out.header = {"x_norm", "t", "kappa", "y_ne_tt", "tt_ne_t", "qshift_gap"};
  StructuralTally tally;
  const std::size_t nx = c.aug_norms.size();
  std::vector<double> y_ne(c.spacings.size() * nx, 0.0), tt_ne(c.spacings.size() * nx, 0.0),
      gap(c.spacings.size() * nx, 0.0);
  for (const auto& [replica, rep] : results) {
    tally += rep.tally;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& row = rep.rows[i];
      y_ne[i] += row.y_ne_tt ? 1.0 : 0.0;
      tt_ne[i] += row.tt_ne_t ? 1.0 : 0.0;
      gap[i] += row.qshift_gap;
      out.rows.push_back({0, replica, i,
                          {cell(row.x_norm), cell(row.spacing), cell(row.kappa),
                           cell(static_cast<std::uint64_t>(row.y_ne_tt)), cell(static_cast<std::uint64_t>(row.tt_ne_t)),
                           cell(row.qshift_gap)}});
    }
  }
  auto& s = out.summary;
  const double n = std::max<double>(1.0, static_cast<double>(results.size()));
  for (std::size_t k = 0; k < c.spacings.size(); ++k) {
    for (std::size_t j = 0; j < nx; ++j) {
      s.series["t"].push_back(c.spacings[k]);
      s.series["x_norm"].push_back(c.aug_norms[j]);
      s.series["freq_y_ne_tt"].push_back(y_ne[k * nx + j] / n);
      s.series["freq_tt_ne_t"].push_back(tt_ne[k * nx + j] / n);
      s.series["mean_qshift_gap"].push_back(gap[k * nx + j] / n);
    }
  }
  s.scalars["n"] = static_cast<double>(results.size());
  s.scalars["kappa"] = kappa;
  s.scalars["delta"] = c.delta;
  s.scalars["hop_checks"] = static_cast<double>(tally.hop_checks);
  s.scalars["hop_violations"] = static_cast<double>(tally.hop_violations);
  s.scalars["y_bound_checks"] = static_cast<double>(tally.y_bound_checks);
  s.scalars["y_bound_violations"] = static_cast<double>(tally.y_bound_violations);
  s.scalars["box_checks"] = static_cast<double>(tally.box_checks);
  s.scalars["box_violations"] = static_cast<double>(tally.box_violations);
  s.scalars["excursion_checks"] = static_cast<double>(tally.excursion_checks);
  s.scalars["excursion_violations"] = static_cast<double>(tally.excursion_violations);
  s.scalars["structural_violations"] = static_cast<double>(tally.violations());
  s.scalars["estimate"] = static_cast<double>(tally.violations());
  return out;
}

// ---------------------------------------------------------------------------
// Validation helpers

void check_ascending(std::vector<ConfigError>& errors, const std::string& field, const std::vector<double>& values,
                     std::size_t min_count = 1) {
  if (values.size() < min_count) {
    errors.push_back({field, "needs at least " + std::to_string(min_count) + " values"});
    return;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) errors.push_back({field, "value " + format_double(values[i]) + " must be positive"});
    if (i > 0 && !(values[i] > values[i - 1])) {
      errors.push_back({field, "values must be strictly ascending"});
      break;
    }
  }
}

void check_within(std::vector<ConfigError>& errors, const std::string& field, const std::vector<double>& values,
                  double limit, double factor, const std::string& what) {
  for (double v : values)
    if (v * factor > limit)
      errors.push_back({field, "tier " + format_double(v) + " exceeds L/4 = " + format_double(limit) + what});
}

Json summary_json(const std::string& experiment, const Summary& s) {
  Json j = Json::object();
  j["experiment"] = experiment;
  for (const auto& [k, v] : s.scalars) j[k] = std::isfinite(v) ? Json(v) : Json(format_double(v));
  for (const auto& [k, v] : s.labels) j[k] = v;
  for (const char* key : {"estimate", "slope", "r2", "n"})
    if (!j.contains(key)) j[key] = nullptr;
  if (s.scalars.count("ci_low") && s.scalars.count("ci_high"))
    j["ci"] = {s.scalars.at("ci_low"), s.scalars.at("ci_high")};
  else
    j["ci"] = nullptr;
  Json series = Json::object();
  for (const auto& [k, v] : s.series) series[k] = v;
  j["series"] = series;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API

ConfigInvalid::ConfigInvalid(std::vector<ConfigError> errors)
    : std::invalid_argument([&] {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  " + e.field + ": " + e.message;
        return msg;
      }()),
      errors_(std::move(errors)) {}

ModelSpec ExperimentConfig::model() const {
  ModelSpec m;
  m.dim = dim;
  m.intensity = intensity;
  m.radius = radius;
  m.side = side;
  m.distribution = PassageDistribution::parse(distribution);
  return m;
}

std::vector<double> ExperimentConfig::effective_scan_radii() const {
  return scan_radii.empty() ? std::vector<double>{side / 8.0, side / 4.0} : scan_radii;
}

std::vector<double> ExperimentConfig::effective_band_radii() const {
  return band_radii.empty() ? std::vector<double>{side / 8.0, side / 4.0} : band_radii;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"perc-scan", "phi",   "variance", "tails", "shape",
                                              "wander",    "tree",  "rays",     "holes", "augmented-compare"};
  return names;
}

ExperimentConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw invalid("", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw invalid("", "top-level JSON value must be an object");
    for (const auto& [section, body] : j.items()) {
      if (!body.is_object()) throw invalid(section, "section must be a JSON object");
      for (const auto& [key, value] : body.items()) entries.emplace_back(section + "." + key, json_scalar(value));
    }
  } else {
    boost::property_tree::ptree tree;
    std::istringstream in{std::string(text)};
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw invalid("line " + std::to_string(e.line()), e.message());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) {
        entries.emplace_back(section, body.data());
        continue;
      }
      for (const auto& [key, value] : body) entries.emplace_back(section + "." + key, value.data());
    }
  }
  return apply_entries(entries);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid("--config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<ConfigError> validate(const ExperimentConfig& c, std::string_view experiment) {
  std::vector<ConfigError> errors;
  const auto& names = experiment_names();
  const std::string exp(experiment);
  if (std::find(names.begin(), names.end(), exp) == names.end()) errors.push_back({"experiment", "unknown experiment '" + exp + "'"});
  if (c.dim < 2) errors.push_back({"model.dim", "dimension must be at least 2"});
  if (!(c.intensity > 0.0) || !std::isfinite(c.intensity)) errors.push_back({"model.intensity", "intensity must be positive"});
  if (!(c.radius > 0.0) || !std::isfinite(c.radius)) errors.push_back({"model.radius", "radius must be positive"});
  if (!(c.side > 0.0) || !std::isfinite(c.side)) errors.push_back({"model.side", "box side must be positive"});
  if (c.replicas < 1) errors.push_back({"run.replicas", "replicas must be positive"});
  if (c.jobs < 1) errors.push_back({"run.jobs", "jobs must be positive"});
  if (c.output.empty()) errors.push_back({"run.output", "output directory must be set"});
  try {
    (void)PassageDistribution::parse(c.distribution);
  } catch (const DistributionRejected& e) {
    errors.push_back({"model.distribution", e.what()});
  }
  if (!errors.empty()) return errors;

  const double quarter = c.side / 4.0;
  const std::string pair_note = " (pair endpoints sit at +-tier/2 around the center)";
  const bool pairs = exp == "phi" || exp == "variance" || exp == "tails" || exp == "wander" ||
                     (exp == "shape" && !c.phi);
  if (pairs) {
    if (c.directions < 1) errors.push_back({"tiers.directions", "directions must be positive"});
    check_ascending(errors, "tiers.distances", c.tiers);
    check_within(errors, "tiers.distances", c.tiers, quarter, 0.5, pair_note);
  }
  const std::size_t samples = c.replicas * c.directions;
  if (exp == "phi" && samples < 10) errors.push_back({"run.replicas", "phi needs at least 10 samples per tier"});
  if (exp == "variance") {
    check_ascending(errors, "tiers.distances", c.tiers, kMinFitTiers);
    if (samples < 100) errors.push_back({"run.replicas", "variance needs at least 100 samples per tier"});
  }
  if (exp == "tails") {
    const double tier = c.tail_tier.value_or(c.tiers.empty() ? 0.0 : c.tiers.back());
    if (!(tier > 0.0)) errors.push_back({"tails.tier", "tail tier must be positive"});
    check_within(errors, "tails.tier", {tier}, quarter, 0.5, pair_note);
    if (!(c.tail_low_quantile >= 0.0 && c.tail_low_quantile < c.tail_high_quantile && c.tail_high_quantile <= 1.0))
      errors.push_back({"tails.window_low_quantile", "window quantiles need 0 <= low < high <= 1"});
    if (samples < c.tail_min_replicas)
      errors.push_back({"run.replicas", "tails needs at least " + std::to_string(c.tail_min_replicas) + " samples"});
  }
  if (exp == "wander") {
    check_ascending(errors, "tiers.distances", c.tiers, kMinFitTiers);
    if (!(c.wander_exponent > 0.0 && c.wander_exponent <= 1.0))
      errors.push_back({"wander.exponent", "exponent must lie in (0, 1]"});
    if (c.wander_pitch && !(*c.wander_pitch > 0.0)) errors.push_back({"wander.pitch", "pitch must be positive"});
  }
  if (exp == "shape") {
    check_ascending(errors, "shape.extents", c.extents, kMinFitTiers);
    check_within(errors, "shape.extents", c.extents, quarter, 1.0, "");
    if (c.phi && !(*c.phi > 0.0)) errors.push_back({"shape.phi", "phi must be positive"});
    if (!c.phi) {
      if (c.phi_replicas * c.directions < 10) errors.push_back({"shape.phi_replicas", "phi phase needs at least 10 samples"});
      if (c.phi_tier) check_within(errors, "shape.phi_tier", {*c.phi_tier}, quarter, 0.5, pair_note);
    }
  }
  if (exp == "tree") {
    if (!(c.cone_epsilon > 0.0 && c.cone_epsilon < 0.25)) errors.push_back({"tree.epsilon", "epsilon must lie in (0, 1/4)"});
    if (c.cone_min_radius && !(*c.cone_min_radius >= 0.0)) errors.push_back({"tree.min_radius", "must be >= 0"});
    const auto radii = c.effective_scan_radii();
    check_ascending(errors, "tree.scan_radii", radii, 2);
    check_within(errors, "tree.scan_radii", radii, quarter, 1.0, "");
  }
  if (exp == "rays") {
    const auto radii = c.effective_band_radii();
    check_ascending(errors, "rays.band_radii", radii, 2);
    check_within(errors, "rays.band_radii", radii, quarter, 1.0, "");
    const double width = c.band_width.value_or(4.0 * c.radius);
    if (!(width > 0.0) || (!radii.empty() && !(width < radii.front())))
      errors.push_back({"rays.band_width", "band width must be positive and below the smallest band radius"});
  }
  if (exp == "holes") {
    check_ascending(errors, "holes.sides", c.hole_sides, 2);
    for (double s : c.hole_sides)
      if (!(s > 1.0)) errors.push_back({"holes.sides", "box sides must exceed 1 so log L > 0"});
    if (!(c.hole_resolution > 0.0)) errors.push_back({"holes.resolution", "resolution must be positive"});
    if (c.hole_margin && !(*c.hole_margin >= 0.0)) errors.push_back({"holes.margin", "margin must be >= 0"});
  }
  if (exp == "perc-scan") check_ascending(errors, "perc-scan.radii", c.scan_r);
  if (exp == "augmented-compare") {
    check_ascending(errors, "augmented.spacings", c.spacings);
    for (double t : c.spacings)
      if (!(t >= 1.0)) errors.push_back({"augmented.spacings", "spacing " + format_double(t) + " must be >= 1"});
    if (!(c.effective_kappa() > 1.0)) errors.push_back({"augmented.kappa", "kappa must be > 1"});
    if (!(c.delta > 0.0)) errors.push_back({"augmented.delta", "delta must be positive"});
    check_ascending(errors, "augmented.norms", c.aug_norms);
    check_within(errors, "augmented.norms", c.aug_norms, quarter, 1.0, "");
    if (c.fixed_budget && *c.fixed_budget < 1) errors.push_back({"augmented.budget", "budget must be positive"});
  }
  return errors;
}

std::string config_to_json(const ExperimentConfig& c) {
  auto opt = [](const auto& o) { return o ? Json(*o) : Json(nullptr); };
  Json j;
  j["model"] = {{"dim", c.dim}, {"intensity", c.intensity}, {"radius", c.radius}, {"side", c.side},
                {"distribution", c.distribution}};
  j["run"] = {{"seed", c.seed}, {"replicas", c.replicas}, {"first_replica", c.first_replica}, {"jobs", c.jobs},
              {"output", c.output}};
  j["tiers"] = {{"distances", c.tiers}, {"directions", c.directions}};
  j["phi"] = {{"bootstrap", c.bootstrap}};
  j["shape"] = {{"extents", c.extents}, {"phi", opt(c.phi)}, {"phi_replicas", c.phi_replicas},
                {"phi_tier", opt(c.phi_tier)}};
  j["tails"] = {{"tier", opt(c.tail_tier)}, {"window_low_quantile", c.tail_low_quantile},
                {"window_high_quantile", c.tail_high_quantile}, {"min_replicas", c.tail_min_replicas}};
  j["wander"] = {{"exponent", c.wander_exponent}, {"pitch", opt(c.wander_pitch)},
                 {"min_replicas", c.wander_min_replicas}};
  j["tree"] = {{"epsilon", c.cone_epsilon}, {"min_radius", opt(c.cone_min_radius)}, {"scan_radii", c.scan_radii}};
  j["rays"] = {{"band_radii", c.band_radii}, {"band_width", opt(c.band_width)}};
  j["holes"] = {{"sides", c.hole_sides}, {"resolution", c.hole_resolution}, {"margin", opt(c.hole_margin)}};
  j["perc-scan"] = {{"radii", c.scan_r}};
  j["augmented"] = {{"spacings", c.spacings}, {"kappa", opt(c.kappa)}, {"delta", c.delta}, {"norms", c.aug_norms},
                    {"budget", opt(c.fixed_budget)}};
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double Summary::at(const std::string& key) const {
  const auto it = scalars.find(key);
  if (it == scalars.end()) throw std::out_of_range("summary has no scalar '" + key + "'");
  return it->second;
}

void write_file_atomically(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunResult run(const ExperimentConfig& config, std::string_view experiment) {
  auto errors = validate(config, experiment);
  if (!errors.empty()) throw ConfigInvalid(std::move(errors));
  const std::string exp(experiment);
  const std::string started = iso_now();

  static const std::map<std::string, std::function<ExperimentOutput(const ExperimentConfig&)>> dispatch{
      {"perc-scan", run_perc_scan}, {"phi", run_phi},     {"variance", run_variance}, {"tails", run_tails},
      {"shape", run_shape},         {"wander", run_wander}, {"tree", run_tree},         {"rays", run_rays},
      {"holes", run_holes},         {"augmented-compare", run_augmented}};

  ExperimentOutput out;
  std::string summary_error;
  try {
    out = dispatch.at(exp)(config);
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const std::exception& e) {
    summary_error = e.what();
  }

  const std::filesystem::path dir(config.output);
  std::filesystem::create_directories(dir);
  RunResult result;
  result.experiment = exp;
  result.data_csv = dir / (exp + ".csv");
  result.summary_json = dir / (exp + "_summary.json");
  result.manifest_json = dir / "manifest.json";

  if (out.sort_rows)
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.tier, a.replica, a.seq) < std::tie(b.tier, b.replica, b.seq);
    });
  std::ostringstream data;
  if (!out.header.empty()) {
    CsvWriter csv(data, out.header);
    for (const auto& row : out.rows) {
      for (const auto& c : row.cells) csv.field(std::string_view(c));
      csv.end_row();
    }
  }
  write_file_atomically(result.data_csv, data.str());
  result.records = out.rows.size();

  if (!summary_error.empty()) out.errors.emplace_back(std::numeric_limits<std::uint64_t>::max(), summary_error);
  std::sort(out.wall.begin(), out.wall.end());
  const auto errors_csv = dir / "errors.csv";
  if (!out.errors.empty()) {
    std::ostringstream err;
    CsvWriter csv(err, {"replica", "message"});
    for (const auto& [replica, msg] : out.errors) {
      if (replica == std::numeric_limits<std::uint64_t>::max())
        csv.field("summary");
      else
        csv.field(replica);
      csv.field(std::string_view(msg)).end_row();
    }
    write_file_atomically(errors_csv, err.str());
  } else if (std::filesystem::exists(errors_csv)) {
    std::filesystem::remove(errors_csv);
  }
  result.failed_replicas = out.errors.size();
  result.exit_code = out.errors.empty() ? 0 : 3;
  result.summary = out.summary;

  if (summary_error.empty()) write_file_atomically(result.summary_json, summary_json(exp, out.summary).dump(2) + "\n");

  Json manifest;
  manifest["experiment"] = exp;
  manifest["version"] = kVersion;
  manifest["config"] = Json::parse(config_to_json(config));
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
  manifest["config_hash"] = hash.str();
  manifest["seed"] = config.seed;
  manifest["started_at"] = started;
  manifest["finished_at"] = iso_now();
  manifest["records"] = {{result.data_csv.filename().string(), result.records},
                         {"errors.csv", out.errors.size()}};
  manifest["failed_replicas"] = out.errors.size();
  Json wall = Json::array();
  for (const auto& [replica, seconds] : out.wall) wall.push_back({{"replica", replica}, {"seconds", seconds}});
  manifest["replica_wall_seconds"] = wall;
  manifest["files"] = {result.data_csv.filename().string(), result.summary_json.filename().string()};
  write_file_atomically(result.manifest_json, manifest.dump(2) + "\n");
  return result;
}

}  // namespace rggfpp
