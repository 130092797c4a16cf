#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unistd.h>

#include "rggfpp/harness.hpp"

using namespace rggfpp;
namespace fs = std::filesystem;

namespace {

constexpr const char* kTiny = R"(
[model]
side = 120
radius = 2
[run]
seed = 7
replicas = 12
[tiers]
distances = 10, 20, 30
[shape]
extents = 10, 20, 30
phi_replicas = 12
[tree]
min_radius = 5
[holes]
sides = 20, 40
)";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rggfpp-harness-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig tiny(const std::string& out) {
  auto c = parse_config(kTiny);
  c.output = scratch(out).string();
  return c;
}

std::vector<ConfigError> errors_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigInvalid& e) {
    return e.errors();
  }
  return {};
}

bool mentions(const std::vector<ConfigError>& errs, const std::string& field, const std::string& needle) {
  for (const auto& e : errs)
    if (e.field == field && e.message.find(needle) != std::string::npos) return true;
  return false;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RGGFPP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesIni) {
  const auto c = parse_config(kTiny);
  EXPECT_EQ(c.side, 120.0);
  EXPECT_EQ(c.radius, 2.0);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.replicas, 12u);
  EXPECT_EQ(c.tiers, (std::vector<double>{10, 20, 30}));
  EXPECT_EQ(c.cone_min_radius, 5.0);
  EXPECT_EQ(c.intensity, 1.0);
  EXPECT_EQ(c.distribution, "exponential(1)");
}

TEST(Config, JsonMatchesIni) {
  const auto json = R"({"model": {"side": 120, "radius": 2}, "run": {"seed": 7, "replicas": 12},
    "tiers": {"distances": [10, 20, 30]}, "shape": {"extents": [10, 20, 30], "phi_replicas": 12},
    "tree": {"min_radius": 5}, "holes": {"sides": [20, 40]}})";
  const auto a = parse_config(kTiny), b = parse_config(json);
  EXPECT_EQ(config_to_json(a), config_to_json(b));
  EXPECT_EQ(config_hash(a), config_hash(b));
  auto c = a;
  c.radius = 2.5;
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Config, RejectsUnknownAndMalformed) {
  EXPECT_TRUE(mentions(errors_of("[model]\nbogus = 3\n"), "model.bogus", "unknown"));
  EXPECT_TRUE(mentions(errors_of("[nowhere]\nside = 3\n"), "nowhere.side", "unknown"));
  EXPECT_FALSE(errors_of("[model]\nradius = abc\n").empty());
  EXPECT_FALSE(errors_of("[tiers]\ndistances = 10, x\n").empty());
  EXPECT_FALSE(errors_of("{\"model\": [1, 2]").empty());
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigInvalid);
}

TEST(Config, ValidationNamesFields) {
  auto c = parse_config(kTiny);
  EXPECT_TRUE(validate(c, "phi").empty());
  c.intensity = -1;
  EXPECT_TRUE(mentions(validate(c, "phi"), "model.intensity", "intensity must be positive"));
  c = parse_config(kTiny);
  c.tiers = {10, 20, 60};
  EXPECT_TRUE(validate(c, "phi").empty());
  c.tiers = {10, 20, 70};
  EXPECT_TRUE(mentions(validate(c, "phi"), "tiers.distances", "tier 70 exceeds L/4 = 30"));
  c = parse_config(kTiny);
  c.distribution = "uniform(0, 1)";
  EXPECT_TRUE(mentions(validate(c, "phi"), "model.distribution", "P(tau = 0) = 0"));
  c.distribution = "uniform(1, inf)";
  EXPECT_TRUE(mentions(validate(c, "phi"), "model.distribution", "E[exp(eta*tau)] < inf"));
  c = parse_config(kTiny);
  EXPECT_TRUE(mentions(validate(c, "variance"), "run.replicas", "at least 100"));
  EXPECT_TRUE(mentions(validate(c, "nonsense"), "experiment", "unknown experiment"));
  c.kappa = 1.0;
  EXPECT_TRUE(mentions(validate(c, "augmented-compare"), "augmented.kappa", "kappa must be > 1"));
  c = parse_config(kTiny);
  c.tiers = {10, 20};
  EXPECT_FALSE(validate(c, "wander").empty());
  c.output = scratch("never").string();
  EXPECT_THROW(run(c, "wander"), ConfigInvalid);
  EXPECT_FALSE(fs::exists(c.output));
}

TEST(Run, WritesCsvSummaryAndManifest) {
  const auto c = tiny("phi");
  const auto r = run(c, "phi");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.failed_replicas, 0u);
  EXPECT_EQ(r.records, 36u);
  ASSERT_TRUE(fs::exists(r.data_csv));
  EXPECT_FALSE(fs::exists(fs::path(c.output) / "errors.csv"));

  std::istringstream csv(slurp(r.data_csv));
  std::string header, line;
  std::getline(csv, header);
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 36u);
  EXPECT_NE(header.find("replica"), std::string::npos);

  const auto summary = nlohmann::json::parse(slurp(r.summary_json));
  for (const char* key : {"estimate", "slope", "r2", "n", "ci", "series"}) EXPECT_TRUE(summary.contains(key)) << key;
  ASSERT_TRUE(summary["ci"].is_array());
  EXPECT_LE(summary["ci"][0].get<double>(), summary["estimate"].get<double>());
  EXPECT_GE(summary["ci"][1].get<double>(), summary["estimate"].get<double>());

  const auto manifest = nlohmann::json::parse(slurp(r.manifest_json));
  EXPECT_EQ(manifest["experiment"], "phi");
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["config"], nlohmann::json::parse(config_to_json(c)));
  EXPECT_EQ(manifest["replica_wall_seconds"].size(), 12u);
  EXPECT_EQ(manifest["records"]["phi.csv"], 36);
  for (const char* key : {"version", "config_hash", "started_at", "finished_at"})
    EXPECT_TRUE(manifest.contains(key)) << key;
}

TEST(Run, DeterministicAcrossRerunsAndJobs) {
  for (const char* exp : {"phi", "tree", "shape"}) {
    auto a = tiny(std::string("det-a-") + exp);
    auto b = tiny(std::string("det-b-") + exp);
    auto c = tiny(std::string("det-c-") + exp);
    c.jobs = 3;
    const auto ra = run(a, exp), rb = run(b, exp), rc = run(c, exp);
    const auto bytes = slurp(ra.data_csv);
    EXPECT_FALSE(bytes.empty());
    EXPECT_EQ(bytes, slurp(rb.data_csv)) << exp;
    EXPECT_EQ(bytes, slurp(rc.data_csv)) << exp;
    EXPECT_EQ(slurp(ra.summary_json), slurp(rc.summary_json)) << exp;
  }
}

TEST(Run, FirstReplicaOffsetSelectsSameStreams) {
  auto all = tiny("offset-all");
  all.replicas = 22;
  auto tail = tiny("offset-tail");
  tail.first_replica = 12;
  tail.replicas = 10;
  const auto a = slurp(run(all, "phi").data_csv), b = slurp(run(tail, "phi").data_csv);
  std::istringstream sa(a), sb(b);
  std::string line;
  std::set<std::string> rows;
  while (std::getline(sa, line)) rows.insert(line);
  std::size_t n = 0;
  while (std::getline(sb, line)) {
    EXPECT_TRUE(rows.count(line)) << line;
    ++n;
  }
  EXPECT_EQ(n, 31u);
}

TEST(Run, FailedReplicasGoToErrorsCsv) {
  auto c = tiny("fail");
  c.intensity = 1e-9;
  const auto r = run(c, "phi");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_GT(r.failed_replicas, 0u);
  const auto errors = slurp(fs::path(c.output) / "errors.csv");
  EXPECT_EQ(errors.rfind("replica,message", 0), 0u);
  EXPECT_TRUE(fs::exists(r.manifest_json));

  c.intensity = 1.0;
  EXPECT_EQ(run(c, "phi").exit_code, 0);
  EXPECT_FALSE(fs::exists(fs::path(c.output) / "errors.csv"));
}

TEST(Run, AtomicWriteReplacesContents) {
  const auto dir = scratch("atomic");
  fs::create_directories(dir);
  write_file_atomically(dir / "f.txt", "first");
  write_file_atomically(dir / "f.txt", "second");
  EXPECT_EQ(slurp(dir / "f.txt"), "second");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  std::ofstream(dir / "tiny.ini") << kTiny;
  std::ofstream(dir / "bad.ini") << "[model]\nintensity = -1\n";
  const auto cfg = (dir / "tiny.ini").string();
  const auto out = (dir / "out").string();
  EXPECT_EQ(run_cli("phi --config " + cfg + " --out " + out), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "phi.csv"));
  EXPECT_EQ(run_cli("phi --config " + (dir / "bad.ini").string() + " --out " + out), 2);
  EXPECT_EQ(run_cli("phi --config " + (dir / "missing.ini").string()), 2);
  EXPECT_EQ(run_cli("nonsense --config " + cfg), 2);
  EXPECT_EQ(run_cli("phi"), 2);
  EXPECT_EQ(run_cli("phi --config " + cfg + " --out " + out + " --replicas 11 --seed 9 --jobs 2"), 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 9);
  EXPECT_EQ(manifest["config"]["run"]["replicas"], 11);
}
