#include <CLI11.hpp>
#include <iostream>

#include "rggfpp/harness.hpp"

namespace {

constexpr int kConfigError = 2;

std::string experiment_list() {
  std::string s;
  for (const auto& name : rggfpp::experiment_names()) s += (s.empty() ? "" : ", ") + name;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for first-passage percolation on random geometric graphs"};
  app.set_version_flag("--version", "rggfpp 0.1.0");

  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out_dir;

  app.add_option("experiment", experiment, "One of: " + experiment_list())
      ->required()
      ->check(CLI::IsMember(rggfpp::experiment_names()));
  app.add_option("--config", config_path, "INI or JSON configuration file")->required();
  app.add_option("--seed", seed, "Master seed (overrides run.seed)");
  app.add_option("--replicas", replicas, "Replica count (overrides run.replicas)");
  app.add_option("--jobs", jobs, "Worker threads (overrides run.jobs)");
  app.add_option("--out", out_dir, "Output directory (overrides run.output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    auto config = rggfpp::load_config(config_path);
    if (seed) config.seed = *seed;
    if (replicas) config.replicas = *replicas;
    if (jobs) config.jobs = *jobs;
    if (out_dir) config.output = *out_dir;

    const auto result = rggfpp::run(config, experiment);
    std::cout << experiment << ": " << result.records << " records -> " << result.data_csv.string() << "\n";
    if (result.failed_replicas > 0)
      std::cerr << result.failed_replicas << " replica(s) failed; see "
                << (result.data_csv.parent_path() / "errors.csv").string() << "\n";
    return result.exit_code;
  } catch (const rggfpp::ConfigInvalid& e) {
    for (const auto& err : e.errors()) std::cerr << "config error: " << err.field << ": " << err.message << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
