#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "flysafe/harness.hpp"

namespace {

int simulate(const std::optional<std::string>& config_path, const std::string& out_dir,
             const std::optional<int>& runs, const std::optional<std::uint64_t>& seed,
             const std::optional<std::string>& preset_name) {
  flysafe::ScenarioConfig cfg = preset_name ? flysafe::preset(*preset_name) : flysafe::ScenarioConfig{};
  if (config_path) cfg = flysafe::load_config(*config_path, cfg);
  if (runs) cfg.runs = *runs;
  if (seed) cfg.seed = *seed;
  flysafe::validate(cfg);

  const auto report = flysafe::run_campaign(cfg, out_dir);
  const auto& psi = report.summary.at("psi_s");
  std::cout << "runs " << cfg.runs << ", seeds " << cfg.seed << ".." << cfg.seed + cfg.runs - 1
            << ", mean psi " << psi.mean << " s of " << cfg.sim_time_s << " s\n";
  std::cout << "wrote " << report.files.size() << " files to " << out_dir << '\n';
  return 0;
}

int compare(const std::string& a, const std::string& b, bool as_json) {
  const auto deltas = flysafe::compare(flysafe::load_summary(a), flysafe::load_summary(b));
  if (as_json) {
    std::cout << flysafe::deltas_json(deltas).dump(2) << '\n';
  } else {
    std::cout << flysafe::format_deltas(deltas);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FANET location-sharing simulator"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run a seeded campaign and write CSV/JSON results");
  std::optional<std::string> config_path;
  std::string out_dir;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset_name;
  sim->add_option("--config", config_path, "scenario JSON, overlaid on the preset if both are given")
      ->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "base seed");
  sim->add_option("--preset", preset_name, "baseline or baseattk")
      ->check(CLI::IsMember({"baseline", "baseattk"}));

  auto* cmp = app.add_subcommand("compare", "per-metric deltas between two summary.json files");
  std::string a, b;
  bool as_json = false;
  cmp->add_option("a", a, "reference summary.json")->required();
  cmp->add_option("b", b, "summary.json to compare")->required();
  cmp->add_flag("--json", as_json, "emit JSON instead of a table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return simulate(config_path, out_dir, runs, seed, preset_name);
    if (*cmp) return compare(a, b, as_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
