// Command-line front end: run experiments, plot their CSV, run the property suite.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "ocdm/experiment.hpp"
#include "ocdm/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> workers, std::optional<std::string> out) {
  ocdm::RunConfig cfg = ocdm::load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.output = *out;
  int n = workers.value_or(cfg.workers);
  if (n <= 0) n = ocdm::default_worker_count();
  // The config value caps the machine default.
  if (!workers && cfg.workers > 0) n = std::min(n, ocdm::default_worker_count());

  const auto rows = ocdm::run_experiment(cfg, n);
  std::ofstream os(cfg.output, std::ios::binary);
  if (!os) throw ocdm::ConfigError("cannot write '" + cfg.output + "'");
  ocdm::write_csv(os, rows, cfg.timing);
  os.close();
  if (const int undefined = ocdm::count_undefined(rows); undefined > 0) {
    std::cerr << "warning: relative regret undefined (hindsight objective <= 0) in " << undefined
              << " row(s); left empty\n";
  }
  std::cout << "wrote " << rows.size() << " rows to " << cfg.output << "\n";
  return 0;
}

int cmd_plot(const std::string& csv, const std::string& svg) {
  for (const auto& path : ocdm::plot_csv(csv, svg)) std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_verify(const std::string& fault) {
  if (fault == "spo-sign") {
    ocdm::set_spo_plus_sign_fault(true);
  } else if (!fault.empty()) {
    throw ocdm::ConfigError("unknown fault '" + fault + "'");
  }
  const auto results = ocdm::run_verify_suite();
  return ocdm::print_verify_table(std::cout, results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online contextual decision-making simulator"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment grid of a JSON config and write CSV");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--seed", seed, "master seed (overrides the config)");
  run->add_option("--workers", workers, "worker threads (default: OCDM_WORKERS or all cores)");
  run->add_option("--out", out, "CSV output path (overrides the config)");

  std::string csv_path, svg_path;
  auto* plot = app.add_subcommand("plot", "plot mean relative regret vs T from a CSV");
  plot->add_option("csv", csv_path, "input CSV")->required();
  plot->add_option("svg", svg_path, "output SVG")->required();

  std::string fault;
  auto* verify = app.add_subcommand("verify", "run the fast property suite");
  verify->add_option("--inject-fault", fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(config_path, seed, workers, out);
    if (*plot) return cmd_plot(csv_path, svg_path);
    if (*verify) return cmd_verify(fault);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
