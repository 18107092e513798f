#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ksfno/app/commands.hpp"
#include "ksfno/app/config.hpp"

namespace fs = std::filesystem;
using namespace ksfno::app;

int main(int argc, char** argv) {
  CLI::App app{"Kuramoto-Sivashinsky data generation and Fourier neural operator surrogate"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string data;
  std::vector<std::string> checkpoints;
  std::string report;
  std::string scale = "smoke";
  std::size_t modes = 0;

  auto* gen = app.add_subcommand("generate", "Solve the PDE from random initial data and save a dataset");
  gen->add_option("--config", config_path, "YAML config")->required();
  gen->add_option("--out", out, "Dataset file (default paths.dataset)");

  auto* tr = app.add_subcommand("train", "Train one model and save its checkpoint and loss history");
  tr->add_option("--config", config_path, "YAML config")->required();
  tr->add_option("--data", data, "Dataset file (default paths.dataset)");
  tr->add_option("--out", out, "Checkpoint file (default <paths.checkpoints>/modes-<m>.ksf)");
  tr->add_option("--modes", modes, "Fourier cutoff (default the first model.modes entry)");

  auto* ev = app.add_subcommand("eval", "Evaluate checkpoints on the test split and write CSV reports");
  ev->add_option("--config", config_path, "YAML config")->required();
  ev->add_option("--data", data, "Dataset file (default paths.dataset)");
  ev->add_option("--ckpt", checkpoints, "Checkpoint files")->required();
  ev->add_option("--out", out, "Report directory (default paths.reports)");

  auto* pl = app.add_subcommand("plot", "Render SVG figures from a report directory");
  pl->add_option("--report", report, "Report directory")->required();

  auto* rep = app.add_subcommand("reproduce", "Run generate, train, eval and plot in sequence");
  rep->add_option("--config", config_path, "YAML config")->required();
  rep->add_option("--scale", scale, "smoke or paper")->check(CLI::IsMember({"smoke", "paper"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pl->parsed()) {
      cmd_plot(report, std::cout);
      return 0;
    }
    const ExperimentConfig cfg = load_config(config_path);
    const fs::path data_path = data.empty() ? cfg.paths.dataset : fs::path(data);
    if (gen->parsed()) {
      cmd_generate(cfg, out.empty() ? cfg.paths.dataset : fs::path(out), std::cout);
    } else if (tr->parsed()) {
      const std::size_t m = modes ? modes : cfg.model.modes.front();
      const fs::path ckpt = out.empty() ? cfg.paths.checkpoints / ("modes-" + std::to_string(m) + ".ksf") : fs::path(out);
      cmd_train(cfg, data_path, m, ckpt, std::cout);
    } else if (ev->parsed()) {
      const std::vector<fs::path> ckpts(checkpoints.begin(), checkpoints.end());
      cmd_eval(cfg, data_path, ckpts, out.empty() ? cfg.paths.reports : fs::path(out), std::cout);
    } else if (rep->parsed()) {
      cmd_reproduce(cfg, parse_scale(scale), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
