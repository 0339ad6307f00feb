#include <CLI11.hpp>

#include <iostream>

#include "igdist/error.hpp"
#include "igdist/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Typical distances in inhomogeneous random intersection graphs"};
  app.set_version_flag("--version", igdist::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 0;
  for (const auto& name : igdist::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--workers", workers, "worker threads (overrides workers)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    auto cfg = igdist::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (workers > 0) cfg.workers = workers;
    const auto result = igdist::run_subcommand(subcommand, cfg);
    std::cout << subcommand << ": " << result.summary << '\n';
    std::cout << "wrote " << result.manifest.files.size() + 1 << " files to " << cfg.output_dir << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "igdist " << subcommand << ": " << e.what() << '\n';
    return igdist::exit_code_for(e);
  }
}
