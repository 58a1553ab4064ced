#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "fracfield/config.hpp"
#include "fracfield/error.hpp"
#include "fracfield/parallel.hpp"
#include "fracfield/run.hpp"

int main(int argc, char** argv) {
  using namespace fracfield;
  CLI::App app{"Spectral Nehari solver for (-Delta)^alpha u + u = h(u) on expanding planar domains"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool quiet = false;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Override solver.rng_seed");
  app.add_option("--workers", workers, "Worker threads (default: FRACFIELD_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress progress messages");

  const char* tasks[] = {"solve", "sweep-lambda", "multiplicity", "verify-extension", "morse",
                         "report"};
  for (const char* t : tasks) app.add_subcommand(t, std::string("Run the ") + t + " task")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigInvalid;
  }

  std::optional<Task> task;
  if (const auto subs = app.get_subcommands(); !subs.empty())
    task = task_from_string(subs.front()->get_name());

  try {
    const RunConfig cfg = load_config(config_path, task, seed);
    RunOptions opt;
    opt.out_dir = out_dir;
    opt.workers = workers ? *workers : workers_from_env();
    opt.quiet = quiet;
    const auto result = run(cfg, opt);
    if (!quiet)
      for (const auto& f : result.files) std::cerr << "fracfield: wrote " << f.string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "fracfield: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "fracfield: TaskFailed: " << e.what() << '\n';
    return kExitTaskFailed;
  }
}
