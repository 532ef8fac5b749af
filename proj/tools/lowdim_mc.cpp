#include "lowdim/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  namespace h = lowdim::harness;

  CLI::App app{"Monte Carlo experiments for recovery of low-dimensional matrix sets"};
  std::string kind;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  app.add_option("kind", kind, "phase | nsp | concentration | rifs | dimension | holder")
      ->required()
      ->check(CLI::IsMember({"phase", "nsp", "concentration", "rifs", "dimension", "holder"}));
  app.add_option("--config", config, "experiment config (JSON)")->required();
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : h::kExitConfig;
  }

  const h::RunOutcome outcome = h::run_experiment(h::parse_kind(kind), config, out, seed, threads);
  for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
  for (const auto& m : outcome.messages) std::cerr << m << '\n';
  return outcome.exit_code;
}
