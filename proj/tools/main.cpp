#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "surropt/data.hpp"
#include "surropt/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Train linear models against black-box evaluation metrics"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", config_path, "Config file path")->required();

  auto* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", config_path, "Config file path")->required();

  std::string gen_kind, gen_out;
  int gen_n = 5000;
  double gen_pf = 0.10;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-data", "Write a simulated dataset as CSV");
  gen->add_option("kind", gen_kind, "simulated | grouped")->required()
      ->check(CLI::IsMember({"simulated", "grouped"}));
  gen->add_option("out", gen_out, "Output CSV path")->required();
  gen->add_option("--n", gen_n, "Number of examples");
  gen->add_option("--positive-frac", gen_pf, "Fraction of positive labels");
  gen->add_option("--seed", gen_seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) {
      auto result = surropt::validate_config(config_path);
      if (result.ok()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
      return 1;
    }
    if (app.got_subcommand(run)) {
      auto result = surropt::validate_config(config_path);
      if (!result.ok()) {
        for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
        return 1;
      }
      surropt::Report report = surropt::run_experiment(result.config);
      report.print_table(std::cout);
      return 0;
    }
    if (app.got_subcommand(gen)) {
      surropt::Dataset ds = gen_kind == "grouped"
          ? surropt::generate_simulated_grouped(gen_n, gen_pf, gen_seed)
          : surropt::generate_simulated(gen_n, gen_pf, gen_seed);
      surropt::save_csv(ds, gen_out);
      std::cout << "wrote " << ds.size() << " rows to " << gen_out << "\n";
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
