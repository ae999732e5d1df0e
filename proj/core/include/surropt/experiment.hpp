#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "surropt/baselines.hpp"
#include "surropt/optimizer.hpp"

namespace surropt {

enum class ExperimentKind {
  GmeanSim,
  MacroFNoise,
  Prbep,
  ProxyLabels,
  GradErrorVsK,
  Custom,
};

struct DataConfig {
  std::string source = "simulated";  // simulated | simulated_grouped | csv
  std::string path;
  std::string label_column = "label";
  std::string group_column;
  std::string proxy_label_column;    // proxy_labels experiment
  std::vector<std::string> binary_columns;
  std::map<std::string, int> group_value_map;
  int n = 5000;
  double positive_frac = 0.10;
  double train_frac = 4.0 / 9.0;
  double val_frac = 2.0 / 9.0;
  double test_frac = 1.0 / 3.0;
  std::vector<double> noise_fractions;  // macro_f_noise sweep
  int noise_group = 0;
  double flip_prob = 0.9;
};

struct BaselineConfig {
  bool logreg = true;
  bool post_shift = true;
  double logreg_step = 0.1;
  int logreg_iters = 2500;
};

struct StudyConfig {  // grad_error_vs_k
  int k_min = 2;
  int k_max = 10;
  int m = 100;
  int draws = 100;
  int trials = 100;
  double sigma = 0.01;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Custom;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir;
  DataConfig data;
  std::vector<SurrogateSpec> surrogates;
  MetricSpec metric;
  PgdConfig pgd;
  BaselineConfig baselines;
  StudyConfig study;
  bool run_proposed = true;
};

struct ReportRow {
  std::string method;
  std::vector<double> per_seed;  // display-metric values
  double mean = 0.0;
  std::vector<bool> failed;      // per seed
};

struct Report {
  std::string experiment;
  std::vector<ReportRow> rows;

  void write_csv(const std::string& path) const;
  void print_table(std::ostream& os) const;
};

/// Parses the flat key-value config with [section] headers. On any problem
/// collects every error; returns the config only when the error list is empty.
struct ConfigParseResult {
  ExperimentConfig config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

ConfigParseResult validate_config(const std::string& path);
ConfigParseResult parse_config_text(const std::string& text);

Report run_experiment(const ExperimentConfig& config);

/// Mean squared error of the linear-interpolation gradient estimate for
/// f(z) = (prod z_k)^(1/K) with z_k ~ 0.1 + U(0, 0.9), per K.
std::vector<std::pair<int, double>> grad_error_vs_k_study(const StudyConfig& cfg,
                                                          std::uint64_t seed);

}  // namespace surropt
