#include "surropt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace surropt {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

/// Flat key-value format with [section] headers; repeated keys are kept in
/// order (used for surrogate spec lines). '#' starts a comment.
struct IniEntry {
  std::string section, key, value;
  int line = 0;
};

std::vector<IniEntry> parse_ini(const std::string& text, std::vector<std::string>& errors) {
  std::vector<IniEntry> entries;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back("line " + std::to_string(line_no) + ": unterminated section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    entries.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
  }
  return entries;
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "gmean_sim") return ExperimentKind::GmeanSim;
  if (s == "macro_f_noise") return ExperimentKind::MacroFNoise;
  if (s == "prbep") return ExperimentKind::Prbep;
  if (s == "proxy_labels") return ExperimentKind::ProxyLabels;
  if (s == "grad_error_vs_k") return ExperimentKind::GradErrorVsK;
  if (s == "custom") return ExperimentKind::Custom;
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

std::string kind_to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::GmeanSim: return "gmean_sim";
    case ExperimentKind::MacroFNoise: return "macro_f_noise";
    case ExperimentKind::Prbep: return "prbep";
    case ExperimentKind::ProxyLabels: return "proxy_labels";
    case ExperimentKind::GradErrorVsK: return "grad_error_vs_k";
    case ExperimentKind::Custom: return "custom";
  }
  return "?";
}

/// Dataset-independent test of whether two surrogate subsets can share
/// examples; used to reject the FD estimator at config time.
bool subsets_may_overlap(const SurrogateSpec& a, const SurrogateSpec& b) {
  if (a.subset == SubsetKind::All || b.subset == SubsetKind::All) return true;
  auto is_pos = [](const SurrogateSpec& s) {
    return s.subset == SubsetKind::Positives || s.subset == SubsetKind::GroupPositives;
  };
  if (is_pos(a) != is_pos(b)) return false;
  bool a_grouped = a.subset == SubsetKind::GroupPositives ||
                   a.subset == SubsetKind::GroupNegatives;
  bool b_grouped = b.subset == SubsetKind::GroupPositives ||
                   b.subset == SubsetKind::GroupNegatives;
  if (a_grouped && b_grouped) return a.group == b.group;
  return true;  // ungrouped class subset contains both groups
}

void apply_kind_defaults(ExperimentConfig& cfg, bool surrogates_given,
                         bool metric_given) {
  auto add = [&](const std::string& s) { cfg.surrogates.push_back(SurrogateSpec::parse(s)); };
  switch (cfg.kind) {
    case ExperimentKind::GmeanSim:
      if (!surrogates_given) { add("hinge:positives"); add("hinge:negatives"); }
      if (!metric_given) cfg.metric = MetricSpec::parse("gmean");
      cfg.data.source = cfg.data.source.empty() ? "simulated" : cfg.data.source;
      break;
    case ExperimentKind::MacroFNoise:
      if (!surrogates_given) {
        add("hinge:group0_positives");
        add("hinge:group0_negatives");
        add("hinge:group1_positives");
        add("hinge:group1_negatives");
      }
      if (!metric_given) cfg.metric = MetricSpec::parse("macro_f");
      if (cfg.data.noise_fractions.empty())
        cfg.data.noise_fractions = {0.0, 0.2, 0.4, 0.6, 0.8};
      break;
    case ExperimentKind::Prbep:
      if (!surrogates_given) {
        add("precision_at_recall:all:0.25");
        add("precision_at_recall:all:0.5");
        add("precision_at_recall:all:0.75");
      }
      if (!metric_given) cfg.metric = MetricSpec::parse("prbep");
      break;
    case ExperimentKind::ProxyLabels:
      if (!surrogates_given) { add("hinge:positives"); add("hinge:negatives"); }
      if (!metric_given) cfg.metric = MetricSpec::parse("error");
      break;
    case ExperimentKind::GradErrorVsK:
    case ExperimentKind::Custom:
      break;
  }
}

}  // namespace

ConfigParseResult parse_config_text(const std::string& text) {
  ConfigParseResult result;
  auto& cfg = result.config;
  auto& errors = result.errors;
  std::vector<IniEntry> entries = parse_ini(text, errors);

  bool surrogates_given = false, metric_given = false, seeds_given = false;
  bool kind_given = false;

  auto err = [&](const IniEntry& e, const std::string& msg) {
    errors.push_back("line " + std::to_string(e.line) + " [" + e.section + "] " + e.key +
                     ": " + msg);
  };

  for (const auto& e : entries) {
    try {
      const std::string& sec = e.section;
      const std::string& key = e.key;
      const std::string& val = e.value;
      if (sec == "experiment") {
        if (key == "kind") { cfg.kind = parse_kind(val); kind_given = true; }
        else if (key == "seeds") {
          cfg.seeds.clear();
          for (const auto& s : split_list(val)) cfg.seeds.push_back(std::stoull(s));
          seeds_given = true;
        } else if (key == "output") cfg.output_dir = val;
        else err(e, "unknown key");
      } else if (sec == "data") {
        if (key == "source") cfg.data.source = val;
        else if (key == "path") cfg.data.path = val;
        else if (key == "label_column") cfg.data.label_column = val;
        else if (key == "group_column") cfg.data.group_column = val;
        else if (key == "proxy_label_column") cfg.data.proxy_label_column = val;
        else if (key == "binary_columns") cfg.data.binary_columns = split_list(val);
        else if (key == "group_value_map") {
          // e.g. "M:0,F:1"
          for (const auto& pair : split_list(val)) {
            auto colon = pair.find(':');
            if (colon == std::string::npos) throw std::invalid_argument("expected name:id");
            cfg.data.group_value_map[trim(pair.substr(0, colon))] =
                std::stoi(pair.substr(colon + 1));
          }
        } else if (key == "n") cfg.data.n = std::stoi(val);
        else if (key == "positive_frac") cfg.data.positive_frac = std::stod(val);
        else if (key == "train_frac") cfg.data.train_frac = std::stod(val);
        else if (key == "val_frac") cfg.data.val_frac = std::stod(val);
        else if (key == "test_frac") cfg.data.test_frac = std::stod(val);
        else if (key == "noise_fractions") {
          cfg.data.noise_fractions.clear();
          for (const auto& s : split_list(val)) cfg.data.noise_fractions.push_back(std::stod(s));
        } else if (key == "noise_group") cfg.data.noise_group = std::stoi(val);
        else if (key == "flip_prob") cfg.data.flip_prob = std::stod(val);
        else err(e, "unknown key");
      } else if (sec == "surrogates") {
        if (key == "spec") {
          if (!surrogates_given) cfg.surrogates.clear();
          surrogates_given = true;
          cfg.surrogates.push_back(SurrogateSpec::parse(val));
        } else err(e, "unknown key");
      } else if (sec == "metric") {
        if (key == "spec") { cfg.metric = MetricSpec::parse(val); metric_given = true; }
        else err(e, "unknown key");
      } else if (sec == "pgd") {
        if (key == "T") cfg.pgd.T = std::stoi(val);
        else if (key == "eta") cfg.pgd.eta = std::stod(val);
        else if (key == "proj_step") cfg.pgd.proj_step = std::stod(val);
        else if (key == "proj_iters") cfg.pgd.proj_iters = std::stoi(val);
        else if (key == "estimator") cfg.pgd.estimator = parse_estimator(val);
        else if (key == "m") cfg.pgd.perturbation.m = std::stoi(val);
        else if (key == "sigma") cfg.pgd.perturbation.sigma = std::stod(val);
        else if (key == "sigma2") cfg.pgd.perturbation.sigma2 = std::stod(val);
        else if (key == "minibatch") cfg.pgd.perturbation.minibatch = std::stoi(val);
        else if (key == "truncation_L") cfg.pgd.perturbation.truncation_L = std::stod(val);
        else if (key == "model_selection") {
          if (val == "last") cfg.pgd.model_selection = ModelSelection::Last;
          else if (val == "best_val_metric") cfg.pgd.model_selection = ModelSelection::BestValMetric;
          else throw std::invalid_argument("expected last | best_val_metric");
        } else err(e, "unknown key");
      } else if (sec == "baselines") {
        if (key == "logreg") cfg.baselines.logreg = val == "true" || val == "1";
        else if (key == "post_shift") cfg.baselines.post_shift = val == "true" || val == "1";
        else if (key == "proposed") cfg.run_proposed = val == "true" || val == "1";
        else if (key == "logreg_step") cfg.baselines.logreg_step = std::stod(val);
        else if (key == "logreg_iters") cfg.baselines.logreg_iters = std::stoi(val);
        else err(e, "unknown key");
      } else if (sec == "study") {
        if (key == "k_min") cfg.study.k_min = std::stoi(val);
        else if (key == "k_max") cfg.study.k_max = std::stoi(val);
        else if (key == "m") cfg.study.m = std::stoi(val);
        else if (key == "draws") cfg.study.draws = std::stoi(val);
        else if (key == "trials") cfg.study.trials = std::stoi(val);
        else if (key == "sigma") cfg.study.sigma = std::stod(val);
        else err(e, "unknown key");
      } else {
        err(e, "unknown section");
      }
    } catch (const std::exception& ex) {
      err(e, ex.what());
    }
  }

  if (!kind_given) errors.push_back("[experiment] kind is required");
  if (cfg.seeds.empty()) errors.push_back("[experiment] seeds must be nonempty");
  if (!seeds_given && cfg.kind == ExperimentKind::GradErrorVsK) cfg.seeds = {1};

  try {
    apply_kind_defaults(cfg, surrogates_given, metric_given);
  } catch (const std::exception& ex) {
    errors.push_back(std::string("defaults: ") + ex.what());
  }

  // Cross-field checks.
  if (cfg.kind != ExperimentKind::GradErrorVsK && cfg.surrogates.empty() && cfg.run_proposed)
    errors.push_back("[surrogates] at least one spec is required");
  if (cfg.pgd.estimator != EstimatorKind::Interpolation) {
    for (std::size_t i = 0; i < cfg.surrogates.size(); ++i) {
      for (std::size_t j = i + 1; j < cfg.surrogates.size(); ++j) {
        if (subsets_may_overlap(cfg.surrogates[i], cfg.surrogates[j]))
          errors.push_back("estimator '" + estimator_to_string(cfg.pgd.estimator) +
                           "' requires disjoint surrogate subsets but '" +
                           cfg.surrogates[i].to_string() + "' and '" +
                           cfg.surrogates[j].to_string() + "' may overlap");
      }
    }
  }
  if (cfg.data.source == "csv") {
    if (cfg.data.path.empty()) errors.push_back("[data] path required for source = csv");
    else if (!std::filesystem::exists(cfg.data.path))
      errors.push_back("[data] file does not exist: " + cfg.data.path);
  } else if (cfg.data.source != "simulated" && cfg.data.source != "simulated_grouped") {
    errors.push_back("[data] unknown source '" + cfg.data.source + "'");
  }
  if (cfg.kind == ExperimentKind::ProxyLabels && cfg.data.source == "csv" &&
      cfg.data.proxy_label_column.empty())
    errors.push_back("[data] proxy_label_column required for proxy_labels");
  if (cfg.kind == ExperimentKind::MacroFNoise && cfg.data.source == "csv" &&
      cfg.data.group_column.empty())
    errors.push_back("[data] group_column required for macro_f_noise on csv");
  try {
    if (errors.empty()) cfg.pgd.validate();
  } catch (const std::exception& ex) {
    errors.push_back(std::string("[pgd] ") + ex.what());
  }
  return result;
}

ConfigParseResult validate_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    ConfigParseResult r;
    r.errors.push_back("cannot open config file " + path);
    return r;
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void Report::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("Report::write_csv: cannot open " + path);
  std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
  f << "# experiment=" << experiment << " generated=" << buf << "\n";
  f << std::setprecision(17);
  f << "method,mean";
  std::size_t max_seeds = 0;
  for (const auto& r : rows) max_seeds = std::max(max_seeds, r.per_seed.size());
  for (std::size_t i = 0; i < max_seeds; ++i) f << ",seed" << i + 1;
  f << "\n";
  for (const auto& r : rows) {
    f << r.method << "," << r.mean;
    for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
      f << ",";
      if (i < r.failed.size() && r.failed[i]) f << "FAILED";
      else f << r.per_seed[i];
    }
    f << "\n";
  }
}

void Report::print_table(std::ostream& os) const {
  std::size_t width = 10;
  for (const auto& r : rows) width = std::max(width, r.method.size() + 2);
  os << "experiment: " << experiment << "\n";
  os << std::left << std::setw(static_cast<int>(width)) << "method"
     << std::right << std::setw(12) << "mean" << "  per-seed\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.method << std::right
       << std::setw(12) << std::fixed << std::setprecision(4) << r.mean << "  ";
    for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
      if (i < r.failed.size() && r.failed[i]) os << "FAILED ";
      else os << std::fixed << std::setprecision(4) << r.per_seed[i] << " ";
    }
    os << "\n";
  }
  os.unsetf(std::ios::fixed);
}

namespace {

double display_value(const MetricSpec& spec, double loss) {
  return spec.display_as_complement() ? 1.0 - loss : loss;
}

struct SeedData {
  Dataset train, val, test;
  // For proxy labels: metric splits carry the true labels while train
  // carries the proxy labels; otherwise these alias train/val/test content.
  Dataset metric_val, metric_test;
  bool has_metric_splits = false;

  const Dataset& eval_val() const { return has_metric_splits ? metric_val : val; }
  const Dataset& eval_test() const { return has_metric_splits ? metric_test : test; }
};

Dataset load_configured_csv(const DataConfig& dc, const std::string& label_column,
                            const std::vector<std::string>& extra_excludes) {
  CsvOptions opt;
  opt.label_column = label_column;
  if (!dc.group_column.empty()) opt.group_column = dc.group_column;
  opt.binary_columns = dc.binary_columns;
  opt.exclude_columns = extra_excludes;
  opt.group_value_map = dc.group_value_map;
  return load_csv(dc.path, opt);
}

SeedData build_seed_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  const DataConfig& dc = cfg.data;
  SplitSpec split_spec{dc.train_frac, dc.val_frac, dc.test_frac, seed};

  SeedData sd;
  if (cfg.kind == ExperimentKind::ProxyLabels && !dc.proxy_label_column.empty()) {
    Dataset proxy = load_configured_csv(dc, dc.proxy_label_column, {dc.label_column});
    Dataset truth = load_configured_csv(dc, dc.label_column, {dc.proxy_label_column});
    std::tie(sd.train, sd.val, sd.test) = split(proxy, split_spec);
    auto [tr, va, te] = split(truth, split_spec);  // same seed, same partition
    sd.metric_val = va;
    sd.metric_test = te;
    sd.has_metric_splits = true;
    return sd;
  }

  Dataset ds;
  if (dc.source == "csv") {
    ds = load_configured_csv(dc, dc.label_column, {});
  } else if (dc.source == "simulated_grouped") {
    ds = generate_simulated_grouped(dc.n, dc.positive_frac, seed);
  } else {
    ds = generate_simulated(dc.n, dc.positive_frac, seed);
  }
  std::tie(sd.train, sd.val, sd.test) = split(ds, split_spec);
  return sd;
}

struct MethodOutcome {
  double display = 0.0;
  bool failed = false;
};

void append_outcome(std::map<std::string, std::vector<MethodOutcome>>& table,
                    const std::string& method, MethodOutcome outcome) {
  table[method].push_back(outcome);
}

void run_methods_on_splits(const ExperimentConfig& cfg, const SeedData& sd,
                           std::uint64_t seed, const std::string& suffix,
                           std::map<std::string, std::vector<MethodOutcome>>& table) {
  MetricFn metric = make_metric(cfg.metric);
  auto test_display = [&](const ModelParams& p) {
    double loss = metric(score(p, sd.eval_test().features), sd.eval_test());
    return display_value(cfg.metric, loss);
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    MethodOutcome out;
    try {
      out.display = fn();
    } catch (const std::exception& ex) {
      out.failed = true;
      std::cerr << "[" << name << suffix << " seed " << seed << "] failed: " << ex.what()
                << "\n";
    }
    append_outcome(table, name + suffix, out);
  };

  ModelParams logreg_model;
  bool have_logreg = false;
  if (cfg.baselines.logreg || cfg.baselines.post_shift) {
    try {
      logreg_model = train_logistic_regression(sd.train, cfg.baselines.logreg_step,
                                               cfg.baselines.logreg_iters, seed);
      have_logreg = true;
    } catch (const std::exception& ex) {
      std::cerr << "[logreg" << suffix << " seed " << seed << "] failed: " << ex.what()
                << "\n";
    }
  }

  if (cfg.baselines.logreg) {
    guarded("logreg", [&] {
      if (!have_logreg) throw std::runtime_error("logistic regression failed");
      return test_display(logreg_model);
    });
  }
  if (cfg.baselines.post_shift) {
    guarded("post_shift", [&] {
      if (!have_logreg) throw std::runtime_error("logistic regression failed");
      PostShiftResult ps = post_shift(logreg_model, sd.eval_val(), metric);
      return test_display(apply_threshold(logreg_model, ps.threshold));
    });
  }
  if (cfg.run_proposed) {
    guarded("proposed", [&] {
      PgdConfig pgd = cfg.pgd;
      pgd.perturbation.seed = seed;
      // Gradient metric on validation for split-sample estimation; the FD
      // estimators ignore the validation set for gradients (same-sample).
      const Dataset& val_for_metric = sd.eval_val();
      PgdResult res = surrogate_pgd(metric, cfg.surrogates, sd.train, &val_for_metric, pgd);
      if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::string tag = "proposed" + suffix + "_seed" + std::to_string(seed);
        res.trace.save_jsonl(cfg.output_dir + "/trace_" + tag + ".jsonl");
        save_checkpoint(res.params, cfg.output_dir + "/model_" + tag + ".txt");
      }
      return test_display(res.params);
    });
  }
}

}  // namespace

std::vector<std::pair<int, double>> grad_error_vs_k_study(const StudyConfig& cfg,
                                                          std::uint64_t seed) {
  std::vector<std::pair<int, double>> out;
  for (int K = cfg.k_min; K <= cfg.k_max; ++K) {
    SyntheticPsi psi = SyntheticPsi::geometric_mean(K);
    double sum_sq_err = 0.0;
    long count = 0;
    RandomStream draw_rs(seed, static_cast<std::uint64_t>(K));
    for (int draw = 0; draw < cfg.draws; ++draw) {
      Vector z(K);
      for (int k = 0; k < K; ++k) z(k) = 0.1 + 0.9 * draw_rs.uniform();
      Vector true_grad = psi.grad(z);
      for (int trial = 0; trial < cfg.trials; ++trial) {
        RandomStream rs(seed ^ 0x9e3779b9ULL,
                        (static_cast<std::uint64_t>(K) << 40) +
                            (static_cast<std::uint64_t>(draw) << 20) +
                            static_cast<std::uint64_t>(trial));
        Matrix H(cfg.m, K);
        Vector mdiff(cfg.m);
        for (int j = 0; j < cfg.m; ++j) {
          Vector z1 = z + cfg.sigma * gaussian_vector(rs, K);
          Vector z2 = z + cfg.sigma * gaussian_vector(rs, K);
          // keep inside the function's positive domain
          z1 = z1.cwiseMax(1e-4);
          z2 = z2.cwiseMax(1e-4);
          H.row(j) = (z1 - z2).transpose();
          mdiff(j) = psi.value(z1) - psi.value(z2);
        }
        Vector g = least_squares_solve(H, mdiff, 0.0);
        sum_sq_err += (g - true_grad).squaredNorm();
        ++count;
      }
    }
    out.emplace_back(K, sum_sq_err / static_cast<double>(count));
  }
  return out;
}

Report run_experiment(const ExperimentConfig& cfg) {
  Report report;
  report.experiment = kind_to_string(cfg.kind);

  if (cfg.kind == ExperimentKind::GradErrorVsK) {
    std::map<int, std::vector<MethodOutcome>> per_k;
    for (std::uint64_t seed : cfg.seeds) {
      auto mses = grad_error_vs_k_study(cfg.study, seed);
      for (auto [K, mse] : mses) per_k[K].push_back({mse, !std::isfinite(mse)});
    }
    for (auto& [K, outs] : per_k) {
      ReportRow row;
      row.method = "K=" + std::to_string(K);
      double sum = 0;
      for (const auto& o : outs) {
        row.per_seed.push_back(o.display);
        row.failed.push_back(o.failed);
        sum += o.display;
      }
      row.mean = sum / static_cast<double>(outs.size());
      report.rows.push_back(std::move(row));
    }
  } else {
    std::map<std::string, std::vector<MethodOutcome>> table;
    std::vector<std::string> method_order;  // map iteration is alphabetical; keep insertion order
    for (std::uint64_t seed : cfg.seeds) {
      SeedData sd;
      try {
        sd = build_seed_data(cfg, seed);
      } catch (const std::exception& ex) {
        std::cerr << "[seed " << seed << "] data stage failed: " << ex.what() << "\n";
        continue;
      }
      if (cfg.kind == ExperimentKind::MacroFNoise) {
        for (double frac : cfg.data.noise_fractions) {
          SeedData noised = sd;
          noised.train = inject_group_noise(sd.train, cfg.data.noise_group, frac,
                                            cfg.data.flip_prob, seed + 17);
          std::ostringstream suffix;
          suffix << "@noise" << frac;
          run_methods_on_splits(cfg, noised, seed, suffix.str(), table);
        }
      } else {
        run_methods_on_splits(cfg, sd, seed, "", table);
      }
    }
    for (const auto& [method, outs] : table) {
      ReportRow row;
      row.method = method;
      double sum = 0;
      int ok = 0;
      for (const auto& o : outs) {
        row.per_seed.push_back(o.display);
        row.failed.push_back(o.failed);
        if (!o.failed) { sum += o.display; ++ok; }
      }
      row.mean = ok > 0 ? sum / ok : std::numeric_limits<double>::quiet_NaN();
      report.rows.push_back(std::move(row));
    }
  }

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    report.write_csv(cfg.output_dir + "/report.csv");
  }
  return report;
}

}  // namespace surropt
