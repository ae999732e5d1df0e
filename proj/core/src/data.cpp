#include "surropt/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace surropt {

void Dataset::validate() const {
  if (features.rows() < 1) throw std::invalid_argument("Dataset: empty dataset");
  if (labels.size() != features.rows())
    throw std::invalid_argument("Dataset: label length does not match row count");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) != 1 && labels(i) != -1)
      throw std::invalid_argument("Dataset: label at row " + std::to_string(i) +
                                  " is not +/-1");
  if (groups && groups->size() != features.rows())
    throw std::invalid_argument("Dataset: group length does not match row count");
  if (static_cast<Eigen::Index>(binary_feature_mask.size()) != features.cols())
    throw std::invalid_argument("Dataset: binary mask length does not match column count");
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    if (!binary_feature_mask[static_cast<std::size_t>(j)]) continue;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      double v = features(i, j);
      if (v != 0.0 && v != 1.0)
        throw std::invalid_argument("Dataset: binary column " + std::to_string(j) +
                                    " has non-binary value at row " + std::to_string(i));
    }
  }
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.resize(static_cast<Eigen::Index>(indices.size()));
  if (groups) out.groups = Eigen::VectorXi(static_cast<Eigen::Index>(indices.size()));
  out.binary_feature_mask = binary_feature_mask;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    int r = indices[i];
    if (r < 0 || r >= size())
      throw std::invalid_argument("Dataset::subset: index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    out.labels(static_cast<Eigen::Index>(i)) = labels(r);
    if (groups) (*out.groups)(static_cast<Eigen::Index>(i)) = (*groups)(r);
  }
  return out;
}

void SplitSpec::validate() const {
  auto in_open = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_open(train_frac) || !in_open(val_frac) || !in_open(test_frac))
    throw std::invalid_argument("SplitSpec: each fraction must be in (0, 1)");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw std::invalid_argument("SplitSpec: fractions must sum to 1");
}

Dataset generate_simulated(int n, double positive_frac, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("generate_simulated: n must be >= 10");
  if (positive_frac <= 0.0 || positive_frac >= 1.0)
    throw std::invalid_argument("generate_simulated: positive_frac must be in (0, 1)");
  RandomStream rs(seed, 0);
  int n_pos = static_cast<int>(std::lround(positive_frac * n));
  n_pos = std::clamp(n_pos, 1, n - 1);

  Dataset ds;
  ds.features.resize(n, 2);
  ds.labels.resize(n);
  ds.binary_feature_mask = {false, false};
  const double sd_pos = std::sqrt(0.2);
  const double sd_neg = std::sqrt(0.1);
  for (int i = 0; i < n; ++i) {
    if (i < n_pos) {
      ds.features(i, 0) = sd_pos * rs.gaussian();
      ds.features(i, 1) = sd_pos * rs.gaussian();
      ds.labels(i) = 1;
    } else {
      double c = rs.uniform() < 0.5 ? -1.0 : 1.0;
      ds.features(i, 0) = c + sd_neg * rs.gaussian();
      ds.features(i, 1) = c + sd_neg * rs.gaussian();
      ds.labels(i) = -1;
    }
  }
  // Shuffle rows so class blocks don't survive into downstream slicing.
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[rs.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
  return ds.subset(perm);
}

Dataset generate_simulated_grouped(int n, double positive_frac, std::uint64_t seed) {
  Dataset base = generate_simulated(n, positive_frac, seed);
  RandomStream rs(seed, 1);
  Dataset ds;
  ds.features.resize(n, 3);
  ds.labels = base.labels;
  ds.groups = Eigen::VectorXi(n);
  ds.binary_feature_mask = {false, false, true};
  for (int i = 0; i < n; ++i) {
    int g = rs.uniform() < 0.5 ? 0 : 1;
    (*ds.groups)(i) = g;
    double shift = g == 0 ? -0.25 : 0.25;
    ds.features(i, 0) = base.features(i, 0) + shift;
    ds.features(i, 1) = base.features(i, 1);
    // Binary feature correlated with the label so it carries signal to flip.
    double p = base.labels(i) > 0 ? 0.8 : 0.2;
    ds.features(i, 2) = rs.uniform() < p ? 1.0 : 0.0;
  }
  return ds;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::invalid_argument("load_csv: empty file " + path);
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);

  auto find_col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::invalid_argument("load_csv: missing column '" + name + "' in " + path);
    return static_cast<int>(it - header.begin());
  };

  int label_col = find_col(options.label_column);
  int group_col = -1;
  if (options.group_column) group_col = find_col(*options.group_column);
  std::vector<int> feature_cols;
  std::vector<bool> feature_binary;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    if (j == label_col || j == group_col) continue;
    if (std::find(options.exclude_columns.begin(), options.exclude_columns.end(),
                  header[static_cast<std::size_t>(j)]) != options.exclude_columns.end())
      continue;
    feature_cols.push_back(j);
    bool is_bin = std::find(options.binary_columns.begin(), options.binary_columns.end(),
                            header[static_cast<std::size_t>(j)]) != options.binary_columns.end();
    feature_binary.push_back(is_bin);
  }
  for (const auto& bc : options.binary_columns) find_col(bc);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<int> groups;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("load_csv: line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    auto parse_cell = [&](int col) {
      try {
        std::size_t pos = 0;
        std::string c = trim(cells[static_cast<std::size_t>(col)]);
        double v = std::stod(c, &pos);
        if (pos != c.size()) throw std::invalid_argument("trailing characters");
        return v;
      } catch (const std::exception&) {
        throw std::invalid_argument("load_csv: unparseable cell in column '" +
                                    header[static_cast<std::size_t>(col)] + "' at line " +
                                    std::to_string(line_no));
      }
    };
    double lab = parse_cell(label_col);
    if (lab == 0.0) lab = -1.0;
    if (lab != 1.0 && lab != -1.0)
      throw std::invalid_argument("load_csv: label not in {-1,0,1} at line " +
                                  std::to_string(line_no));
    labels.push_back(static_cast<int>(lab));
    if (group_col >= 0) {
      std::string gcell = trim(cells[static_cast<std::size_t>(group_col)]);
      auto it = options.group_value_map.find(gcell);
      int g;
      if (it != options.group_value_map.end()) {
        g = it->second;
      } else {
        g = static_cast<int>(parse_cell(group_col));
      }
      if (g != 0 && g != 1)
        throw std::invalid_argument("load_csv: group id not in {0,1} at line " +
                                    std::to_string(line_no));
      groups.push_back(g);
    }
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (int col : feature_cols) row.push_back(parse_cell(col));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: empty dataset in " + path);

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(feature_cols.size()));
  ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.labels(static_cast<Eigen::Index>(i)) = labels[i];
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  if (group_col >= 0) {
    ds.groups = Eigen::VectorXi(static_cast<Eigen::Index>(groups.size()));
    for (std::size_t i = 0; i < groups.size(); ++i)
      (*ds.groups)(static_cast<Eigen::Index>(i)) = groups[i];
  }
  ds.binary_feature_mask = feature_binary;
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_csv: cannot open " + path);
  f.precision(17);
  for (int j = 0; j < ds.dim(); ++j) f << "f" << j << ",";
  if (ds.groups) f << "group,";
  f << "label\n";
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) f << ds.features(i, j) << ",";
    if (ds.groups) f << (*ds.groups)(i) << ",";
    f << ds.labels(i) << "\n";
  }
}

Dataset inject_group_noise(const Dataset& ds, int target_group, double fraction,
                           double flip_prob, std::uint64_t seed) {
  if (!ds.groups) throw std::invalid_argument("inject_group_noise: dataset has no groups");
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("inject_group_noise: fraction must be in [0, 1]");
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw std::invalid_argument("inject_group_noise: flip_prob must be in [0, 1]");

  std::vector<int> group_rows;
  for (int i = 0; i < ds.size(); ++i)
    if ((*ds.groups)(i) == target_group) group_rows.push_back(i);
  auto n_noisy = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(group_rows.size())));

  // Per-column stddev over the full dataset.
  Vector sd(ds.dim());
  for (int j = 0; j < ds.dim(); ++j) {
    double mean = ds.features.col(j).mean();
    double var = (ds.features.col(j).array() - mean).square().sum() /
                 std::max(1, ds.size() - 1);
    sd(j) = std::sqrt(var);
  }

  RandomStream rs(seed, 0);
  std::vector<int> pool = group_rows;
  for (std::size_t i = 0; i < n_noisy; ++i) {
    std::size_t j = i + rs.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }

  Dataset out = ds;
  for (std::size_t i = 0; i < n_noisy; ++i) {
    int r = pool[i];
    for (int j = 0; j < ds.dim(); ++j) {
      if (ds.binary_feature_mask[static_cast<std::size_t>(j)]) {
        if (rs.uniform() < flip_prob)
          out.features(r, j) = 1.0 - out.features(r, j);
      } else {
        out.features(r, j) += sd(j) * rs.gaussian();
      }
    }
  }
  return out;
}

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  int n = ds.size();
  if (n < 3) throw std::invalid_argument("split: need at least 3 examples");
  auto n_train = static_cast<int>(std::floor(spec.train_frac * n));
  auto n_val = static_cast<int>(std::floor(spec.val_frac * n));
  int n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw std::invalid_argument("split: a split would be empty at n = " + std::to_string(n));

  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  RandomStream rs(spec.seed, 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[rs.uniform_index(static_cast<std::uint64_t>(i) + 1)]);

  std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
  std::vector<int> val_idx(perm.begin() + n_train, perm.begin() + n_train + n_val);
  std::vector<int> test_idx(perm.begin() + n_train + n_val, perm.end());
  return {ds.subset(train_idx), ds.subset(val_idx), ds.subset(test_idx)};
}

}  // namespace surropt
