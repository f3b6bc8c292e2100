#include "setti/data.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "setti/errors.hpp"
#include "setti/rng.hpp"

namespace setti {

Dataset Dataset::select(const std::vector<int>& rows) const {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.labels.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int i = rows[k];
    out.X.row(static_cast<Eigen::Index>(k)) = X.row(i);
    out.labels.push_back(labels[static_cast<std::size_t>(i)]);
    out.ids.push_back(ids[static_cast<std::size_t>(i)]);
  }
  out.class_count = class_count;
  out.label_names = label_names;
  return out;
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.feature_count() != b.feature_count()) {
    throw DataError("concat: feature counts differ (" +
                    std::to_string(a.feature_count()) + " vs " +
                    std::to_string(b.feature_count()) + ")");
  }
  Dataset out;
  out.X.resize(a.size() + b.size(), a.X.cols());
  out.X.topRows(a.size()) = a.X;
  out.X.bottomRows(b.size()) = b.X;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.ids = a.ids;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  out.class_count = std::max(a.class_count, b.class_count);
  out.label_names =
      a.label_names.size() >= b.label_names.size() ? a.label_names : b.label_names;
  return out;
}

Matrix Scaler::apply(const Matrix& X) const {
  if (X.cols() != feature_min.size()) {
    throw DataError("scaler: expected " + std::to_string(feature_min.size()) +
                    " features, got " + std::to_string(X.cols()));
  }
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double lo = feature_min(j);
    const double range = feature_max(j) - lo;
    if (range == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = (X.col(j).array() - lo) / range;
    }
  }
  return out;
}

Dataset Scaler::apply(const Dataset& d) const {
  Dataset out = d;
  out.X = apply(d.X);
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file, header row required");

  const auto header = split_line(line);
  int label_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (trim(header[j]) == label_column) {
      label_col = static_cast<int>(j);
      break;
    }
  }
  if (label_col < 0) {
    throw DataError(path + ": label column '" + label_column + "' not found in header");
  }

  const int m = static_cast<int>(header.size()) - 1;
  if (m < 1) throw DataError(path + ": no feature columns besides the label");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::unordered_map<std::string, int> label_ids;

  int row = 0;  // 1-based data row index
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<int>(j) == label_col) {
        const std::string name = trim(cells[j]);
        auto it = label_ids.find(name);
        if (it == label_ids.end()) {
          it = label_ids.emplace(name, static_cast<int>(label_names.size())).first;
          label_names.push_back(name);
        }
        labels.push_back(it->second);
      } else {
        const std::string cell = trim(cells[j]);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end != cell.c_str() + cell.size()) {
          throw DataError(path + ": row " + std::to_string(row) + ", column '" +
                          trim(header[j]) + "': cannot parse '" + cell +
                          "' as a real number");
        }
        values.push_back(v);
      }
    }
  }
  if (row == 0) throw DataError(path + ": no data rows");

  Dataset d;
  d.X.resize(row, m);
  for (int i = 0; i < row; ++i) {
    for (int j = 0; j < m; ++j) {
      d.X(i, j) = values[static_cast<std::size_t>(i) * m + j];
    }
  }
  d.labels = std::move(labels);
  d.ids.resize(static_cast<std::size_t>(row));
  std::iota(d.ids.begin(), d.ids.end(), 0);
  d.class_count = static_cast<int>(label_names.size());
  d.label_names = std::move(label_names);
  return d;
}

void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (int j = 0; j < d.feature_count(); ++j) out << "f" << j << ",";
  out << "label\n";
  out.precision(17);
  for (int i = 0; i < d.size(); ++i) {
    for (int j = 0; j < d.feature_count(); ++j) out << d.X(i, j) << ",";
    const int y = d.labels[static_cast<std::size_t>(i)];
    if (y < static_cast<int>(d.label_names.size())) {
      out << d.label_names[static_cast<std::size_t>(y)];
    } else {
      out << y;
    }
    out << "\n";
  }
}

std::pair<Dataset, Scaler> fit_normalize(const Dataset& d) {
  if (d.empty()) throw DataError("fit_normalize: empty dataset");
  Scaler s;
  s.feature_min = d.X.colwise().minCoeff();
  s.feature_max = d.X.colwise().maxCoeff();
  return {s.apply(d), s};
}

SplitResult split(const Dataset& d, std::int64_t seed) {
  const int n = d.size();
  if (n < 5) {
    throw DataError("split: need at least 5 samples, got " + std::to_string(n));
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(static_cast<std::uint64_t>(seed));
  rng.shuffle(order);

  const int n_train = (n * 6) / 10;
  const int n_val = (n * 2) / 10;
  const std::vector<int> train_rows(order.begin(), order.begin() + n_train);
  const std::vector<int> val_rows(order.begin() + n_train, order.begin() + n_train + n_val);
  const std::vector<int> test_rows(order.begin() + n_train + n_val, order.end());
  return {d.select(train_rows), d.select(val_rows), d.select(test_rows)};
}

StreamCursor make_stream(const Dataset& d, int observed_count) {
  if (observed_count < 0 || observed_count > d.size()) {
    throw DataError("make_stream: observed_count " + std::to_string(observed_count) +
                    " out of range [0, " + std::to_string(d.size()) + "]");
  }
  return StreamCursor{d, observed_count};
}

Dataset synth_generate(const SynthConfig& config) {
  if (config.samples_per_class <= 0) {
    throw ConfigError("synth_generate: samples_per_class must be positive");
  }
  if (config.feature_count <= 0) {
    throw ConfigError("synth_generate: feature_count must be positive");
  }
  if (config.class_count < 2) {
    throw ConfigError("synth_generate: need at least 2 classes");
  }
  if (config.separation <= 0 || config.noise_scale <= 0) {
    throw ConfigError("synth_generate: separation and noise_scale must be positive");
  }

  Rng rng(static_cast<std::uint64_t>(config.seed));
  const int m = config.feature_count;

  // Random unit direction; class centroids are spaced `separation` apart
  // along it, starting from a random base point.
  Vector direction(m);
  for (int j = 0; j < m; ++j) direction(j) = rng.normal();
  direction.normalize();
  Vector base(m);
  for (int j = 0; j < m; ++j) base(j) = rng.uniform();

  const int n = config.samples_per_class * config.class_count;
  Dataset d;
  d.X.resize(n, m);
  d.labels.resize(static_cast<std::size_t>(n));
  d.ids.resize(static_cast<std::size_t>(n));
  d.class_count = config.class_count;
  d.label_names.reserve(static_cast<std::size_t>(config.class_count));
  d.label_names.emplace_back("benign");
  for (int c = 1; c < config.class_count; ++c) {
    d.label_names.push_back(config.class_count == 2 ? "malware"
                                                    : "malware" + std::to_string(c));
  }

  int i = 0;
  for (int c = 0; c < config.class_count; ++c) {
    const Vector centroid = base + (config.separation * c) * direction;
    for (int k = 0; k < config.samples_per_class; ++k, ++i) {
      for (int j = 0; j < m; ++j) {
        d.X(i, j) = centroid(j) + config.noise_scale * rng.normal();
      }
      d.labels[static_cast<std::size_t>(i)] = c;
      d.ids[static_cast<std::size_t>(i)] = i;
    }
  }
  return d;
}

}  // namespace setti
