#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "setti/types.hpp"

namespace setti {

/// One labelled feature vector. `label` is a dense class id
/// (0 = benign, 1 = malware in the binary setting).
struct Sample {
  RowVector features;
  int label = 0;
  std::int64_t id = 0;
};

/// Immutable-by-convention collection of samples. Features are stored as one
/// n x m matrix, one row per sample.
struct Dataset {
  Matrix X;                             // n x m
  std::vector<int> labels;              // n dense class ids
  std::vector<std::int64_t> ids;        // n unique ids
  int class_count = 0;
  std::vector<std::string> label_names; // class id -> source label text

  int size() const { return static_cast<int>(X.rows()); }
  int feature_count() const { return static_cast<int>(X.cols()); }
  bool empty() const { return size() == 0; }

  Sample sample(int i) const {
    return Sample{X.row(i), labels[static_cast<std::size_t>(i)],
                  ids[static_cast<std::size_t>(i)]};
  }

  /// Subset by row indices, preserving ids and label mapping.
  Dataset select(const std::vector<int>& rows) const;

  /// Concatenate two datasets over the same feature space.
  static Dataset concat(const Dataset& a, const Dataset& b);
};

/// Per-feature min/max fitted on a training set; maps features into [0,1].
/// Values outside the fitted range map outside [0,1] and are clipped later
/// by whoever needs a box (the attacks do).
struct Scaler {
  Vector feature_min;
  Vector feature_max;

  Matrix apply(const Matrix& X) const;
  Dataset apply(const Dataset& d) const;
};

/// Streaming view over a dataset: the first `observed_count` samples have
/// already passed through the system and can only be observed, never
/// perturbed. Index i is perturbable iff i >= observed_count.
struct StreamCursor {
  Dataset dataset;
  int observed_count = 0;

  bool perturbable(int i) const { return i >= observed_count; }
};

struct SynthConfig {
  int samples_per_class = 100;
  int feature_count = 10;
  int class_count = 2;
  double separation = 4.0;  // centroid spacing in feature units
  double noise_scale = 1.0; // per-feature Gaussian sigma
  std::int64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Parse a feature CSV: UTF-8, comma separated, header row, one label column
/// selected by name, every other column a real-valued feature. Labels map to
/// dense class ids by first appearance.
Dataset load_csv(const std::string& path, const std::string& label_column);

/// Write a dataset back out in the same CSV dialect load_csv accepts.
void save_csv(const Dataset& d, const std::string& path);

/// Min-max scale every feature into [0,1]. Constant features map to 0.
std::pair<Dataset, Scaler> fit_normalize(const Dataset& d);

/// Seeded 60/20/20 shuffle split: floor(0.6n) / floor(0.2n) / remainder.
SplitResult split(const Dataset& d, std::int64_t seed);

StreamCursor make_stream(const Dataset& d, int observed_count);

/// Seeded per-class isotropic Gaussian blobs. Class centroids sit
/// `separation` apart along a seeded random direction.
Dataset synth_generate(const SynthConfig& config);

}  // namespace setti
