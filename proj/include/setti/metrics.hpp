#pragma once

#include <optional>
#include <string>
#include <vector>

namespace setti {

/// Binary confusion counts with the malware class as "positive":
/// tp/tn/fp/fn correspond to the paper's zeta/eta/iota/omega.
struct ConfusionMatrix {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;

  long total() const { return tp + tn + fp + fn; }
};

/// Derived metric values. A metric whose denominator is zero is carried as
/// an empty optional, never as NaN or a silent default.
struct MetricsReport {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fpr;
  /// 0.5 * (tp/(tp+fp) + tn/(tn+fp)), exactly as the paper prints it.
  std::optional<double> auc_paper;
  /// Standard ranking AUC (Mann-Whitney), provided as a diagnostic; filled
  /// only when scores are available.
  std::optional<double> auc_roc;
};

ConfusionMatrix confusion_from_predictions(const std::vector<int>& predicted,
                                           const std::vector<int>& actual,
                                           int positive_class);

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

/// Probability that a random positive outscores a random negative, ties 0.5.
/// Undefined when only one class is present.
std::optional<double> auc_roc(const std::vector<double>& scores,
                              const std::vector<int>& actual,
                              int positive_class = 1);

/// "0.1234" with exactly four fractional digits, or "NA".
std::string format_metric(const std::optional<double>& v);

/// Flat key=value record, one metric per line, fixed key order.
std::string metrics_to_text(const MetricsReport& r);

}  // namespace setti
