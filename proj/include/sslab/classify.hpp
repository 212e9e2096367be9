#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "sslab/matrix.hpp"

namespace sslab {

/// Binary class per sample index: 0 negative, 1 positive.
class LabelSet {
 public:
  LabelSet() = default;

  void set(std::size_t index, int label);
  [[nodiscard]] bool contains(std::size_t index) const { return labels_.count(index) != 0; }
  [[nodiscard]] int at(std::size_t index) const;
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] bool empty() const noexcept { return labels_.empty(); }
  [[nodiscard]] std::size_t count(int label) const;
  [[nodiscard]] bool has_both_classes() const { return count(0) > 0 && count(1) > 0; }
  /// Ascending indices.
  [[nodiscard]] std::vector<std::size_t> indices() const;
  [[nodiscard]] LabelSet restricted_to(std::span<const std::size_t> indices) const;
  [[nodiscard]] const std::map<std::size_t, int>& entries() const noexcept { return labels_; }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::map<std::size_t, int> labels_;
};

/// Per-index outputs for every unlabeled point, ascending by index.
struct Predictions {
  std::vector<std::size_t> indices;
  std::vector<int> classes;
  std::vector<double> scores;  // P(positive)-like score in [0, 1]

  friend bool operator==(const Predictions&, const Predictions&) = default;
};

/// Each unlabeled row takes the class of its Euclidean-nearest labeled row;
/// exact distance ties go to the lowest labeled index. Fills scores with
/// nn_score when both classes are labeled, else with the hard class.
[[nodiscard]] Predictions nn_classify(const Matrix& y, const LabelSet& labeled);

/// d⁻ / (d⁺ + d⁻) for every unlabeled row, where d⁺ (d⁻) is the distance to
/// the nearest positive (negative) label; 0.5 when both are zero.
[[nodiscard]] std::vector<double> nn_score(const Matrix& y, const LabelSet& labeled);

/// Logistic regression on the labeled rows, applied to every unlabeled row.
[[nodiscard]] Predictions linear_classify(const Matrix& x, const LabelSet& labeled);

struct Ratio {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;

  static Ratio of(double num, double den) {
    if (den == 0.0) return {};
    return {num / den, true};
  }
  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.defined == b.defined && (!a.defined || a.value == b.value);
  }
};

struct MetricsReport {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  Ratio accuracy;
  Ratio sensitivity;
  Ratio specificity;
  Ratio precision;
  Ratio auc;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Mann–Whitney AUC with ties counted ½. Undefined when either class is absent.
[[nodiscard]] Ratio mann_whitney_auc(std::span<const double> scores, std::span<const int> labels);

/// Confusion counts and derived ratios over exactly the indices in
/// `predictions`. Throws ArgumentError when truth covers a different index set.
[[nodiscard]] MetricsReport compute_metrics(const Predictions& predictions, const LabelSet& truth);

}  // namespace sslab
