#include "sslab/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sslab/error.hpp"
#include "sslab/numkit.hpp"

namespace sslab {

void LabelSet::set(std::size_t index, int label) {
  if (label != 0 && label != 1) {
    throw ArgumentError("label for index " + std::to_string(index) + " must be 0 or 1");
  }
  labels_[index] = label;
}

int LabelSet::at(std::size_t index) const {
  const auto it = labels_.find(index);
  if (it == labels_.end()) throw ArgumentError("no label for index " + std::to_string(index));
  return it->second;
}

std::size_t LabelSet::count(int label) const {
  return static_cast<std::size_t>(std::count_if(
      labels_.begin(), labels_.end(), [label](const auto& kv) { return kv.second == label; }));
}

std::vector<std::size_t> LabelSet::indices() const {
  std::vector<std::size_t> out;
  out.reserve(labels_.size());
  for (const auto& [idx, _] : labels_) out.push_back(idx);
  return out;
}

LabelSet LabelSet::restricted_to(std::span<const std::size_t> indices) const {
  LabelSet out;
  for (std::size_t idx : indices) out.set(idx, at(idx));
  return out;
}

namespace {

void check_labels(const Matrix& y, const LabelSet& labeled) {
  for (const auto& [idx, _] : labeled.entries()) {
    if (idx >= y.rows()) {
      throw ArgumentError("labeled index " + std::to_string(idx) + " outside " +
                          std::to_string(y.rows()) + " points");
    }
  }
}

std::vector<std::size_t> unlabeled_indices(std::size_t n, const LabelSet& labeled) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (!labeled.contains(i)) out.push_back(i);
  return out;
}

}  // namespace

std::vector<double> nn_score(const Matrix& y, const LabelSet& labeled) {
  check_labels(y, labeled);
  if (!labeled.has_both_classes()) throw DegenerateError("nn_score: both classes must be labeled");
  std::vector<double> scores;
  for (std::size_t i : unlabeled_indices(y.rows(), labeled)) {
    double best_pos = std::numeric_limits<double>::infinity();
    double best_neg = std::numeric_limits<double>::infinity();
    for (const auto& [idx, cls] : labeled.entries()) {
      const double d = squared_distance(y.row(i), y.row(idx));
      double& slot = cls == 1 ? best_pos : best_neg;
      slot = std::min(slot, d);
    }
    const double dp = std::sqrt(best_pos);
    const double dn = std::sqrt(best_neg);
    scores.push_back(dp + dn == 0.0 ? 0.5 : dn / (dp + dn));
  }
  return scores;
}

Predictions nn_classify(const Matrix& y, const LabelSet& labeled) {
  if (labeled.empty()) throw ArgumentError("nn_classify: labeled set is empty");
  check_labels(y, labeled);
  Predictions out;
  out.indices = unlabeled_indices(y.rows(), labeled);
  out.classes.reserve(out.indices.size());
  for (std::size_t i : out.indices) {
    double best = std::numeric_limits<double>::infinity();
    int cls = 0;
    for (const auto& [idx, c] : labeled.entries()) {
      const double d = squared_distance(y.row(i), y.row(idx));
      if (d < best) {
        best = d;
        cls = c;
      }
    }
    out.classes.push_back(cls);
  }
  if (labeled.has_both_classes()) {
    out.scores = nn_score(y, labeled);
  } else {
    out.scores.assign(out.classes.begin(), out.classes.end());
  }
  return out;
}

Predictions linear_classify(const Matrix& x, const LabelSet& labeled) {
  check_labels(x, labeled);
  if (!labeled.has_both_classes()) {
    throw DegenerateError("linear_classify: both classes must be labeled");
  }
  const std::vector<std::size_t> train_idx = labeled.indices();
  std::vector<int> train_labels;
  for (std::size_t idx : train_idx) train_labels.push_back(labeled.at(idx));
  const LogisticModel model = fit_logistic(x.gather_rows(train_idx), train_labels);

  Predictions out;
  out.indices = unlabeled_indices(x.rows(), labeled);
  for (std::size_t i : out.indices) {
    const double s = model.probability(x.row(i));
    out.scores.push_back(s);
    out.classes.push_back(s >= 0.5 ? 1 : 0);
  }
  return out;
}

Ratio mann_whitney_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: score and label counts differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    // 1-based ranks start+1 .. end share their mean
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    start = end;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return {};
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return Ratio::of(u, np * static_cast<double>(negatives));
}

MetricsReport compute_metrics(const Predictions& predictions, const LabelSet& truth) {
  if (predictions.classes.size() != predictions.indices.size() ||
      predictions.scores.size() != predictions.indices.size()) {
    throw ShapeError("compute_metrics: predictions are ragged");
  }
  if (truth.size() != predictions.indices.size()) {
    throw ArgumentError("compute_metrics: truth covers " + std::to_string(truth.size()) +
                        " indices, predictions " + std::to_string(predictions.indices.size()));
  }
  MetricsReport m;
  std::vector<int> labels;
  labels.reserve(truth.size());
  for (std::size_t k = 0; k < predictions.indices.size(); ++k) {
    const std::size_t idx = predictions.indices[k];
    if (!truth.contains(idx)) {
      throw ArgumentError("compute_metrics: no truth for predicted index " + std::to_string(idx));
    }
    const int t = truth.at(idx);
    const int p = predictions.classes[k];
    labels.push_back(t);
    if (t == 1 && p == 1) ++m.tp;
    if (t == 0 && p == 0) ++m.tn;
    if (t == 0 && p == 1) ++m.fp;
    if (t == 1 && p == 0) ++m.fn;
  }
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  m.accuracy = Ratio::of(d(m.tp + m.tn), d(m.tp + m.tn + m.fp + m.fn));
  m.sensitivity = Ratio::of(d(m.tp), d(m.tp + m.fn));
  m.specificity = Ratio::of(d(m.tn), d(m.tn + m.fp));
  m.precision = Ratio::of(d(m.tp), d(m.tp + m.fp));
  m.auc = mann_whitney_auc(predictions.scores, labels);
  return m;
}

}  // namespace sslab
