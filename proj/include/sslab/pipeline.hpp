#pragma once

// Experiment harness: synthetic data, the embed → reduce → select → label →
// classify → score workflow, seed aggregation, and the reducer/classifier
// ablation grid.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sslab/classify.hpp"
#include "sslab/gan.hpp"
#include "sslab/matrix.hpp"
#include "sslab/rng.hpp"
#include "sslab/sampler.hpp"
#include "sslab/tsne.hpp"

namespace sslab {

struct SyntheticDatasetSpec {
  std::uint32_t n_images = 600;
  std::uint32_t image_side = 16;
  double positive_fraction = 0.5;
  double lesion_radius_min = 2.0;
  double lesion_radius_max = 3.0;
  double lesion_intensity = 1.0;
  double background_noise_sigma = 0.05;
  std::uint64_t seed = 7;

  /// Throws ConfigError on the first invalid field.
  void validate() const;

  friend bool operator==(const SyntheticDatasetSpec&, const SyntheticDatasetSpec&) = default;
};

constexpr double kBackgroundLevel = -1.0;
constexpr double kOrganLevel = -0.2;

struct Dataset {
  std::size_t side = 0;
  Matrix images;  // n × side², row-major pixels, binary32-representable
  LabelSet truth;
  std::vector<std::string> ids;
};

/// Dark background, a randomized bright ellipse, and for positive images a
/// disc of `lesion_intensity` fully inside the ellipse; Gaussian noise, then
/// clamping to [−1, 1]. Exactly round(n · positive_fraction) images are
/// positive. Pixels are rounded to binary32 so file round-trips are exact.
[[nodiscard]] Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec, Rng& rng);
[[nodiscard]] Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec);

enum class Reducer { tsne, pca, none };
enum class ClassifierKind { nn, linear };

[[nodiscard]] std::string_view to_string(Reducer r);
[[nodiscard]] std::string_view to_string(ClassifierKind c);
[[nodiscard]] Reducer parse_reducer(std::string_view s);
[[nodiscard]] ClassifierKind parse_classifier(std::string_view s);

struct ExperimentConfig {
  std::size_t k_labels = 50;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  SamplerMethod sampler = SamplerMethod::fps;
  Reducer reducer = Reducer::tsne;
  ClassifierKind classifier = ClassifierKind::nn;
  tsne::TsneConfig tsne;
  double test_fraction = 0.15;

  [[nodiscard]] std::size_t n_seeds() const { return seeds.size(); }
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Per-stage random streams derived from one experiment seed.
enum class Stage : std::uint64_t { split = 1, reduce = 2, select = 3 };
[[nodiscard]] Rng stage_rng(std::uint64_t seed, Stage stage);

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// round(n · test_fraction) indices go to test, chosen by a seeded shuffle.
[[nodiscard]] Split split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

/// Reduced coordinates of every row, rounded to binary32.
[[nodiscard]] Matrix reduce_embeddings(const Matrix& embeddings, Reducer reducer,
                                       const tsne::TsneConfig& cfg, std::uint64_t seed);

/// Selects k of the `pool` rows; returned indices are global row indices.
[[nodiscard]] SelectionResult select_from_pool(const Matrix& points, const std::vector<std::size_t>& pool,
                                               std::size_t k, SamplerMethod method, std::uint64_t seed);

[[nodiscard]] Predictions classify_points(const Matrix& points, const LabelSet& labeled, ClassifierKind kind);

/// Metrics over the test indices only.
[[nodiscard]] MetricsReport evaluate_on(const Predictions& predictions, const LabelSet& truth,
                                        const std::vector<std::size_t>& test);

struct SeedRun {
  std::uint64_t seed = 0;
  MetricsReport metrics;
  std::vector<std::size_t> selected;
  std::size_t test_size = 0;

  friend bool operator==(const SeedRun&, const SeedRun&) = default;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // denominator count − 1; 0 for a single value
  std::size_t count = 0;  // seeds where the metric was defined

  // NaN (no defined values) compares equal to NaN.
  friend bool operator==(const Summary& a, const Summary& b) {
    const auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.count == b.count && same(a.mean, b.mean) && same(a.std, b.std);
  }
};

inline constexpr const char* kMetricNames[] = {"accuracy", "sensitivity", "specificity", "precision", "auc"};

[[nodiscard]] Ratio metric_value(const MetricsReport& m, std::string_view name);

struct RunReport {
  ExperimentConfig config;
  std::vector<SeedRun> runs;
  std::map<std::string, Summary> summary;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Aggregates defined metric values in ascending seed order.
[[nodiscard]] std::map<std::string, Summary> summarize(const std::vector<SeedRun>& runs);

/// One seed of the workflow on already-reduced coordinates.
[[nodiscard]] SeedRun run_seed_on_reduced(const Matrix& reduced, const LabelSet& truth,
                                          const ExperimentConfig& cfg, std::uint64_t seed);

[[nodiscard]] RunReport run_experiment(const Matrix& embeddings, const LabelSet& truth,
                                       const ExperimentConfig& cfg);
/// Embeds with the encoder head first; embeddings are carried at binary32.
[[nodiscard]] RunReport run_experiment(const Matrix& images, const LabelSet& truth,
                                       const GanParams& params, const ExperimentConfig& cfg);

using GridKey = std::tuple<std::size_t, Reducer, ClassifierKind>;
using AblationGrid = std::map<GridKey, RunReport>;

inline constexpr std::size_t kAblationK[] = {10, 20, 50};

/// Every {tsne, pca, none} × {nn, linear} cell for k ∈ {10, 20, 50}, sharing
/// base_cfg's seeds. Reductions are computed once per (seed, reducer).
[[nodiscard]] AblationGrid ablation_grid(const Matrix& embeddings, const LabelSet& truth,
                                         const ExperimentConfig& base_cfg);

/// Unbiased squared MMD with kernel exp(−‖a − b‖² / (2h²)) on rows. Equal-size
/// sets use the paired U-statistic, which is exactly 0 for identical sets.
/// Needs at least two rows per set.
[[nodiscard]] double mmd_rbf(const Matrix& a, const Matrix& b, double bandwidth);

/// Median pairwise distance between rows; a common bandwidth choice.
[[nodiscard]] double median_distance(const Matrix& x);

}  // namespace sslab
