#include "sslab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "sslab/error.hpp"
#include "sslab/kernels.hpp"
#include "sslab/numkit.hpp"

namespace sslab {

void SyntheticDatasetSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (n_images < 1) fail("n-images must be at least 1");
  if (image_side < 4) fail("image-side must be at least 4");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) fail("positive-fraction must be in (0, 1)");
  if (!(lesion_radius_min > 0.0)) fail("lesion-radius-min must be positive");
  if (!(lesion_radius_max >= lesion_radius_min)) fail("lesion-radius-max must be >= lesion-radius-min");
  if (!(lesion_radius_max < image_side / 2.0)) fail("lesion-radius-max must be below image-side / 2");
  if (!(lesion_intensity >= -1.0 && lesion_intensity <= 1.0)) fail("lesion-intensity must be in [-1, 1]");
  if (!(background_noise_sigma >= 0.0) || !std::isfinite(background_noise_sigma))
    fail("background-noise-sigma must be >= 0");
}

namespace {

struct Ellipse {
  double cx, cy, a, b, cos_t, sin_t;

  [[nodiscard]] bool contains(double x, double y) const {
    const double u = x - cx;
    const double v = y - cy;
    const double ru = cos_t * u + sin_t * v;
    const double rv = -sin_t * u + cos_t * v;
    return (ru * ru) / (a * a) + (rv * rv) / (b * b) <= 1.0;
  }
};

void render_image(const SyntheticDatasetSpec& spec, bool positive, Rng& rng, std::span<double> px) {
  const std::size_t s = spec.image_side;
  const double side = static_cast<double>(s);
  const double mid = (side - 1.0) / 2.0;
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const Ellipse organ{mid + rng.uniform(-0.08, 0.08) * side, mid + rng.uniform(-0.08, 0.08) * side,
                      rng.uniform(0.30, 0.42) * side,        rng.uniform(0.26, 0.36) * side,
                      std::cos(theta),                        std::sin(theta)};
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t c = 0; c < s; ++c)
      px[r * s + c] = organ.contains(static_cast<double>(c), static_cast<double>(r)) ? kOrganLevel
                                                                                       : kBackgroundLevel;
  if (positive) {
    const double radius = rng.uniform(spec.lesion_radius_min, spec.lesion_radius_max);
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double lx = rng.uniform(0.0, side - 1.0);
      const double ly = rng.uniform(0.0, side - 1.0);
      std::vector<std::size_t> disc;
      bool inside = true;
      for (std::size_t r = 0; r < s && inside; ++r) {
        for (std::size_t c = 0; c < s; ++c) {
          const double dx = static_cast<double>(c) - lx;
          const double dy = static_cast<double>(r) - ly;
          if (dx * dx + dy * dy > radius * radius) continue;
          if (!organ.contains(static_cast<double>(c), static_cast<double>(r))) {
            inside = false;
            break;
          }
          disc.push_back(r * s + c);
        }
      }
      if (inside && !disc.empty()) {
        for (std::size_t k : disc) px[k] = spec.lesion_intensity;
        placed = true;
      }
    }
    if (!placed) throw ArgumentError("synthetic dataset: lesion does not fit inside the organ");
  }
  for (double& v : px) {
    v = std::clamp(v + spec.background_noise_sigma * rng.normal(), -1.0, 1.0);
  }
  round_to_binary32(px);
}

}  // namespace

Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.n_images;
  Dataset ds;
  ds.side = spec.image_side;
  ds.images = Matrix(n, std::size_t{spec.image_side} * spec.image_side);

  const auto positives = static_cast<std::size_t>(std::llround(n * spec.positive_fraction));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.below(i))]);
  }
  std::vector<int> label(n, 0);
  for (std::size_t k = 0; k < positives; ++k) label[perm[k]] = 1;

  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    render_image(spec, label[i] == 1, rng, ds.images.row(i));
    ds.truth.set(i, label[i]);
    std::snprintf(id, sizeof id, "img%05zu", i);
    ds.ids.emplace_back(id);
  }
  return ds;
}

Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec) {
  Rng rng(spec.seed);
  return make_synthetic_dataset(spec, rng);
}

std::string_view to_string(Reducer r) {
  switch (r) {
    case Reducer::tsne: return "tsne";
    case Reducer::pca: return "pca";
    case Reducer::none: return "none";
  }
  return "?";
}

std::string_view to_string(ClassifierKind c) { return c == ClassifierKind::nn ? "nn" : "linear"; }

Reducer parse_reducer(std::string_view s) {
  if (s == "tsne" || s == "t-sne") return Reducer::tsne;
  if (s == "pca") return Reducer::pca;
  if (s == "none") return Reducer::none;
  throw ConfigError("unknown reducer '" + std::string(s) + "' (expected tsne, pca or none)");
}

ClassifierKind parse_classifier(std::string_view s) {
  if (s == "nn") return ClassifierKind::nn;
  if (s == "linear") return ClassifierKind::linear;
  throw ConfigError("unknown classifier '" + std::string(s) + "' (expected nn or linear)");
}

void ExperimentConfig::validate() const {
  if (k_labels < 1) throw ConfigError("k-labels must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test-fraction must be in [0, 1)");
  tsne.validate();
}

Rng stage_rng(std::uint64_t seed, Stage stage) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(stage)));
}

Split split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  Rng rng = stage_rng(seed, Stage::split);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.below(i))]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  Split s;
  s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

Matrix reduce_embeddings(const Matrix& embeddings, Reducer reducer, const tsne::TsneConfig& cfg,
                         std::uint64_t seed) {
  Matrix out;
  switch (reducer) {
    case Reducer::tsne: {
      Rng rng = stage_rng(seed, Stage::reduce);
      out = tsne::run(embeddings, cfg, rng).points;
      break;
    }
    case Reducer::pca:
      out = pca(embeddings, std::min<std::size_t>(cfg.out_dim, embeddings.cols())).projected;
      break;
    case Reducer::none:
      out = embeddings;
      break;
  }
  round_to_binary32(out.values());
  return out;
}

SelectionResult select_from_pool(const Matrix& points, const std::vector<std::size_t>& pool, std::size_t k,
                                 SamplerMethod method, std::uint64_t seed) {
  if (k > pool.size()) {
    throw ArgumentError("k-labels = " + std::to_string(k) + " exceeds the " + std::to_string(pool.size()) +
                        " candidate points");
  }
  Rng rng = stage_rng(seed, Stage::select);
  SelectionResult sel = method == SamplerMethod::fps ? fps(points.gather_rows(pool), k, rng)
                                                     : random_select(pool.size(), k, rng);
  for (auto& idx : sel.indices) idx = pool[idx];
  sel.seed = seed;
  return sel;
}

Predictions classify_points(const Matrix& points, const LabelSet& labeled, ClassifierKind kind) {
  return kind == ClassifierKind::nn ? nn_classify(points, labeled) : linear_classify(points, labeled);
}

MetricsReport evaluate_on(const Predictions& predictions, const LabelSet& truth,
                          const std::vector<std::size_t>& test) {
  Predictions sub;
  std::size_t k = 0;
  for (std::size_t idx : test) {
    while (k < predictions.indices.size() && predictions.indices[k] < idx) ++k;
    if (k == predictions.indices.size() || predictions.indices[k] != idx) {
      throw ArgumentError("evaluate: test index " + std::to_string(idx) + " has no prediction");
    }
    sub.indices.push_back(idx);
    sub.classes.push_back(predictions.classes[k]);
    sub.scores.push_back(predictions.scores[k]);
  }
  return compute_metrics(sub, truth.restricted_to(test));
}

Ratio metric_value(const MetricsReport& m, std::string_view name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "sensitivity") return m.sensitivity;
  if (name == "specificity") return m.specificity;
  if (name == "precision") return m.precision;
  if (name == "auc") return m.auc;
  throw ArgumentError("unknown metric " + std::string(name));
}

std::map<std::string, Summary> summarize(const std::vector<SeedRun>& runs) {
  std::vector<const SeedRun*> ordered;
  for (const auto& r : runs) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SeedRun* a, const SeedRun* b) { return a->seed < b->seed; });
  std::map<std::string, Summary> out;
  for (const char* name : kMetricNames) {
    std::vector<double> vals;
    for (const SeedRun* r : ordered) {
      const Ratio v = metric_value(r->metrics, name);
      if (v.defined) vals.push_back(v.value);
    }
    Summary s;
    s.count = vals.size();
    if (vals.empty()) {
      s.mean = s.std = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double v : vals) sum += v;
      s.mean = sum / static_cast<double>(vals.size());
      double sq = 0.0;
      for (double v : vals) sq += (v - s.mean) * (v - s.mean);
      s.std = vals.size() >= 2 ? std::sqrt(sq / static_cast<double>(vals.size() - 1)) : 0.0;
    }
    out.emplace(name, s);
  }
  return out;
}

SeedRun run_seed_on_reduced(const Matrix& reduced, const LabelSet& truth, const ExperimentConfig& cfg,
                            std::uint64_t seed) {
  const Split split = split_indices(reduced.rows(), cfg.test_fraction, seed);
  const SelectionResult sel = select_from_pool(reduced, split.train, cfg.k_labels, cfg.sampler, seed);
  const LabelSet labeled = truth.restricted_to(sel.indices);
  const Predictions pred = classify_points(reduced, labeled, cfg.classifier);
  SeedRun run;
  run.seed = seed;
  run.selected = sel.indices;
  run.test_size = split.test.size();
  run.metrics = evaluate_on(pred, truth, split.test);
  return run;
}

namespace {

void check_truth(const Matrix& embeddings, const LabelSet& truth) {
  if (truth.size() != embeddings.rows()) {
    throw ArgumentError("experiment: " + std::to_string(truth.size()) + " labels for " +
                        std::to_string(embeddings.rows()) + " embeddings");
  }
  for (std::size_t i = 0; i < embeddings.rows(); ++i)
    if (!truth.contains(i)) throw ArgumentError("experiment: no label for row " + std::to_string(i));
}

RunReport finish(const ExperimentConfig& cfg, std::vector<SeedRun> runs) {
  RunReport rep;
  rep.config = cfg;
  rep.runs = std::move(runs);
  rep.summary = summarize(rep.runs);
  return rep;
}

// Seeds run in parallel; any exception is rethrown for the lowest failing seed.
template <typename Fn>
void for_each_seed(std::size_t count, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(kernels::threads())
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    try {
      fn(static_cast<std::size_t>(s));
    } catch (...) {
      errors[static_cast<std::size_t>(s)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

RunReport run_experiment(const Matrix& embeddings, const LabelSet& truth, const ExperimentConfig& cfg) {
  cfg.validate();
  check_truth(embeddings, truth);
  std::vector<SeedRun> runs(cfg.seeds.size());
  for_each_seed(cfg.seeds.size(), [&](std::size_t s) {
    const std::uint64_t seed = cfg.seeds[s];
    const Matrix reduced = reduce_embeddings(embeddings, cfg.reducer, cfg.tsne, seed);
    runs[s] = run_seed_on_reduced(reduced, truth, cfg, seed);
  });
  return finish(cfg, std::move(runs));
}

RunReport run_experiment(const Matrix& images, const LabelSet& truth, const GanParams& params,
                         const ExperimentConfig& cfg) {
  Matrix emb = embed(images, params);
  round_to_binary32(emb.values());
  return run_experiment(emb, truth, cfg);
}

AblationGrid ablation_grid(const Matrix& embeddings, const LabelSet& truth, const ExperimentConfig& base) {
  base.validate();
  check_truth(embeddings, truth);
  constexpr Reducer reducers[] = {Reducer::tsne, Reducer::pca, Reducer::none};
  constexpr ClassifierKind classifiers[] = {ClassifierKind::nn, ClassifierKind::linear};
  constexpr std::size_t n_cells = std::size(kAblationK) * std::size(reducers) * std::size(classifiers);

  const std::size_t n_seeds = base.seeds.size();
  // runs[cell][seed]
  std::vector<std::vector<SeedRun>> runs(n_cells, std::vector<SeedRun>(n_seeds));
  auto cell_index = [&](std::size_t ki, std::size_t ri, std::size_t ci) {
    return (ki * std::size(reducers) + ri) * std::size(classifiers) + ci;
  };
  for_each_seed(n_seeds, [&](std::size_t s) {
    const std::uint64_t seed = base.seeds[s];
    for (std::size_t ri = 0; ri < std::size(reducers); ++ri) {
      const Matrix reduced = reduce_embeddings(embeddings, reducers[ri], base.tsne, seed);
      for (std::size_t ki = 0; ki < std::size(kAblationK); ++ki) {
        for (std::size_t ci = 0; ci < std::size(classifiers); ++ci) {
          ExperimentConfig cfg = base;
          cfg.k_labels = kAblationK[ki];
          cfg.reducer = reducers[ri];
          cfg.classifier = classifiers[ci];
          runs[cell_index(ki, ri, ci)][s] = run_seed_on_reduced(reduced, truth, cfg, seed);
        }
      }
    }
  });

  AblationGrid grid;
  for (std::size_t ki = 0; ki < std::size(kAblationK); ++ki) {
    for (std::size_t ri = 0; ri < std::size(reducers); ++ri) {
      for (std::size_t ci = 0; ci < std::size(classifiers); ++ci) {
        ExperimentConfig cfg = base;
        cfg.k_labels = kAblationK[ki];
        cfg.reducer = reducers[ri];
        cfg.classifier = classifiers[ci];
        grid.emplace(GridKey{kAblationK[ki], reducers[ri], classifiers[ci]},
                     finish(cfg, std::move(runs[cell_index(ki, ri, ci)])));
      }
    }
  }
  return grid;
}

double mmd_rbf(const Matrix& a, const Matrix& b, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ArgumentError("mmd_rbf: bandwidth must be positive");
  if (a.cols() != b.cols()) throw ShapeError("mmd_rbf: sets have different dimensionality");
  if (a.rows() < 2 || b.rows() < 2) throw ArgumentError("mmd_rbf: each set needs at least 2 elements");
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  auto k = [&](std::span<const double> x, std::span<const double> y) {
    return std::exp(-squared_distance(x, y) * inv);
  };
  const std::size_t m = a.rows();
  const std::size_t n = b.rows();
  if (m == n) {
    double h = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        h += k(a.row(i), a.row(j)) + k(b.row(i), b.row(j)) - k(a.row(i), b.row(j)) - k(a.row(j), b.row(i));
      }
    }
    return h / static_cast<double>(m * (m - 1));
  }
  double kaa = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) kaa += k(a.row(i), a.row(j));
  double kbb = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) kbb += k(b.row(i), b.row(j));
  double kab = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) kab += k(a.row(i), b.row(j));
  const double dm = static_cast<double>(m);
  const double dn = static_cast<double>(n);
  return kaa / (dm * (dm - 1.0)) + kbb / (dn * (dn - 1.0)) - 2.0 * kab / (dm * dn);
}

double median_distance(const Matrix& x) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = i + 1; j < x.rows(); ++j) d.push_back(std::sqrt(squared_distance(x.row(i), x.row(j))));
  if (d.empty()) throw ArgumentError("median_distance: need at least 2 rows");
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace sslab
