#include "cli.hpp"

#include <CLI11.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sslab/config.hpp"
#include "sslab/error.hpp"
#include "sslab/gan.hpp"
#include "sslab/io.hpp"
#include "sslab/kernels.hpp"
#include "sslab/numkit.hpp"
#include "sslab/pipeline.hpp"

namespace sslab::cli {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config;
  int threads = 1;
};

RunConfig load(const Globals& g) {
  if (g.config.empty()) return parse_config("");
  return load_config(g.config);
}

// Experiment fields that may be overridden on the command line.
struct ExperimentFlags {
  CLI::Option* k = nullptr;
  CLI::Option* sampler = nullptr;
  CLI::Option* reducer = nullptr;
  CLI::Option* classifier = nullptr;
  CLI::Option* seeds = nullptr;
  CLI::Option* test_fraction = nullptr;
  std::size_t k_value = 0;
  std::string sampler_value, reducer_value, classifier_value;
  std::vector<std::uint64_t> seeds_value;
  double test_fraction_value = 0.0;

  void attach(CLI::App* app, bool with_seeds) {
    k = app->add_option("--k", k_value, "number of labels to request");
    sampler = app->add_option("--method", sampler_value, "fps or rs");
    reducer = app->add_option("--reducer", reducer_value, "tsne, pca or none");
    classifier = app->add_option("--classifier", classifier_value, "nn or linear");
    test_fraction = app->add_option("--test-fraction", test_fraction_value, "held-out fraction");
    if (with_seeds) seeds = app->add_option("--seeds", seeds_value, "comma-separated seeds")->delimiter(',');
  }

  void apply(ExperimentConfig& c) const {
    if (k && k->count()) c.k_labels = k_value;
    if (sampler && sampler->count()) c.sampler = parse_sampler(sampler_value);
    if (reducer && reducer->count()) c.reducer = parse_reducer(reducer_value);
    if (classifier && classifier->count()) c.classifier = parse_classifier(classifier_value);
    if (test_fraction && test_fraction->count()) c.test_fraction = test_fraction_value;
    if (seeds && seeds->count()) c.seeds = seeds_value;
  }
};

// Labels aligned to rows: by id when ids are known, else by file order.
LabelSet truth_for(const fs::path& labels, const std::vector<std::string>& ids, std::size_t n) {
  const auto rows = io::read_labels(labels);
  if (!ids.empty()) return io::labels_for_ids(rows, ids);
  if (rows.size() != n) {
    throw IoError(labels.string() + ": " + std::to_string(rows.size()) + " labels for " + std::to_string(n) +
                  " rows");
  }
  LabelSet truth;
  for (std::size_t i = 0; i < n; ++i) truth.set(i, rows[i].label);
  return truth;
}

std::vector<std::string> ids_from_labels(const fs::path& labels) {
  std::vector<std::string> ids;
  for (const auto& row : io::read_labels(labels)) ids.push_back(row.id);
  return ids;
}

GanConfig gan_for_images(const RunConfig& rc, std::size_t side) {
  GanConfig g = rc.gan;
  if (!rc.present.contains("image-side")) {
    g.image_side = static_cast<std::uint32_t>(side);
  } else if (g.image_side != side) {
    throw ConfigError("image-side = " + std::to_string(g.image_side) + " but the images are " +
                      std::to_string(side) + " pixels wide");
  }
  return g;
}

io::Tensor read_square_tensor(const fs::path& path) {
  io::Tensor t = io::read_tensor(path);
  if (t.rows != t.cols) throw IoError(path.string() + ": images are not square");
  return t;
}

// Embeddings from either an EMB1 file or images plus parameters.
struct EmbeddingSource {
  std::string embeddings, images, params;

  void attach(CLI::App* app) {
    auto* e = app->add_option("--embeddings", embeddings, "EMB1 embeddings");
    auto* i = app->add_option("--images", images, "TNS1 images (needs --params)");
    auto* p = app->add_option("--params", params, "SSG1 parameters");
    e->excludes(i)->excludes(p);
    i->needs(p);
  }

  [[nodiscard]] io::EmbFile load(const fs::path& labels) const {
    if (!embeddings.empty()) return io::read_emb1(embeddings);
    if (images.empty()) throw ConfigError("one of --embeddings or --images/--params is required");
    const io::Tensor t = read_square_tensor(images);
    const auto [cfg, params_] = io::read_params(params);
    if (cfg.image_side != t.rows) throw ConfigError("parameters expect a different image side");
    io::EmbFile f{embed(t.images, params_), ids_from_labels(labels)};
    round_to_binary32(f.values.values());
    if (f.ids.size() != f.values.rows()) throw IoError(labels.string() + ": label count does not match images");
    return f;
  }
};

void print_summary(std::ostream& out, const RunReport& r) {
  for (const char* name : kMetricNames) {
    const Summary& s = r.summary.at(name);
    out << name << " ";
    if (s.count == 0) {
      out << "undefined\n";
    } else {
      out << s.mean << " ± " << s.std << " (" << s.count << " seeds)\n";
    }
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-efficient classification on self-supervised GAN embeddings", "sslab"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value config file");
  app.add_option("--threads", g.threads, "threads for the parallel kernels")->check(CLI::PositiveNumber);

  std::map<std::string, std::function<void()>> actions;
  auto command = [&](const char* name, const char* help) { return app.add_subcommand(name, help); };

  // synth-data
  std::string spec_path, out_dir;
  {
    CLI::App* c = command("synth-data", "write a synthetic lesion dataset");
    c->add_option("--spec", spec_path, "dataset config file")->required();
    c->add_option("--out", out_dir, "output directory")->required();
    actions[c->get_name()] = [&] {
      const RunConfig rc = load_config(spec_path);
      const Dataset d = make_synthetic_dataset(rc.data);
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
      const fs::path dir(out_dir);
      io::write_tensor(dir / "images.tns", d.images, d.side);
      io::write_labels(dir / "labels.csv", d.ids, d.truth);
      std::ofstream echo(dir / "spec.cfg");
      echo << format_dataset_spec(rc.data);
      if (!echo) throw IoError("cannot write " + (dir / "spec.cfg").string());
      out << d.images.rows() << " images (" << d.truth.count(1) << " positive) written to " << out_dir << "\n";
    };
  }

  // train
  std::string images_path, params_path, out_path, labels_path, points_path, selection_path;
  std::uint64_t seed = 1;
  {
    CLI::App* c = command("train", "train the GAN with its discriminator-side encoder");
    c->add_option("--images", images_path, "TNS1 images")->required();
    c->add_option("--out", out_path, "SSG1 output")->required();
    c->add_option("--seed", seed, "training seed");
    actions[c->get_name()] = [&] {
      const RunConfig rc = load(g);
      const io::Tensor t = read_square_tensor(images_path);
      const GanConfig cfg = gan_for_images(rc, t.rows);
      Rng rng(seed);
      const TrainResult r = train(t.images, cfg, rng);
      io::write_params(out_path, cfg, r.params);
      out << "trained " << cfg.steps << " steps; reconstruction MSE " << reconstruction_mse(t.images, r.params)
          << "\n";
    };
  }

  // embed
  {
    CLI::App* c = command("embed", "map images to encoder embeddings");
    c->add_option("--params", params_path, "SSG1 parameters")->required();
    c->add_option("--images", images_path, "TNS1 images")->required();
    c->add_option("--labels", labels_path, "labels CSV supplying row ids");
    c->add_option("--out", out_path, "EMB1 output")->required();
    actions[c->get_name()] = [&] {
      const io::Tensor t = read_square_tensor(images_path);
      const auto [cfg, params] = io::read_params(params_path);
      if (cfg.image_side != t.rows) throw ConfigError("parameters expect a different image side");
      const Matrix emb = embed(t.images, params);
      std::vector<std::string> ids;
      if (!labels_path.empty()) {
        ids = ids_from_labels(labels_path);
        if (ids.size() != emb.rows()) throw IoError(labels_path + ": label count does not match images");
      }
      io::write_emb1(out_path, emb, ids);
      out << emb.rows() << " × " << emb.cols() << " embeddings\n";
    };
  }

  // reduce
  ExperimentFlags reduce_flags, select_flags, classify_flags, evaluate_flags;
  {
    CLI::App* c = command("reduce", "reduce embeddings (t-SNE, PCA or identity)");
    c->add_option("--embeddings", points_path, "EMB1 input")->required();
    c->add_option("--reducer", reduce_flags.reducer_value, "tsne, pca or none");
    reduce_flags.reducer = c->get_option("--reducer");
    c->add_option("--seed", seed, "experiment seed");
    c->add_option("--out", out_path, "EMB1 output")->required();
    actions[c->get_name()] = [&] {
      RunConfig rc = load(g);
      reduce_flags.apply(rc.experiment);
      const io::EmbFile in = io::read_emb1(points_path);
      const Matrix y = reduce_embeddings(in.values, rc.experiment.reducer, rc.experiment.tsne, seed);
      io::write_emb1(out_path, y, in.ids);
      out << "reduced to " << y.cols() << " dimensions with " << to_string(rc.experiment.reducer) << "\n";
    };
  }

  // select
  CLI::Option* start_opt = nullptr;
  std::size_t start = 0;
  {
    CLI::App* c = command("select", "choose which points to label");
    c->add_option("--points", points_path, "EMB1 points")->required();
    select_flags.k = c->add_option("--k", select_flags.k_value, "number of labels");
    select_flags.sampler = c->add_option("--method", select_flags.sampler_value, "fps or rs");
    select_flags.test_fraction = c->add_option("--test-fraction", select_flags.test_fraction_value, "held-out fraction");
    c->add_option("--seed", seed, "experiment seed");
    start_opt = c->add_option("--start", start, "FPS start row; selects over every row with no held-out split");
    c->add_option("--out", out_path, "selection JSON output")->required();
    actions[c->get_name()] = [&] {
      RunConfig rc = load(g);
      select_flags.apply(rc.experiment);
      const ExperimentConfig& e = rc.experiment;
      const io::EmbFile in = io::read_emb1(points_path);
      const std::size_t n = in.values.rows();
      io::SelectionFile f;
      f.n = n;
      f.k = e.k_labels;
      if (start_opt->count()) {
        if (e.sampler != SamplerMethod::fps) throw ConfigError("--start only applies to --method fps");
        if (start >= n) throw ArgumentError("--start " + std::to_string(start) + " is out of range");
        if (e.k_labels > n) throw ArgumentError("k-labels exceeds the number of points");
        f.selection = fps_from(in.values, e.k_labels, start, seed);
        for (std::size_t i = 0; i < n; ++i) f.train.push_back(i);
      } else {
        e.validate();
        const Split split = split_indices(n, e.test_fraction, seed);
        f.selection = select_from_pool(in.values, split.train, e.k_labels, e.sampler, seed);
        f.test_fraction = e.test_fraction;
        f.train = split.train;
        f.test = split.test;
      }
      io::write_json(out_path, io::to_json(f));
      out << "selected " << f.selection.indices.size() << " of " << n << " points\n";
    };
  }

  // classify
  {
    CLI::App* c = command("classify", "label the selected points and classify the rest");
    c->add_option("--points", points_path, "EMB1 points")->required();
    c->add_option("--selection", selection_path, "selection JSON")->required();
    c->add_option("--labels", labels_path, "labels CSV")->required();
    classify_flags.classifier = c->add_option("--classifier", classify_flags.classifier_value, "nn or linear");
    c->add_option("--out", out_path, "predictions CSV output")->required();
    actions[c->get_name()] = [&] {
      RunConfig rc = load(g);
      classify_flags.apply(rc.experiment);
      const io::EmbFile in = io::read_emb1(points_path);
      const io::SelectionFile sel = io::selection_from_json(io::read_json(selection_path));
      if (sel.n != in.values.rows()) throw IoError(selection_path + ": selection was made on a different point set");
      const LabelSet truth = truth_for(labels_path, in.ids, in.values.rows());
      const LabelSet labeled = truth.restricted_to(sel.selection.indices);
      const Predictions p = classify_points(in.values, labeled, rc.experiment.classifier);
      io::write_predictions(out_path, p, io::ids_or_indices(in.ids, in.values.rows()));
      out << p.indices.size() << " points classified\n";
    };
  }

  // evaluate
  std::vector<std::string> prediction_paths, selection_paths;
  {
    CLI::App* c = command("evaluate", "score predictions on the held-out points");
    c->add_option("--points", points_path, "EMB1 the predictions refer to (for ids)")->required();
    c->add_option("--predictions", prediction_paths, "predictions CSV, one per seed")->required();
    c->add_option("--selection", selection_paths, "selection JSON, one per seed, same order")->required();
    c->add_option("--labels", labels_path, "labels CSV")->required();
    evaluate_flags.reducer = c->add_option("--reducer", evaluate_flags.reducer_value, "recorded in the report");
    evaluate_flags.classifier = c->add_option("--classifier", evaluate_flags.classifier_value, "recorded in the report");
    c->add_option("--out", out_path, "runreport JSON output")->required();
    actions[c->get_name()] = [&] {
      if (prediction_paths.size() != selection_paths.size()) {
        throw ConfigError("--predictions and --selection must be given the same number of times");
      }
      RunConfig rc = load(g);
      evaluate_flags.apply(rc.experiment);
      const io::EmbFile in = io::read_emb1(points_path);
      const LabelSet truth = truth_for(labels_path, in.ids, in.values.rows());
      ExperimentConfig cfg = rc.experiment;
      cfg.seeds.clear();
      std::vector<SeedRun> runs;
      for (std::size_t s = 0; s < prediction_paths.size(); ++s) {
        const io::SelectionFile sel = io::selection_from_json(io::read_json(selection_paths[s]));
        if (sel.n != in.values.rows()) throw IoError(selection_paths[s] + ": different point set");
        cfg.k_labels = sel.k;
        cfg.sampler = sel.selection.method;
        cfg.test_fraction = sel.test_fraction;
        cfg.seeds.push_back(sel.selection.seed);
        SeedRun r;
        r.seed = sel.selection.seed;
        r.selected = sel.selection.indices;
        r.test_size = sel.test.size();
        r.metrics = evaluate_on(io::read_predictions(prediction_paths[s]), truth, sel.test);
        runs.push_back(std::move(r));
      }
      RunReport report;
      report.config = cfg;
      report.runs = std::move(runs);
      report.summary = summarize(report.runs);
      io::write_json(out_path, io::to_json(report));
      print_summary(out, report);
    };
  }

  // experiment / ablation
  std::array<EmbeddingSource, 2> sources;
  std::array<ExperimentFlags, 2> exp_flags;
  for (std::size_t which = 0; which < 2; ++which) {
    const bool grid = which == 1;
    const char* name = grid ? "ablation" : "experiment";
    CLI::App* c = command(name, grid ? "run every reducer × classifier × k cell"
                                     : "run the full workflow over several seeds");
    sources[which].attach(c);
    c->add_option("--labels", labels_path, "labels CSV")->required();
    exp_flags[which].attach(c, true);
    c->add_option("--out", out_path, grid ? "ablation JSON output" : "runreport JSON output")->required();
    actions[c->get_name()] = [&, grid, &source = sources[which], &flags = exp_flags[which]] {
      RunConfig rc = load(g);
      flags.apply(rc.experiment);
      const io::EmbFile emb = source.load(labels_path);
      const LabelSet truth = truth_for(labels_path, emb.ids, emb.values.rows());
      if (grid) {
        const AblationGrid cells = ablation_grid(emb.values, truth, rc.experiment);
        io::write_json(out_path, io::to_json(cells));
        for (const auto& [key, report] : cells) {
          const auto& [k, red, cls] = key;
          out << "k=" << k << " " << to_string(red) << "/" << to_string(cls) << " auc "
              << report.summary.at("auc").mean << "\n";
        }
      } else {
        const RunReport report = run_experiment(emb.values, truth, rc.experiment);
        io::write_json(out_path, io::to_json(report));
        print_summary(out, report);
      }
    };
  }

  // manipulate
  std::size_t index = 0;
  double alpha_min = -3.0, alpha_max = 3.0;
  std::size_t frames = 7;
  {
    CLI::App* c = command("manipulate", "walk one image along the class direction");
    c->add_option("--params", params_path, "SSG1 parameters")->required();
    c->add_option("--images", images_path, "TNS1 images")->required();
    c->add_option("--labels", labels_path, "labels CSV used to fit the direction")->required();
    c->add_option("--index", index, "image to manipulate")->required();
    c->add_option("--alpha-min", alpha_min, "first step size");
    c->add_option("--alpha-max", alpha_max, "last step size");
    c->add_option("--frames", frames, "number of images in the strip")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
    c->add_option("--out", out_path, "PGM sequence output")->required();
    actions[c->get_name()] = [&] {
      const io::Tensor t = read_square_tensor(images_path);
      const auto [cfg, params] = io::read_params(params_path);
      if (cfg.image_side != t.rows) throw ConfigError("parameters expect a different image side");
      if (index >= t.images.rows()) throw ArgumentError("--index is out of range");
      Matrix emb = embed(t.images, params);
      round_to_binary32(emb.values());
      const LabelSet truth = truth_for(labels_path, {}, t.images.rows());
      const std::vector<double> dir = class_direction(emb, truth);
      const auto w = emb.row(index);
      std::vector<Matrix> strip;
      for (std::size_t f = 0; f < frames; ++f) {
        const double alpha = alpha_min + (alpha_max - alpha_min) * static_cast<double>(f) / (frames - 1);
        strip.push_back(manipulate(w, dir, alpha, params));
      }
      io::write_pgm_sequence(out_path, strip);
      out << frames << " frames written\n";
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidation;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  const auto fail = [&](const std::exception& e, int code) {
    err << "sslab " << stage << ": " << e.what() << "\n";
    return code;
  };
  try {
    kernels::set_threads(g.threads);
    actions.at(stage)();
    return kOk;
  } catch (const DivergenceError& e) {
    err << "sslab " << stage << ": diverged at step " << e.step() << ": " << e.what() << "\n";
    return kNumeric;
  } catch (const NumericError& e) {
    return fail(e, kNumeric);
  } catch (const IoError& e) {
    return fail(e, kIo);
  } catch (const fs::filesystem_error& e) {
    return fail(e, kIo);
  } catch (const Error& e) {
    // Config, argument, shape, degenerate-data and calibration failures.
    return fail(e, kValidation);
  }
}

}  // namespace sslab::cli
