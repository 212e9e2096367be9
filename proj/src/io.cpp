#include "sslab/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "sslab/error.hpp"

namespace sslab::io {

namespace {

using Bytes = std::vector<unsigned char>;

class Writer {
 public:
  void magic(const char (&m)[5]) { bytes_.insert(bytes_.end(), m, m + 4); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<unsigned char>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<unsigned char>(v >> (8 * k)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void f64_array(std::span<const double> v) {
    u32(checked_u32(v.size()));
    for (double x : v) f64(x);
  }

  void save(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }

  static std::uint32_t checked_u32(std::size_t v) {
    if (v > UINT32_MAX) throw IoError("value does not fit in a 32-bit field");
    return static_cast<std::uint32_t>(v);
  }

 private:
  Bytes bytes_;
};

class Reader {
 public:
  Reader(const fs::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path_);
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void expect_magic(const char (&m)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0) {
      throw IoError(path_ + ": bad magic, expected " + std::string(m, 4));
    }
    pos_ += 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{bytes_[pos_ + k]} << (8 * k);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{bytes_[pos_ + k]} << (8 * k);
    pos_ += 8;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  void f64_array(std::span<double> out) {
    const std::uint32_t len = u32();
    if (len != out.size()) {
      throw IoError(path_ + ": array of length " + std::to_string(len) + " where " +
                    std::to_string(out.size()) + " expected");
    }
    for (double& v : out) v = f64();
  }

  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError(path_ + ": truncated file");
  }

  std::string path_;
  Bytes bytes_;
  std::size_t pos_ = 0;
};

std::string trim_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_emb1(const fs::path& path, const Matrix& values, const std::vector<std::string>& ids) {
  if (!values.all_finite()) throw NumericError("EMB1: refusing to write non-finite values");
  if (!ids.empty() && ids.size() != values.rows()) throw ShapeError("EMB1: id count differs from row count");
  Writer w;
  w.magic("EMB1");
  w.u32(Writer::checked_u32(values.rows()));
  w.u32(Writer::checked_u32(values.cols()));
  for (double v : values.values()) w.f32(v);
  if (!ids.empty()) {
    std::string block;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i].find('\n') != std::string::npos) throw ArgumentError("EMB1: ids may not contain newlines");
      if (i) block += '\n';
      block += ids[i];
    }
    w.u32(Writer::checked_u32(block.size()));
    w.raw(block);
  }
  w.save(path);
}

EmbFile read_emb1(const fs::path& path) {
  Reader r(path);
  r.expect_magic("EMB1");
  const std::size_t n = r.u32();
  const std::size_t d = r.u32();
  if (r.remaining() / 4 < n * d) throw IoError(r.path() + ": payload shorter than header claims");
  EmbFile f;
  f.values = Matrix(n, d);
  for (double& v : f.values.values()) {
    v = r.f32();
    if (!std::isfinite(v)) throw IoError(r.path() + ": non-finite embedding value");
  }
  if (r.remaining() > 0) {
    const std::size_t len = r.u32();
    const std::string block = r.raw(len);
    std::size_t start = 0;
    while (f.ids.size() < n) {
      const std::size_t end = block.find('\n', start);
      f.ids.push_back(block.substr(start, end == std::string::npos ? std::string::npos : end - start));
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (f.ids.size() != n) throw IoError(r.path() + ": id block has wrong number of ids");
  }
  if (r.remaining() != 0) throw IoError(r.path() + ": trailing bytes");
  return f;
}

void write_tensor(const fs::path& path, const Matrix& images, std::size_t side) {
  if (images.cols() != side * side) throw ShapeError("TNS1: image width does not match side");
  if (!images.all_finite()) throw NumericError("TNS1: refusing to write non-finite values");
  Writer w;
  w.magic("TNS1");
  w.u32(Writer::checked_u32(images.rows()));
  w.u32(Writer::checked_u32(side));
  w.u32(Writer::checked_u32(side));
  for (double v : images.values()) w.f32(v);
  w.save(path);
}

Tensor read_tensor(const fs::path& path) {
  Reader r(path);
  r.expect_magic("TNS1");
  Tensor t;
  const std::size_t n = r.u32();
  t.rows = r.u32();
  t.cols = r.u32();
  if (r.remaining() != 4 * n * t.rows * t.cols) throw IoError(r.path() + ": payload size disagrees with header");
  t.images = Matrix(n, t.rows * t.cols);
  for (double& v : t.images.values()) {
    v = r.f32();
    if (!std::isfinite(v)) throw IoError(r.path() + ": non-finite pixel");
  }
  return t;
}

void write_params(const fs::path& path, const GanConfig& cfg, const GanParams& params) {
  check_shapes(params, cfg);
  Writer w;
  w.magic("SSG1");
  w.u32(cfg.z_dim);
  w.u32(cfg.w_dim);
  w.u32(cfg.image_side);
  w.u32(cfg.mapping_layers);
  w.u32(Writer::checked_u32(cfg.synthesis_widths.size()));
  for (auto v : cfg.synthesis_widths) w.u32(v);
  w.u32(cfg.trunk_layers);
  w.u32(cfg.head_layers);
  w.f64(cfg.shared_fraction);
  w.f64(cfg.lambda);
  w.f64(cfg.beta);
  w.f64(cfg.r1_gamma);
  w.f64(cfg.learning_rate);
  w.u32(cfg.batch_size);
  w.u32(cfg.steps);
  for (ParamGroup g : kAllGroups) {
    for (const auto& layer : params.group(g).layers) {
      w.f64_array(layer.weight.values());
      w.f64_array(layer.bias);
    }
  }
  w.save(path);
}

std::pair<GanConfig, GanParams> read_params(const fs::path& path) {
  Reader r(path);
  r.expect_magic("SSG1");
  GanConfig cfg;
  cfg.z_dim = r.u32();
  cfg.w_dim = r.u32();
  cfg.image_side = r.u32();
  cfg.mapping_layers = r.u32();
  const std::uint32_t widths = r.u32();
  if (widths > 64) throw IoError(r.path() + ": implausible synthesis width count");
  cfg.synthesis_widths.resize(widths);
  for (auto& v : cfg.synthesis_widths) v = r.u32();
  cfg.trunk_layers = r.u32();
  cfg.head_layers = r.u32();
  cfg.shared_fraction = r.f64();
  cfg.lambda = r.f64();
  cfg.beta = r.f64();
  cfg.r1_gamma = r.f64();
  cfg.learning_rate = r.f64();
  cfg.batch_size = r.u32();
  cfg.steps = r.u32();
  GanParams params;
  try {
    params = zero_params(cfg);
  } catch (const ConfigError& e) {
    throw IoError(r.path() + ": stored config is invalid: " + e.what());
  }
  for (ParamGroup g : kAllGroups) {
    for (auto& layer : params.group(g).layers) {
      r.f64_array(layer.weight.values());
      r.f64_array(layer.bias);
    }
  }
  if (r.remaining() != 0) throw IoError(r.path() + ": trailing bytes");
  if (!params.all_finite()) throw IoError(r.path() + ": non-finite parameter");
  return {cfg, std::move(params)};
}

void write_labels(const fs::path& path, const std::vector<std::string>& ids, const LabelSet& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "id,label\n";
  for (const auto& [idx, label] : labels.entries()) {
    if (idx >= ids.size()) throw ShapeError("write_labels: label index beyond id list");
    out << ids[idx] << ',' << label << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<LabelRow> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != "id,label") {
    throw IoError(path.string() + ": expected header 'id,label'");
  }
  std::vector<LabelRow> rows;
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw IoError(path.string() + ":" + std::to_string(lineno) + ": missing comma");
    LabelRow row{line.substr(0, comma), 0};
    const std::string value = line.substr(comma + 1);
    if (value != "0" && value != "1") {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": label must be 0 or 1");
    }
    row.label = value == "1" ? 1 : 0;
    if (!seen.insert(row.id).second) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": duplicate id " + row.id);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

LabelSet labels_for_ids(const std::vector<LabelRow>& rows, const std::vector<std::string>& ids) {
  std::map<std::string, int> by_id;
  for (const auto& r : rows) by_id.emplace(r.id, r.label);
  LabelSet out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = by_id.find(ids[i]);
    if (it == by_id.end()) throw IoError("no label for id " + ids[i]);
    out.set(i, it->second);
  }
  return out;
}

std::vector<std::string> ids_or_indices(const std::vector<std::string>& ids, std::size_t n) {
  if (!ids.empty()) return ids;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

nlohmann::json to_json(const SelectionFile& s) {
  nlohmann::json j;
  j["schema"] = "selection/1";
  j["method"] = std::string(to_string(s.selection.method));
  j["seed"] = s.selection.seed;
  j["n"] = s.n;
  j["k"] = s.k;
  j["test_fraction"] = s.test_fraction;
  j["indices"] = s.selection.indices;
  j["train"] = s.train;
  j["test"] = s.test;
  return j;
}

SelectionFile selection_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema") != "selection/1") throw IoError("selection: unsupported schema");
    SelectionFile s;
    s.selection.method = parse_sampler(j.at("method").get<std::string>());
    s.selection.seed = j.at("seed").get<std::uint64_t>();
    s.selection.indices = j.at("indices").get<std::vector<std::size_t>>();
    s.n = j.at("n").get<std::size_t>();
    s.k = j.at("k").get<std::size_t>();
    s.test_fraction = j.at("test_fraction").get<double>();
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    for (std::size_t idx : s.selection.indices)
      if (idx >= s.n) throw IoError("selection: index out of range");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("selection: ") + e.what());
  }
}

void write_predictions(const fs::path& path, const Predictions& p, const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "id,index,label,score\n";
  for (std::size_t k = 0; k < p.indices.size(); ++k) {
    out << ids.at(p.indices[k]) << ',' << p.indices[k] << ',' << p.classes[k] << ','
        << format_double(p.scores[k]) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Predictions read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != "id,index,label,score") {
    throw IoError(path.string() + ": expected header 'id,index,label,score'");
  }
  Predictions p;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    // id may contain commas; the last three fields are numeric
    const auto c3 = line.rfind(',');
    const auto c2 = c3 == std::string::npos ? c3 : line.rfind(',', c3 - 1);
    const auto c1 = c2 == std::string::npos || c2 == 0 ? std::string::npos : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos) throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    try {
      p.indices.push_back(std::stoull(line.substr(c1 + 1, c2 - c1 - 1)));
      p.classes.push_back(std::stoi(line.substr(c2 + 1, c3 - c2 - 1)));
      p.scores.push_back(std::stod(line.substr(c3 + 1)));
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return p;
}

namespace {

nlohmann::json ratio_json(const Ratio& r) { return r.defined ? nlohmann::json(r.value) : nlohmann::json(nullptr); }

Ratio ratio_from(const nlohmann::json& j) {
  if (j.is_null()) return {};
  return {j.get<double>(), true};
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const MetricsReport& m) {
  return {{"tp", m.tp},
          {"tn", m.tn},
          {"fp", m.fp},
          {"fn", m.fn},
          {"accuracy", ratio_json(m.accuracy)},
          {"sensitivity", ratio_json(m.sensitivity)},
          {"specificity", ratio_json(m.specificity)},
          {"precision", ratio_json(m.precision)},
          {"auc", ratio_json(m.auc)}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.tp = j.at("tp").get<std::size_t>();
  m.tn = j.at("tn").get<std::size_t>();
  m.fp = j.at("fp").get<std::size_t>();
  m.fn = j.at("fn").get<std::size_t>();
  m.accuracy = ratio_from(j.at("accuracy"));
  m.sensitivity = ratio_from(j.at("sensitivity"));
  m.specificity = ratio_from(j.at("specificity"));
  m.precision = ratio_from(j.at("precision"));
  m.auc = ratio_from(j.at("auc"));
  return m;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& t = c.tsne;
  return {{"k_labels", c.k_labels},
          {"n_seeds", c.n_seeds()},
          {"seeds", c.seeds},
          {"sampler", std::string(to_string(c.sampler))},
          {"reducer", std::string(to_string(c.reducer))},
          {"classifier", std::string(to_string(c.classifier))},
          {"test_fraction", c.test_fraction},
          {"tsne",
           {{"perplexity", t.perplexity},
            {"iterations", t.iterations},
            {"learning_rate", t.learning_rate},
            {"early_exaggeration", t.early_exaggeration},
            {"exaggeration_iters", t.exaggeration_iters},
            {"momentum_initial", t.momentum_initial},
            {"momentum_final", t.momentum_final},
            {"momentum_switch_iter", t.momentum_switch_iter},
            {"out_dim", t.out_dim}}}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.k_labels = j.at("k_labels").get<std::size_t>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.sampler = parse_sampler(j.at("sampler").get<std::string>());
  c.reducer = parse_reducer(j.at("reducer").get<std::string>());
  c.classifier = parse_classifier(j.at("classifier").get<std::string>());
  c.test_fraction = j.at("test_fraction").get<double>();
  const auto& t = j.at("tsne");
  c.tsne.perplexity = t.at("perplexity").get<double>();
  c.tsne.iterations = t.at("iterations").get<std::uint32_t>();
  c.tsne.learning_rate = t.at("learning_rate").get<double>();
  c.tsne.early_exaggeration = t.at("early_exaggeration").get<double>();
  c.tsne.exaggeration_iters = t.at("exaggeration_iters").get<std::uint32_t>();
  c.tsne.momentum_initial = t.at("momentum_initial").get<double>();
  c.tsne.momentum_final = t.at("momentum_final").get<double>();
  c.tsne.momentum_switch_iter = t.at("momentum_switch_iter").get<std::uint32_t>();
  c.tsne.out_dim = t.at("out_dim").get<std::uint32_t>();
  return c;
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& s : r.runs) {
    runs.push_back({{"seed", s.seed}, {"metrics", to_json(s.metrics)}, {"selected", s.selected}, {"test_size", s.test_size}});
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [name, s] : r.summary) {
    summary[name] = {{"mean", number_or_null(s.mean)}, {"std", number_or_null(s.std)}, {"n", s.count}};
  }
  return {{"schema", "runreport/1"}, {"config", to_json(r.config)}, {"runs", runs}, {"summary", summary}};
}

RunReport runreport_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema") != "runreport/1") throw IoError("runreport: unsupported schema");
    RunReport r;
    r.config = experiment_config_from_json(j.at("config"));
    for (const auto& s : j.at("runs")) {
      SeedRun run;
      run.seed = s.at("seed").get<std::uint64_t>();
      run.metrics = metrics_from_json(s.at("metrics"));
      run.selected = s.at("selected").get<std::vector<std::size_t>>();
      run.test_size = s.at("test_size").get<std::size_t>();
      r.runs.push_back(std::move(run));
    }
    for (const auto& [name, s] : j.at("summary").items()) {
      Summary sum;
      sum.mean = s.at("mean").is_null() ? std::numeric_limits<double>::quiet_NaN() : s.at("mean").get<double>();
      sum.std = s.at("std").is_null() ? std::numeric_limits<double>::quiet_NaN() : s.at("std").get<double>();
      sum.count = s.at("n").get<std::size_t>();
      r.summary.emplace(name, sum);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("runreport: ") + e.what());
  }
}

nlohmann::json to_json(const AblationGrid& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, report] : grid) {
    const auto& [k, reducer, classifier] = key;
    cells.push_back({{"k", k},
                     {"reducer", std::string(to_string(reducer))},
                     {"classifier", std::string(to_string(classifier))},
                     {"report", to_json(report)}});
  }
  return {{"schema", "ablation/1"}, {"cells", cells}};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_pgm_sequence(const fs::path& path, const std::vector<Matrix>& images) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const Matrix& img : images) {
    out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
    for (double v : img.values()) {
      const double level = std::clamp((v + 1.0) * 127.5, 0.0, 255.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(level))));
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sslab::io
