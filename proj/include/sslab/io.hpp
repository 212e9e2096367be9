#pragma once

// File formats. Every binary format is little-endian.
//
//  EMB1  embeddings
//        "EMB1" | u32 n | u32 d | n·d binary32 row-major
//        | optional: u32 byte length | UTF-8 ids joined by '\n'
//  TNS1  image tensor
//        "TNS1" | u32 n | u32 rows | u32 cols | n·rows·cols binary32
//  SSG1  GAN parameters
//        "SSG1" | GanConfig fields in declaration order (counts as u32,
//        scalars as binary64; synthesis_widths as u32 count then u32 each)
//        | for each group (mapping, synthesis, trunk, disc_head, enc_head),
//          for each layer: weights (u32 length, binary64 row-major out×in),
//          then bias (u32 length, binary64)
//  labels CSV   header "id,label", label 0 or 1
//  predictions CSV   header "id,index,label,score"
//  selection JSON    "schema": "selection/1"
//  RunReport JSON    "schema": "runreport/1"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sslab/classify.hpp"
#include "sslab/gan.hpp"
#include "sslab/matrix.hpp"
#include "sslab/pipeline.hpp"
#include "sslab/sampler.hpp"

namespace sslab::io {

namespace fs = std::filesystem;

struct EmbFile {
  Matrix values;
  std::vector<std::string> ids;  // empty when the file has no id block

  friend bool operator==(const EmbFile&, const EmbFile&) = default;
};

/// Values must be finite; they are written as binary32.
void write_emb1(const fs::path& path, const Matrix& values, const std::vector<std::string>& ids = {});
[[nodiscard]] EmbFile read_emb1(const fs::path& path);

void write_tensor(const fs::path& path, const Matrix& images, std::size_t side);
struct Tensor {
  Matrix images;  // n × rows·cols
  std::size_t rows = 0;
  std::size_t cols = 0;
};
[[nodiscard]] Tensor read_tensor(const fs::path& path);

void write_params(const fs::path& path, const GanConfig& cfg, const GanParams& params);
[[nodiscard]] std::pair<GanConfig, GanParams> read_params(const fs::path& path);

struct LabelRow {
  std::string id;
  int label = 0;
};
void write_labels(const fs::path& path, const std::vector<std::string>& ids, const LabelSet& labels);
[[nodiscard]] std::vector<LabelRow> read_labels(const fs::path& path);
/// Aligns labels to `ids` by id. Throws IoError for ids without a label.
[[nodiscard]] LabelSet labels_for_ids(const std::vector<LabelRow>& rows, const std::vector<std::string>& ids);

/// Ids "0".."n−1" when `ids` is empty.
[[nodiscard]] std::vector<std::string> ids_or_indices(const std::vector<std::string>& ids, std::size_t n);

struct SelectionFile {
  SelectionResult selection;
  std::size_t n = 0;
  std::size_t k = 0;
  double test_fraction = 0.0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
[[nodiscard]] nlohmann::json to_json(const SelectionFile& s);
[[nodiscard]] SelectionFile selection_from_json(const nlohmann::json& j);

void write_predictions(const fs::path& path, const Predictions& p, const std::vector<std::string>& ids);
[[nodiscard]] Predictions read_predictions(const fs::path& path);

[[nodiscard]] nlohmann::json to_json(const MetricsReport& m);
[[nodiscard]] MetricsReport metrics_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig& c);
[[nodiscard]] ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const RunReport& r);
[[nodiscard]] RunReport runreport_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const AblationGrid& grid);

void write_json(const fs::path& path, const nlohmann::json& j);
[[nodiscard]] nlohmann::json read_json(const fs::path& path);

/// Concatenated binary (P5) graymaps, one per image; values in [−1, 1] map to 0..255.
void write_pgm_sequence(const fs::path& path, const std::vector<Matrix>& images);

}  // namespace sslab::io
