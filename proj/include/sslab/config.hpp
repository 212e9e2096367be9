#pragma once

// Flat `key = value` config files. Blank lines and `#` comments are ignored;
// unknown or repeated keys are errors. Keys are the kebab-case field names:
//
//   GAN         z-dim w-dim image-side mapping-layers synthesis-widths (comma
//               list) trunk-layers head-layers shared-fraction lambda beta
//               r1-gamma learning-rate batch-size steps
//   t-SNE       tsne-perplexity tsne-iterations tsne-learning-rate
//               tsne-early-exaggeration tsne-exaggeration-iters
//               tsne-momentum-initial tsne-momentum-final
//               tsne-momentum-switch-iter tsne-out-dim
//   experiment  k-labels n-seeds seeds (comma list) sampler reducer
//               classifier test-fraction
//   dataset     n-images positive-fraction lesion-radius-min
//               lesion-radius-max lesion-intensity background-noise-sigma
//               data-seed (image-side is shared with the GAN)
//
// shared-fraction defaults to trunk-layers / (trunk-layers + head-layers).
// n-seeds N expands to seeds 1..N; giving both n-seeds and seeds is an error.

#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "sslab/gan.hpp"
#include "sslab/pipeline.hpp"

namespace sslab {

struct RunConfig {
  GanConfig gan;
  ExperimentConfig experiment;
  SyntheticDatasetSpec data;
  std::set<std::string> present;  // keys given explicitly
};

/// Parses and type-checks values; does not run the struct validators.
[[nodiscard]] RunConfig parse_config(std::string_view text, std::string_view source = "<config>");
/// Throws IoError when the file cannot be read.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

[[nodiscard]] std::string format_dataset_spec(const SyntheticDatasetSpec& spec);

}  // namespace sslab
