#include "sslab/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sslab/error.hpp"

namespace sslab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Ctx {
  std::string where;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where + ": " + key + ": " + what); }
};

template <typename T>
T parse_number(std::string_view v, const Ctx& ctx) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) ctx.fail("cannot parse '" + std::string(v) + "'");
  return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view v, const Ctx& ctx) {
  std::vector<T> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(parse_number<T>(trim(v.substr(0, comma)), ctx));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, const Ctx&)>;

template <typename T, typename F>
Setter number(F field) {
  return [field](RunConfig& c, std::string_view v, const Ctx& ctx) { field(c) = parse_number<T>(v, ctx); };
}

template <typename F, typename P>
Setter parsed(F field, P parse) {
  return [field, parse](RunConfig& c, std::string_view v, const Ctx& ctx) {
    try {
      field(c) = parse(v);
    } catch (const ConfigError& e) {
      ctx.fail(e.what());
    }
  };
}

const std::map<std::string, Setter, std::less<>>& registry() {
  using u32 = std::uint32_t;
  static const std::map<std::string, Setter, std::less<>> keys = {
      {"z-dim", number<u32>([](RunConfig& c) -> auto& { return c.gan.z_dim; })},
      {"w-dim", number<u32>([](RunConfig& c) -> auto& { return c.gan.w_dim; })},
      {"image-side",
       [](RunConfig& c, std::string_view v, const Ctx& ctx) {
         c.gan.image_side = parse_number<u32>(v, ctx);
         c.data.image_side = c.gan.image_side;
       }},
      {"mapping-layers", number<u32>([](RunConfig& c) -> auto& { return c.gan.mapping_layers; })},
      {"synthesis-widths",
       [](RunConfig& c, std::string_view v, const Ctx& ctx) { c.gan.synthesis_widths = parse_list<u32>(v, ctx); }},
      {"trunk-layers", number<u32>([](RunConfig& c) -> auto& { return c.gan.trunk_layers; })},
      {"head-layers", number<u32>([](RunConfig& c) -> auto& { return c.gan.head_layers; })},
      {"shared-fraction", number<double>([](RunConfig& c) -> auto& { return c.gan.shared_fraction; })},
      {"lambda", number<double>([](RunConfig& c) -> auto& { return c.gan.lambda; })},
      {"beta", number<double>([](RunConfig& c) -> auto& { return c.gan.beta; })},
      {"r1-gamma", number<double>([](RunConfig& c) -> auto& { return c.gan.r1_gamma; })},
      {"learning-rate", number<double>([](RunConfig& c) -> auto& { return c.gan.learning_rate; })},
      {"batch-size", number<u32>([](RunConfig& c) -> auto& { return c.gan.batch_size; })},
      {"steps", number<u32>([](RunConfig& c) -> auto& { return c.gan.steps; })},

      {"tsne-perplexity", number<double>([](RunConfig& c) -> auto& { return c.experiment.tsne.perplexity; })},
      {"tsne-iterations", number<u32>([](RunConfig& c) -> auto& { return c.experiment.tsne.iterations; })},
      {"tsne-learning-rate", number<double>([](RunConfig& c) -> auto& { return c.experiment.tsne.learning_rate; })},
      {"tsne-early-exaggeration",
       number<double>([](RunConfig& c) -> auto& { return c.experiment.tsne.early_exaggeration; })},
      {"tsne-exaggeration-iters",
       number<u32>([](RunConfig& c) -> auto& { return c.experiment.tsne.exaggeration_iters; })},
      {"tsne-momentum-initial",
       number<double>([](RunConfig& c) -> auto& { return c.experiment.tsne.momentum_initial; })},
      {"tsne-momentum-final", number<double>([](RunConfig& c) -> auto& { return c.experiment.tsne.momentum_final; })},
      {"tsne-momentum-switch-iter",
       number<u32>([](RunConfig& c) -> auto& { return c.experiment.tsne.momentum_switch_iter; })},
      {"tsne-out-dim", number<u32>([](RunConfig& c) -> auto& { return c.experiment.tsne.out_dim; })},

      {"k-labels", number<std::size_t>([](RunConfig& c) -> auto& { return c.experiment.k_labels; })},
      {"n-seeds",
       [](RunConfig& c, std::string_view v, const Ctx& ctx) {
         const auto n = parse_number<std::uint64_t>(v, ctx);
         c.experiment.seeds.clear();
         for (std::uint64_t s = 1; s <= n; ++s) c.experiment.seeds.push_back(s);
       }},
      {"seeds",
       [](RunConfig& c, std::string_view v, const Ctx& ctx) {
         c.experiment.seeds = parse_list<std::uint64_t>(v, ctx);
       }},
      {"sampler", parsed([](RunConfig& c) -> auto& { return c.experiment.sampler; }, parse_sampler)},
      {"reducer", parsed([](RunConfig& c) -> auto& { return c.experiment.reducer; }, parse_reducer)},
      {"classifier", parsed([](RunConfig& c) -> auto& { return c.experiment.classifier; }, parse_classifier)},
      {"test-fraction", number<double>([](RunConfig& c) -> auto& { return c.experiment.test_fraction; })},

      {"n-images", number<u32>([](RunConfig& c) -> auto& { return c.data.n_images; })},
      {"positive-fraction", number<double>([](RunConfig& c) -> auto& { return c.data.positive_fraction; })},
      {"lesion-radius-min", number<double>([](RunConfig& c) -> auto& { return c.data.lesion_radius_min; })},
      {"lesion-radius-max", number<double>([](RunConfig& c) -> auto& { return c.data.lesion_radius_max; })},
      {"lesion-intensity", number<double>([](RunConfig& c) -> auto& { return c.data.lesion_intensity; })},
      {"background-noise-sigma",
       number<double>([](RunConfig& c) -> auto& { return c.data.background_noise_sigma; })},
      {"data-seed", number<std::uint64_t>([](RunConfig& c) -> auto& { return c.data.seed; })},
  };
  return keys;
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view source) {
  RunConfig cfg;
  const auto& keys = registry();
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    Ctx ctx{std::string(source) + ":" + std::to_string(lineno), {}};
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(ctx.where + ": expected 'key = value'");
    ctx.key = std::string(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = keys.find(ctx.key);
    if (it == keys.end()) throw ConfigError(ctx.where + ": unknown key '" + ctx.key + "'");
    if (!cfg.present.insert(ctx.key).second) ctx.fail("given more than once");
    if (value.empty()) ctx.fail("missing value");
    it->second(cfg, value, ctx);
  }
  if (cfg.present.contains("n-seeds") && cfg.present.contains("seeds")) {
    throw ConfigError(std::string(source) + ": give either n-seeds or seeds, not both");
  }
  if (!cfg.present.contains("shared-fraction")) {
    const double t = cfg.gan.trunk_layers;
    cfg.gan.shared_fraction = t + cfg.gan.head_layers > 0 ? t / (t + cfg.gan.head_layers) : 0.0;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string format_dataset_spec(const SyntheticDatasetSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "n-images = " << spec.n_images << '\n'
      << "image-side = " << spec.image_side << '\n'
      << "positive-fraction = " << spec.positive_fraction << '\n'
      << "lesion-radius-min = " << spec.lesion_radius_min << '\n'
      << "lesion-radius-max = " << spec.lesion_radius_max << '\n'
      << "lesion-intensity = " << spec.lesion_intensity << '\n'
      << "background-noise-sigma = " << spec.background_noise_sigma << '\n'
      << "data-seed = " << spec.seed << '\n';
  return out.str();
}

}  // namespace sslab
