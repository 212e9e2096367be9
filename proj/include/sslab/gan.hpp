#pragma once

// Toy self-supervised style-based GAN.
//
// Topology: a mapping network z → w, a synthesis network w → image, and a
// discriminator whose shared trunk feeds two heads: a real/fake logit and an
// encoder that predicts the w that produced its input. All networks are
// dense; hidden layers use leaky ReLU (slope 0.2), the synthesis output uses
// tanh, every other output layer is linear.

#include <cstdint>
#include <span>
#include <vector>

#include "sslab/classify.hpp"
#include "sslab/matrix.hpp"
#include "sslab/rng.hpp"

namespace sslab {

struct GanConfig {
  std::uint32_t z_dim = 8;
  std::uint32_t w_dim = 16;
  std::uint32_t image_side = 16;
  std::uint32_t mapping_layers = 3;
  std::vector<std::uint32_t> synthesis_widths{64, 128};
  std::uint32_t trunk_layers = 3;
  std::uint32_t head_layers = 1;
  double shared_fraction = 0.75;
  double lambda = 10.0;
  double beta = 1.0;
  double r1_gamma = 1.0;
  double learning_rate = 1e-3;
  std::uint32_t batch_size = 32;
  std::uint32_t steps = 500;

  /// Throws ConfigError on the first invalid field.
  void validate() const;

  [[nodiscard]] std::size_t pixels() const { return std::size_t{image_side} * image_side; }
  /// Trunk layer widths: the synthesis widths mirrored, repeating the
  /// narrowest once they run out.
  [[nodiscard]] std::vector<std::size_t> trunk_widths() const;

  friend bool operator==(const GanConfig&, const GanConfig&) = default;
};

constexpr double kLeakySlope = 0.2;
constexpr double kMomentum = 0.9;

struct DenseLayer {
  Matrix weight;             // out × in
  std::vector<double> bias;  // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

enum class OutputActivation { linear, tanh };

/// Stack of dense layers. Hidden layers apply leaky ReLU; the last layer
/// applies `output` (or leaky ReLU too when `hidden_output` is set, which is
/// how the trunk is built).
struct Mlp {
  std::vector<DenseLayer> layers;
  OutputActivation output = OutputActivation::linear;
  bool hidden_output = false;

  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  void set_zero();

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

enum class ParamGroup { mapping, synthesis, trunk, disc_head, enc_head };
inline constexpr ParamGroup kAllGroups[] = {ParamGroup::mapping, ParamGroup::synthesis,
                                            ParamGroup::trunk, ParamGroup::disc_head,
                                            ParamGroup::enc_head};
[[nodiscard]] const char* group_name(ParamGroup g);

struct GanParams {
  Mlp mapping;
  Mlp synthesis;
  Mlp trunk;
  Mlp disc_head;
  Mlp enc_head;

  [[nodiscard]] Mlp& group(ParamGroup g);
  [[nodiscard]] const Mlp& group(ParamGroup g) const;
  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const GanParams&, const GanParams&) = default;
};

/// Shapes from `cfg`, every weight and bias set to zero.
[[nodiscard]] GanParams zero_params(const GanConfig& cfg);
/// Weights ~ N(0, 1/fan_in) drawn in group order, layer order, row-major;
/// biases zero.
[[nodiscard]] GanParams init_params(const GanConfig& cfg, Rng& rng);
/// Throws ShapeError when `params` does not have the shapes `cfg` implies.
void check_shapes(const GanParams& params, const GanConfig& cfg);

using StyleVector = std::vector<double>;

/// Σ(x) is the identity matrix by construction, so the encoder output is
/// just the mean estimate.
struct EncoderOutput {
  StyleVector w_hat;
  static constexpr bool identity_variance = true;
};

struct Discrimination {
  double logit = 0.0;
  EncoderOutput enc;
};

[[nodiscard]] StyleVector map_latent(std::span<const double> z, const GanParams& params);
/// image_side × image_side image with entries in (−1, 1).
[[nodiscard]] Matrix synthesize(std::span<const double> w, const GanParams& params);
[[nodiscard]] Discrimination discriminate(const Matrix& image, const GanParams& params);

/// Batched forward passes; rows are samples, images are flattened row-major.
[[nodiscard]] Matrix map_latent_batch(const Matrix& z, const GanParams& params);
[[nodiscard]] Matrix synthesize_batch(const Matrix& w, const GanParams& params);
[[nodiscard]] Matrix encode_batch(const Matrix& images, const GanParams& params);
[[nodiscard]] std::vector<double> logits_batch(const Matrix& images, const GanParams& params);

/// log P(w | x) for a Gaussian centered at w_hat with identity covariance.
[[nodiscard]] double log_likelihood(std::span<const double> w, const EncoderOutput& enc);

/// Encoder objective: λ · mean(−log P(w | G(w))) over generated pairs plus
/// β · mean MSE between real images and their reconstructions.
[[nodiscard]] double encoder_loss(const Matrix& z_batch, const Matrix& real_batch,
                                  const GanParams& params, const GanConfig& cfg);

struct GanLosses {
  double loss_g = 0.0;
  double loss_d = 0.0;  // adversarial + R1
  double loss_e = 0.0;  // log_likelihood_term + reconstruction_term
  double r1 = 0.0;      // (γ/2)·mean ‖∇ₓ logit_real‖², already inside loss_d
  double log_likelihood_term = 0.0;
  double reconstruction_term = 0.0;
};

[[nodiscard]] GanLosses gan_losses(const Matrix& z_batch, const Matrix& real_batch,
                                   const GanParams& params, const GanConfig& cfg);

/// Full analytic gradient of every loss term with respect to every
/// parameter group. Training routes only some of them (see train()).
struct GanGradients {
  GanLosses losses;
  GanParams loss_g;
  GanParams loss_d;
  GanParams log_likelihood;
  GanParams reconstruction;
};

[[nodiscard]] GanGradients gan_gradients(const Matrix& z_batch, const Matrix& real_batch,
                                         const GanParams& params, const GanConfig& cfg);

struct TrainStep {
  double loss_g = 0.0;
  double loss_d = 0.0;
  double loss_e = 0.0;

  friend bool operator==(const TrainStep&, const TrainStep&) = default;
};

struct TrainResult {
  GanParams params;
  std::vector<TrainStep> history;
};

/// Alternating momentum-SGD training. Each step draws a latent batch and a
/// real batch (with replacement), then
///  1. updates trunk, disc_head and enc_head with ∇(loss_d + loss_e);
///  2. recomputes at the new discriminator and updates mapping and synthesis
///     with ∇loss_g plus the reconstruction part of ∇loss_e.
/// The log-likelihood term treats generated (x, w) pairs as fixed samples, so
/// it never updates the generator or mapping network.
/// Throws DivergenceError carrying the step index if any loss is non-finite.
[[nodiscard]] TrainResult train(const Matrix& dataset, const GanConfig& cfg, Rng& rng);
[[nodiscard]] TrainResult train(const Matrix& dataset, const GanConfig& cfg, Rng& rng,
                                GanParams initial);

/// Mean over images of MSE(x, G(Enc(x))).
[[nodiscard]] double reconstruction_mse(const Matrix& images, const GanParams& params);

/// Row i is the encoder output for image i.
[[nodiscard]] Matrix embed(const Matrix& images, const GanParams& params);

/// Unit normal of a logistic-regression separator fit on the labeled rows.
[[nodiscard]] std::vector<double> class_direction(const Matrix& embeddings, const LabelSet& labels);

/// synthesize(w + alpha · direction). Throws ArgumentError when direction is
/// not unit length within 1e-6.
[[nodiscard]] Matrix manipulate(std::span<const double> w, std::span<const double> direction,
                                double alpha, const GanParams& params);

}  // namespace sslab
