#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gan_checks.hpp"
#include "oracles.hpp"
#include "sslab/error.hpp"
#include "sslab/gan.hpp"
#include "sslab/numkit.hpp"
#include "sslab/pipeline.hpp"

using namespace sslab;
using namespace gancheck;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

TEST(GanConfig, ValidateRejectsBadFields) {
  GanConfig c = tiny_config();
  EXPECT_NO_THROW(c.validate());
  c.shared_fraction = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(GanForward, ZeroWeightsGiveZeroOutputs) {
  const GanConfig cfg = tiny_config();
  const GanParams p = zero_params(cfg);
  const std::vector<double> z(cfg.z_dim, 0.7);
  const StyleVector w = map_latent(z, p);
  EXPECT_EQ(w, StyleVector(cfg.w_dim, 0.0));
  const Matrix img = synthesize(w, p);
  EXPECT_EQ(img, Matrix(cfg.image_side, cfg.image_side, 0.0));
  const Discrimination d = discriminate(img, p);
  EXPECT_EQ(d.logit, 0.0);
  EXPECT_EQ(d.enc.w_hat, StyleVector(cfg.w_dim, 0.0));
}

TEST(GanForward, SynthesisRangeAndDeterminism) {
  const GanConfig cfg = tiny_config();
  Rng rng(5);
  const GanParams p = init_params(cfg, rng);
  Rng again(5);
  EXPECT_EQ(init_params(cfg, again), p);
  std::vector<double> w(cfg.w_dim);
  for (double& v : w) v = 3.0 * rng.normal();
  const Matrix img = synthesize(w, p);
  for (double v : img.values()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(synthesize(w, p), img);
}

TEST(GanForward, MappingMatchesHandForward) {
  GanConfig cfg = tiny_config();
  cfg.mapping_layers = 1;
  Rng rng(13);
  const GanParams p = init_params(cfg, rng);
  const std::vector<double> z{0.3, -1.2, 0.8, 2.0};
  const DenseLayer& l = p.mapping.layers.at(0);
  const StyleVector w = map_latent(z, p);
  for (std::size_t o = 0; o < cfg.w_dim; ++o) {
    double s = l.bias[o];
    for (std::size_t i = 0; i < 4; ++i) s += l.weight(o, i) * z[i];
    EXPECT_NEAR(w[o], s, 1e-14);  // single linear output layer
  }
}

TEST(GanForward, HeadsShareOnlyTheTrunk) {
  const GanConfig cfg = tiny_config();
  Rng rng(2);
  GanParams p = init_params(cfg, rng);
  const Matrix img = synthesize(std::vector<double>(cfg.w_dim, 0.5), p);
  const Discrimination before = discriminate(img, p);
  for (auto& layer : p.enc_head.layers)
    for (double& v : layer.weight.values()) v += 1.0;
  const Discrimination after = discriminate(img, p);
  EXPECT_EQ(before.logit, after.logit);
  EXPECT_NE(before.enc.w_hat, after.enc.w_hat);
}

TEST(GanForward, BatchMatchesSingle) {
  const GanConfig cfg = tiny_config();
  Rng rng(3);
  const GanParams p = init_params(cfg, rng);
  Matrix images(5, cfg.pixels());
  for (double& v : images.values()) v = std::tanh(rng.normal());
  const Matrix e = embed(images, p);
  const auto logits = logits_batch(images, p);
  for (std::size_t r = 0; r < 5; ++r) {
    const Matrix img(cfg.image_side, cfg.image_side, std::vector<double>(images.row(r).begin(), images.row(r).end()));
    const Discrimination d = discriminate(img, p);
    EXPECT_NEAR(d.logit, logits[r], 1e-12);
    for (std::size_t c = 0; c < cfg.w_dim; ++c) EXPECT_NEAR(d.enc.w_hat[c], e(r, c), 1e-12);
  }
}

TEST(GanForward, ShapeErrors) {
  const GanConfig cfg = tiny_config();
  const GanParams p = zero_params(cfg);
  EXPECT_THROW((void)map_latent(std::vector<double>(3), p), ShapeError);
  EXPECT_THROW((void)discriminate(Matrix(4, 4), p), ShapeError);
  GanConfig other = cfg;
  other.w_dim = 6;
  EXPECT_THROW(check_shapes(p, other), ShapeError);
}

TEST(LogLikelihood, PerfectPredictionInEightDimensions) {
  const std::vector<double> w{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_NEAR(log_likelihood(w, EncoderOutput{w}), -4.0 * kLog2Pi, 1e-12);
  EXPECT_NEAR(-4.0 * kLog2Pi, -7.35151, 1e-5);
}

TEST(LogLikelihood, OneDimensionalOffset) {
  const std::vector<double> w{std::sqrt(2.0)};
  EXPECT_NEAR(log_likelihood(w, EncoderOutput{{0.0}}), -0.5 * kLog2Pi - 1.0, 1e-12);
  EXPECT_THROW((void)log_likelihood(w, EncoderOutput{{0.0, 1.0}}), ShapeError);
}

TEST(Losses, ZeroParamsGiveLogTwo) {
  GanConfig cfg = tiny_config();
  Rng rng(4);
  const Batch b = tiny_batch(cfg, rng);
  const GanLosses l = gan_losses(b.z, b.real, zero_params(cfg), cfg);
  EXPECT_NEAR(l.loss_g, std::log(2.0), 1e-15);
  EXPECT_NEAR(l.loss_d, 2.0 * std::log(2.0), 1e-15);
  EXPECT_EQ(l.r1, 0.0);
}

TEST(Losses, EncoderLossMatchesTermByTermOracle) {
  const GanConfig cfg = tiny_config();
  Rng rng(6);
  const GanParams p = init_params(cfg, rng);
  const Batch b = tiny_batch(cfg, rng);

  const Matrix w = map_latent_batch(b.z, p);
  const Matrix w_hat = encode_batch(synthesize_batch(w, p), p);
  double ll = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const StyleVector wh(w_hat.row(r).begin(), w_hat.row(r).end());
    ll += log_likelihood(w.row(r), EncoderOutput{wh});
  }
  ll /= static_cast<double>(w.rows());
  const Matrix rec = synthesize_batch(encode_batch(b.real, p), p);
  double mse = 0.0;
  for (std::size_t k = 0; k < rec.size(); ++k) mse += std::pow(rec.values()[k] - b.real.values()[k], 2);
  mse /= static_cast<double>(rec.size());
  const double want = -cfg.lambda * ll + cfg.beta * mse;

  EXPECT_NEAR(encoder_loss(b.z, b.real, p, cfg), want, 1e-12);
  const GanLosses l = gan_losses(b.z, b.real, p, cfg);
  EXPECT_NEAR(l.loss_e, want, 1e-12);
  EXPECT_NEAR(l.log_likelihood_term, -cfg.lambda * ll, 1e-12);
  EXPECT_NEAR(l.reconstruction_term, cfg.beta * mse, 1e-12);
  EXPECT_DOUBLE_EQ(l.loss_e, l.log_likelihood_term + l.reconstruction_term);
}

TEST(Losses, AdversarialMatchesSoftplusOracle) {
  GanConfig cfg = tiny_config();
  cfg.r1_gamma = 0.0;
  Rng rng(7);
  const GanParams p = init_params(cfg, rng);
  const Batch b = tiny_batch(cfg, rng);
  const auto fake = logits_batch(synthesize_batch(map_latent_batch(b.z, p), p), p);
  const auto real = logits_batch(b.real, p);
  double g = 0.0, d = 0.0;
  for (double l : fake) {
    g += softplus(-l) / fake.size();
    d += softplus(l) / fake.size();
  }
  for (double l : real) d += softplus(-l) / real.size();
  const GanLosses l = gan_losses(b.z, b.real, p, cfg);
  EXPECT_NEAR(l.loss_g, g, 1e-12);
  EXPECT_NEAR(l.loss_d, d, 1e-12);
}

class GradientFidelity : public ::testing::TestWithParam<std::tuple<Loss, ParamGroup>> {};

TEST_P(GradientFidelity, MatchesCentralDifferences) {
  const auto [which, group] = GetParam();
  GanConfig cfg = tiny_config();
  cfg.r1_gamma = 0.0;
  Rng rng(21);
  const GanParams p = init_params(cfg, rng);
  const Batch b = tiny_batch(cfg, rng);
  EXPECT_LE(fd_error(cfg, p, b, which, group), 1e-3) << group_name(group);
}

INSTANTIATE_TEST_SUITE_P(AllGroups, GradientFidelity,
                         ::testing::Combine(::testing::Values(Loss::g, Loss::d, Loss::e),
                                            ::testing::ValuesIn(kAllGroups)));

TEST(Gradients, R1PenaltyMatchesFiniteDifferences) {
  GanConfig cfg = tiny_config();
  cfg.r1_gamma = 1.0;
  Rng rng(22);
  const GanParams p = init_params(cfg, rng);
  const Batch b = tiny_batch(cfg, rng);
  for (ParamGroup g : {ParamGroup::trunk, ParamGroup::disc_head}) {
    EXPECT_LE(fd_error(cfg, p, b, Loss::d, g), 1e-3) << group_name(g);
  }
}

TEST(Gradients, HeadIsolationIsExact) {
  const GanConfig cfg = tiny_config();
  Rng rng(23);
  const GanParams p = init_params(cfg, rng);
  const Batch b = tiny_batch(cfg, rng);
  const GanGradients g = gan_gradients(b.z, b.real, p, cfg);
  EXPECT_TRUE(all_zero(g.loss_d.enc_head));
  EXPECT_TRUE(all_zero(g.loss_g.enc_head));
  EXPECT_TRUE(all_zero(g.log_likelihood.disc_head));
  EXPECT_TRUE(all_zero(g.reconstruction.disc_head));
}

TEST(Training, DeterministicAndZeroStepsIsIdentity) {
  GanConfig cfg = tiny_config();
  cfg.steps = 5;
  Rng data_rng(1);
  Matrix data(12, cfg.pixels());
  for (double& v : data.values()) v = std::tanh(data_rng.normal());
  Rng a(9), b(9);
  const TrainResult ra = train(data, cfg, a);
  const TrainResult rb = train(data, cfg, b);
  EXPECT_EQ(ra.params, rb.params);
  EXPECT_EQ(ra.history, rb.history);
  EXPECT_EQ(ra.history.size(), 5U);

  cfg.steps = 0;
  Rng init_rng(3);
  const GanParams init = init_params(cfg, init_rng);
  Rng c(9);
  EXPECT_EQ(train(data, cfg, c, init).params, init);
}

TEST(Training, DivergenceReportsStep) {
  GanConfig cfg = tiny_config();
  cfg.steps = 50;
  cfg.learning_rate = 1e6;
  Rng data_rng(1);
  Matrix data(8, cfg.pixels());
  for (double& v : data.values()) v = std::tanh(data_rng.normal());
  Rng rng(1);
  try {
    (void)train(data, cfg, rng);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_LT(e.step(), 50U);
  }
}

TEST(Training, ReconstructionImprovesOnSmallSyntheticSet) {
  SyntheticDatasetSpec spec;
  spec.n_images = 64;
  const Dataset d = make_synthetic_dataset(spec);
  GanConfig cfg;
  Rng init_rng(derive_seed(spec.seed, 1));
  const GanParams init = init_params(cfg, init_rng);
  Rng rng(derive_seed(spec.seed, 2));
  const TrainResult r = train(d.images, cfg, rng, init);
  EXPECT_LT(reconstruction_mse(d.images, r.params), reconstruction_mse(d.images, init));
}

TEST(ClassDirection, RecoversPlantedAxis) {
  Rng rng(8);
  Matrix emb(60, 5);
  LabelSet labels;
  for (std::size_t r = 0; r < 60; ++r) {
    const int y = r % 2;
    labels.set(r, y);
    for (std::size_t c = 0; c < 5; ++c) emb(r, c) = rng.normal(0.0, 0.3);
    emb(r, 0) += y ? 2.0 : -2.0;
  }
  const auto dir = class_direction(emb, labels);
  EXPECT_GT(dir[0], 0.99);

  LabelSet flipped;
  for (const auto& [i, y] : labels.entries()) flipped.set(i, 1 - y);
  const auto neg = class_direction(emb, flipped);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(neg[c], -dir[c], 1e-6);

  Matrix scaled = emb;
  for (double& v : scaled.values()) v *= 10.0;
  const auto same = class_direction(scaled, labels);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(same[c], dir[c], 1e-6);
}

TEST(Manipulate, ZeroAlphaAndNormCheck) {
  const GanConfig cfg = tiny_config();
  Rng rng(10);
  const GanParams p = init_params(cfg, rng);
  std::vector<double> w(cfg.w_dim, 0.2);
  std::vector<double> dir(cfg.w_dim, 0.0);
  dir[0] = 1.0;
  EXPECT_EQ(manipulate(w, dir, 0.0, p), synthesize(w, p));
  EXPECT_NE(manipulate(w, dir, 1.5, p), manipulate(w, dir, -1.5, p));
  dir[0] = 2.0;
  EXPECT_THROW((void)manipulate(w, dir, 1.0, p), ArgumentError);
}
