#include "sslab/gan.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sslab/error.hpp"
#include "sslab/numkit.hpp"

namespace sslab {

// ---------------------------------------------------------------------------
// Configuration and parameter containers

void GanConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (z_dim < 1) fail("z-dim must be at least 1");
  if (w_dim < 1) fail("w-dim must be at least 1");
  if (image_side < 2) fail("image-side must be at least 2");
  if (mapping_layers < 1) fail("mapping-layers must be at least 1");
  if (synthesis_widths.empty()) fail("synthesis-widths must list at least one width");
  for (auto w : synthesis_widths)
    if (w < 1) fail("synthesis-widths entries must be positive");
  if (trunk_layers < 1) fail("trunk-layers must be at least 1");
  if (head_layers < 1) fail("head-layers must be at least 1");
  if (!(shared_fraction > 0.0 && shared_fraction <= 1.0)) fail("shared-fraction must be in (0, 1]");
  const double implied = static_cast<double>(trunk_layers) / (trunk_layers + head_layers);
  if (std::abs(shared_fraction - implied) > 1e-9) {
    fail("shared-fraction " + std::to_string(shared_fraction) + " disagrees with trunk-layers/(trunk-layers+head-layers) = " +
         std::to_string(implied));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be a finite value >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) fail("beta must be a finite value >= 0");
  if (!(r1_gamma >= 0.0) || !std::isfinite(r1_gamma)) fail("r1-gamma must be a finite value >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning-rate must be positive");
  if (batch_size < 1) fail("batch-size must be at least 1");
}

std::vector<std::size_t> GanConfig::trunk_widths() const {
  std::vector<std::size_t> out;
  for (std::uint32_t t = 0; t < trunk_layers; ++t) {
    const std::size_t k = std::min<std::size_t>(t, synthesis_widths.size() - 1);
    out.push_back(synthesis_widths[synthesis_widths.size() - 1 - k]);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void Mlp::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("Mlp::assign: wrong parameter count");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (double& v : l.weight.values()) v = flat[k++];
    for (double& v : l.bias) v = flat[k++];
  }
}

void Mlp::set_zero() {
  for (auto& l : layers) {
    for (double& v : l.weight.values()) v = 0.0;
    for (double& v : l.bias) v = 0.0;
  }
}

const char* group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::mapping: return "mapping";
    case ParamGroup::synthesis: return "synthesis";
    case ParamGroup::trunk: return "trunk";
    case ParamGroup::disc_head: return "disc_head";
    case ParamGroup::enc_head: return "enc_head";
  }
  return "?";
}

Mlp& GanParams::group(ParamGroup g) {
  return const_cast<Mlp&>(static_cast<const GanParams&>(*this).group(g));
}

const Mlp& GanParams::group(ParamGroup g) const {
  switch (g) {
    case ParamGroup::mapping: return mapping;
    case ParamGroup::synthesis: return synthesis;
    case ParamGroup::trunk: return trunk;
    case ParamGroup::disc_head: return disc_head;
    case ParamGroup::enc_head: return enc_head;
  }
  throw ArgumentError("unknown parameter group");
}

bool GanParams::all_finite() const {
  for (ParamGroup g : kAllGroups)
    for (const auto& l : group(g).layers) {
      if (!l.weight.all_finite()) return false;
      for (double b : l.bias)
        if (!std::isfinite(b)) return false;
    }
  return true;
}

namespace {

Mlp make_mlp(const std::vector<std::size_t>& widths, OutputActivation act, bool hidden_output) {
  Mlp m;
  m.output = act;
  m.hidden_output = hidden_output;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    m.layers.push_back({Matrix(widths[l + 1], widths[l], 0.0), std::vector<double>(widths[l + 1], 0.0)});
  }
  return m;
}

std::vector<std::size_t> head_widths(const GanConfig& cfg, std::size_t out) {
  const std::size_t width = cfg.trunk_widths().back();
  std::vector<std::size_t> w(cfg.head_layers, width);
  w.push_back(out);
  return w;
}

}  // namespace

GanParams zero_params(const GanConfig& cfg) {
  cfg.validate();
  GanParams p;
  std::vector<std::size_t> mw{cfg.z_dim};
  for (std::uint32_t l = 0; l < cfg.mapping_layers; ++l) mw.push_back(cfg.w_dim);
  p.mapping = make_mlp(mw, OutputActivation::linear, false);

  std::vector<std::size_t> sw{cfg.w_dim};
  for (auto w : cfg.synthesis_widths) sw.push_back(w);
  sw.push_back(cfg.pixels());
  p.synthesis = make_mlp(sw, OutputActivation::tanh, false);

  std::vector<std::size_t> tw{cfg.pixels()};
  for (auto w : cfg.trunk_widths()) tw.push_back(w);
  p.trunk = make_mlp(tw, OutputActivation::linear, true);

  p.disc_head = make_mlp(head_widths(cfg, 1), OutputActivation::linear, false);
  p.enc_head = make_mlp(head_widths(cfg, cfg.w_dim), OutputActivation::linear, false);
  return p;
}

GanParams init_params(const GanConfig& cfg, Rng& rng) {
  GanParams p = zero_params(cfg);
  for (ParamGroup g : kAllGroups) {
    for (auto& layer : p.group(g).layers) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
      for (double& v : layer.weight.values()) v = scale * rng.normal();
    }
  }
  return p;
}

void check_shapes(const GanParams& params, const GanConfig& cfg) {
  const GanParams ref = zero_params(cfg);
  for (ParamGroup g : kAllGroups) {
    const auto& a = params.group(g).layers;
    const auto& b = ref.group(g).layers;
    bool ok = a.size() == b.size();
    for (std::size_t l = 0; ok && l < a.size(); ++l) {
      ok = a[l].weight.rows() == b[l].weight.rows() && a[l].weight.cols() == b[l].weight.cols() &&
           a[l].bias.size() == b[l].bias.size();
    }
    if (!ok) throw ShapeError(std::string("parameter group ") + group_name(g) + " does not match config");
  }
}

// ---------------------------------------------------------------------------
// Forward and backward passes over a dense stack

namespace {

struct Tape {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix out;
};

double leaky(double a) { return a > 0.0 ? a : kLeakySlope * a; }
double leaky_slope(double a) { return a > 0.0 ? 1.0 : kLeakySlope; }

bool is_hidden(const Mlp& m, std::size_t l) { return l + 1 < m.layers.size() || m.hidden_output; }

Tape forward(const Mlp& m, const Matrix& x) {
  Tape t;
  Matrix cur = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    Matrix a = matmul_bt(cur, layer.weight);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      auto row = a.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
    }
    Matrix h = a;
    if (is_hidden(m, l)) {
      for (double& v : h.values()) v = leaky(v);
    } else if (m.output == OutputActivation::tanh) {
      for (double& v : h.values()) v = std::tanh(v);
    }
    t.inputs.push_back(std::move(cur));
    t.pre.push_back(std::move(a));
    cur = std::move(h);
  }
  t.out = std::move(cur);
  return t;
}

void add_into(Mlp& dst, const Mlp& src) {
  for (std::size_t l = 0; l < dst.layers.size(); ++l) {
    auto dw = dst.layers[l].weight.values();
    const auto sw = src.layers[l].weight.values();
    for (std::size_t k = 0; k < dw.size(); ++k) dw[k] += sw[k];
    for (std::size_t k = 0; k < dst.layers[l].bias.size(); ++k) dst.layers[l].bias[k] += src.layers[l].bias[k];
  }
}

// Returns the gradient with respect to the stack input; accumulates
// parameter gradients into `grads` when given.
Matrix backward(const Mlp& m, const Tape& t, const Matrix& grad_out, Mlp* grads) {
  Matrix g = grad_out;
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    Matrix delta = g;
    const Matrix& a = t.pre[l];
    if (is_hidden(m, l)) {
      for (std::size_t k = 0; k < delta.size(); ++k) delta.values()[k] *= leaky_slope(a.values()[k]);
    } else if (m.output == OutputActivation::tanh) {
      const Matrix& y = l + 1 < m.layers.size() ? t.inputs[l + 1] : t.out;
      for (std::size_t k = 0; k < delta.size(); ++k) {
        const double v = y.values()[k];
        delta.values()[k] *= 1.0 - v * v;
      }
    }
    if (grads != nullptr) {
      auto& gl = grads->layers[l];
      const Matrix gw = matmul_at(delta, t.inputs[l]);
      auto dst = gl.weight.values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gw.values()[k];
      for (std::size_t r = 0; r < delta.rows(); ++r)
        for (std::size_t c = 0; c < delta.cols(); ++c) gl.bias[c] += delta(r, c);
    }
    g = matmul(delta, m.layers[l].weight);
  }
  return g;
}

Matrix row_matrix(std::span<const double> v) { return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end())); }

std::vector<double> row_vector(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return {row.begin(), row.end()};
}

void require_cols(const Matrix& m, std::size_t cols, const char* what) {
  if (m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(cols) + " columns, got " +
                     std::to_string(m.cols()));
  }
}

std::size_t input_width(const Mlp& m) { return m.layers.front().weight.cols(); }

}  // namespace

StyleVector map_latent(std::span<const double> z, const GanParams& params) {
  if (z.size() != input_width(params.mapping)) {
    throw ShapeError("map_latent: z has length " + std::to_string(z.size()) + ", expected " +
                     std::to_string(input_width(params.mapping)));
  }
  return row_vector(forward(params.mapping, row_matrix(z)).out, 0);
}

Matrix synthesize(std::span<const double> w, const GanParams& params) {
  if (w.size() != input_width(params.synthesis)) {
    throw ShapeError("synthesize: w has length " + std::to_string(w.size()) + ", expected " +
                     std::to_string(input_width(params.synthesis)));
  }
  const Matrix flat = forward(params.synthesis, row_matrix(w)).out;
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(flat.cols()))));
  return Matrix(side, side, flat.storage());
}

Discrimination discriminate(const Matrix& image, const GanParams& params) {
  if (image.size() != input_width(params.trunk)) {
    throw ShapeError("discriminate: image has " + std::to_string(image.size()) + " pixels, expected " +
                     std::to_string(input_width(params.trunk)));
  }
  const Tape trunk = forward(params.trunk, row_matrix(image.values()));
  Discrimination d;
  d.logit = forward(params.disc_head, trunk.out).out(0, 0);
  d.enc.w_hat = row_vector(forward(params.enc_head, trunk.out).out, 0);
  return d;
}

Matrix map_latent_batch(const Matrix& z, const GanParams& params) {
  require_cols(z, input_width(params.mapping), "map_latent_batch");
  return forward(params.mapping, z).out;
}

Matrix synthesize_batch(const Matrix& w, const GanParams& params) {
  require_cols(w, input_width(params.synthesis), "synthesize_batch");
  return forward(params.synthesis, w).out;
}

Matrix encode_batch(const Matrix& images, const GanParams& params) {
  require_cols(images, input_width(params.trunk), "encode_batch");
  return forward(params.enc_head, forward(params.trunk, images).out).out;
}

std::vector<double> logits_batch(const Matrix& images, const GanParams& params) {
  require_cols(images, input_width(params.trunk), "logits_batch");
  const Matrix l = forward(params.disc_head, forward(params.trunk, images).out).out;
  return {l.values().begin(), l.values().end()};
}

double log_likelihood(std::span<const double> w, const EncoderOutput& enc) {
  if (w.size() != enc.w_hat.size()) {
    throw ShapeError("log_likelihood: w has length " + std::to_string(w.size()) + ", w_hat " +
                     std::to_string(enc.w_hat.size()));
  }
  const double m = static_cast<double>(w.size());
  return -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * squared_distance(w, enc.w_hat);
}

// ---------------------------------------------------------------------------
// Losses and their gradients

namespace {

struct Forward {
  Tape mapping, synth_fake, trunk_fake, disc_fake, enc_fake;
  Tape trunk_real, disc_real, enc_real, synth_rec;
};

Forward run_forward(const Matrix& z, const Matrix& real, const GanParams& p) {
  if (z.rows() == 0 || real.rows() == 0) throw ArgumentError("GAN losses need non-empty batches");
  require_cols(z, input_width(p.mapping), "latent batch");
  require_cols(real, input_width(p.trunk), "real batch");
  Forward f;
  f.mapping = forward(p.mapping, z);
  f.synth_fake = forward(p.synthesis, f.mapping.out);
  f.trunk_fake = forward(p.trunk, f.synth_fake.out);
  f.disc_fake = forward(p.disc_head, f.trunk_fake.out);
  f.enc_fake = forward(p.enc_head, f.trunk_fake.out);
  f.trunk_real = forward(p.trunk, real);
  f.disc_real = forward(p.disc_head, f.trunk_real.out);
  f.enc_real = forward(p.enc_head, f.trunk_real.out);
  f.synth_rec = forward(p.synthesis, f.enc_real.out);
  return f;
}

// The discriminator chain (trunk layers then disc-head layers) seen as one
// stack, with the real-batch tapes.
struct Chain {
  std::vector<const DenseLayer*> layers;
  std::vector<const Matrix*> pre;
};

Chain real_chain(const GanParams& p, const Forward& f) {
  Chain c;
  for (std::size_t l = 0; l < p.trunk.layers.size(); ++l) {
    c.layers.push_back(&p.trunk.layers[l]);
    c.pre.push_back(&f.trunk_real.pre[l]);
  }
  for (std::size_t l = 0; l < p.disc_head.layers.size(); ++l) {
    c.layers.push_back(&p.disc_head.layers[l]);
    c.pre.push_back(&f.disc_real.pre[l]);
  }
  return c;
}

struct InputGradient {
  Matrix grad_x;               // ∇ₓ logit per sample
  std::vector<Matrix> deltas;  // ∂logit/∂(pre-activation) per layer
};

InputGradient logit_input_gradient(const Chain& c, std::size_t rows) {
  InputGradient ig;
  const std::size_t L = c.layers.size();
  ig.deltas.resize(L);
  Matrix delta(rows, 1, 1.0);
  for (std::size_t l = L; l-- > 0;) {
    ig.deltas[l] = delta;
    Matrix g = matmul(delta, c.layers[l]->weight);
    if (l == 0) {
      ig.grad_x = std::move(g);
      break;
    }
    const Matrix& a = *c.pre[l - 1];
    for (std::size_t k = 0; k < g.size(); ++k) g.values()[k] *= leaky_slope(a.values()[k]);
    delta = std::move(g);
  }
  return ig;
}

double mean_row_sq_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return s / static_cast<double>(m.rows());
}

GanLosses losses_from(const Forward& f, const Matrix& real, const GanParams& p, const GanConfig& cfg) {
  const double nb = static_cast<double>(f.mapping.out.rows());
  const double nr = static_cast<double>(real.rows());
  GanLosses l;
  double adv_fake = 0.0;
  double g_fake = 0.0;
  for (double lf : f.disc_fake.out.values()) {
    adv_fake += softplus(lf);
    g_fake += softplus(-lf);
  }
  double adv_real = 0.0;
  for (double lr : f.disc_real.out.values()) adv_real += softplus(-lr);
  l.loss_g = g_fake / nb;
  l.loss_d = adv_fake / nb + adv_real / nr;
  if (cfg.r1_gamma > 0.0) {
    const InputGradient ig = logit_input_gradient(real_chain(p, f), real.rows());
    l.r1 = 0.5 * cfg.r1_gamma * mean_row_sq_norm(ig.grad_x);
    l.loss_d += l.r1;
  }

  const double m = static_cast<double>(f.mapping.out.cols());
  double nll = 0.0;
  for (std::size_t b = 0; b < f.mapping.out.rows(); ++b) {
    nll += 0.5 * m * std::log(2.0 * std::numbers::pi) +
           0.5 * squared_distance(f.mapping.out.row(b), f.enc_fake.out.row(b));
  }
  l.log_likelihood_term = cfg.lambda * nll / nb;

  double mse = 0.0;
  for (std::size_t k = 0; k < real.size(); ++k) {
    const double d = real.values()[k] - f.synth_rec.out.values()[k];
    mse += d * d;
  }
  l.reconstruction_term = cfg.beta * mse / static_cast<double>(real.size());
  l.loss_e = l.log_likelihood_term + l.reconstruction_term;

  if (!std::isfinite(l.loss_g) || !std::isfinite(l.loss_d) || !std::isfinite(l.loss_e)) {
    throw NumericError("non-finite GAN loss (g=" + std::to_string(l.loss_g) + ", d=" +
                       std::to_string(l.loss_d) + ", e=" + std::to_string(l.loss_e) + ")");
  }
  return l;
}

struct Wanted {
  bool g = true;
  bool d = true;
  bool ll = true;
  bool rec = true;
};

GanGradients gradients_impl(const Matrix& z, const Matrix& real, const GanParams& p,
                            const GanConfig& cfg, Wanted want) {
  const Forward f = run_forward(z, real, p);
  GanGradients out;
  out.losses = losses_from(f, real, p, cfg);
  out.loss_g = out.loss_d = out.log_likelihood = out.reconstruction = p;
  for (GanParams* g : {&out.loss_g, &out.loss_d, &out.log_likelihood, &out.reconstruction})
    for (ParamGroup grp : kAllGroups) g->group(grp).set_zero();

  const std::size_t nb = z.rows();
  const std::size_t nr = real.rows();

  // Back through discriminator on the fake batch, generator, mapping.
  auto through_fake_disc = [&](const Matrix& grad_logit, GanParams& acc) {
    const Matrix gt = backward(p.disc_head, f.disc_fake, grad_logit, &acc.disc_head);
    const Matrix gx = backward(p.trunk, f.trunk_fake, gt, &acc.trunk);
    const Matrix gw = backward(p.synthesis, f.synth_fake, gx, &acc.synthesis);
    backward(p.mapping, f.mapping, gw, &acc.mapping);
  };

  if (want.g) {
    Matrix gl(nb, 1);
    for (std::size_t b = 0; b < nb; ++b) gl(b, 0) = -sigmoid(-f.disc_fake.out(b, 0)) / static_cast<double>(nb);
    through_fake_disc(gl, out.loss_g);
  }

  if (want.d) {
    Matrix gf(nb, 1);
    for (std::size_t b = 0; b < nb; ++b) gf(b, 0) = sigmoid(f.disc_fake.out(b, 0)) / static_cast<double>(nb);
    through_fake_disc(gf, out.loss_d);

    Matrix gr(nr, 1);
    for (std::size_t b = 0; b < nr; ++b) gr(b, 0) = -sigmoid(-f.disc_real.out(b, 0)) / static_cast<double>(nr);
    const Matrix gt = backward(p.disc_head, f.disc_real, gr, &out.loss_d.disc_head);
    backward(p.trunk, f.trunk_real, gt, &out.loss_d.trunk);

    if (cfg.r1_gamma > 0.0) {
      // ‖∇ₓ logit‖² is multilinear in the weights on each linear region, so
      // its weight gradient is 2·δₗ·tₗ₋₁ᵀ with t the input gradient pushed
      // forward through the linearized stack.
      const Chain c = real_chain(p, f);
      const InputGradient ig = logit_input_gradient(c, nr);
      const double coef = cfg.r1_gamma / static_cast<double>(nr);
      Matrix tangent = ig.grad_x;
      const std::size_t trunk_n = p.trunk.layers.size();
      for (std::size_t l = 0; l < c.layers.size(); ++l) {
        const Matrix gw = matmul_at(ig.deltas[l], tangent);
        auto& dst = l < trunk_n ? out.loss_d.trunk.layers[l].weight
                                : out.loss_d.disc_head.layers[l - trunk_n].weight;
        for (std::size_t k = 0; k < dst.size(); ++k) dst.values()[k] += coef * gw.values()[k];
        if (l + 1 < c.layers.size()) {
          Matrix u = matmul_bt(tangent, c.layers[l]->weight);
          const Matrix& a = *c.pre[l];
          for (std::size_t k = 0; k < u.size(); ++k) u.values()[k] *= leaky_slope(a.values()[k]);
          tangent = std::move(u);
        }
      }
    }
  }

  if (want.ll) {
    const Matrix& w = f.mapping.out;
    const Matrix& w_hat = f.enc_fake.out;
    Matrix g_hat(w.rows(), w.cols());
    Matrix g_w(w.rows(), w.cols());
    const double scale = cfg.lambda / static_cast<double>(nb);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double r = w.values()[k] - w_hat.values()[k];
      g_hat.values()[k] = -scale * r;
      g_w.values()[k] = scale * r;
    }
    auto& acc = out.log_likelihood;
    const Matrix gt = backward(p.enc_head, f.enc_fake, g_hat, &acc.enc_head);
    const Matrix gx = backward(p.trunk, f.trunk_fake, gt, &acc.trunk);
    Matrix gw = backward(p.synthesis, f.synth_fake, gx, &acc.synthesis);
    for (std::size_t k = 0; k < gw.size(); ++k) gw.values()[k] += g_w.values()[k];
    backward(p.mapping, f.mapping, gw, &acc.mapping);
  }

  if (want.rec) {
    Matrix g_rec(real.rows(), real.cols());
    const double scale = 2.0 * cfg.beta / static_cast<double>(real.size());
    for (std::size_t k = 0; k < real.size(); ++k) {
      g_rec.values()[k] = -scale * (real.values()[k] - f.synth_rec.out.values()[k]);
    }
    auto& acc = out.reconstruction;
    const Matrix g_code = backward(p.synthesis, f.synth_rec, g_rec, &acc.synthesis);
    const Matrix gt = backward(p.enc_head, f.enc_real, g_code, &acc.enc_head);
    backward(p.trunk, f.trunk_real, gt, &acc.trunk);
  }
  return out;
}

}  // namespace

double encoder_loss(const Matrix& z_batch, const Matrix& real_batch, const GanParams& params,
                    const GanConfig& cfg) {
  return gan_losses(z_batch, real_batch, params, cfg).loss_e;
}

GanLosses gan_losses(const Matrix& z_batch, const Matrix& real_batch, const GanParams& params,
                     const GanConfig& cfg) {
  const Forward f = run_forward(z_batch, real_batch, params);
  return losses_from(f, real_batch, params, cfg);
}

GanGradients gan_gradients(const Matrix& z_batch, const Matrix& real_batch, const GanParams& params,
                           const GanConfig& cfg) {
  return gradients_impl(z_batch, real_batch, params, cfg, Wanted{});
}

// ---------------------------------------------------------------------------
// Training

namespace {

void momentum_step(Mlp& param, Mlp& velocity, const Mlp& grad, double lr) {
  for (std::size_t l = 0; l < param.layers.size(); ++l) {
    auto pw = param.layers[l].weight.values();
    auto vw = velocity.layers[l].weight.values();
    const auto gw = grad.layers[l].weight.values();
    for (std::size_t k = 0; k < pw.size(); ++k) {
      vw[k] = kMomentum * vw[k] - lr * gw[k];
      pw[k] += vw[k];
    }
    auto& pb = param.layers[l].bias;
    auto& vb = velocity.layers[l].bias;
    const auto& gb = grad.layers[l].bias;
    for (std::size_t k = 0; k < pb.size(); ++k) {
      vb[k] = kMomentum * vb[k] - lr * gb[k];
      pb[k] += vb[k];
    }
  }
}

}  // namespace

TrainResult train(const Matrix& dataset, const GanConfig& cfg, Rng& rng) {
  cfg.validate();
  GanParams initial = init_params(cfg, rng);
  return train(dataset, cfg, rng, std::move(initial));
}

TrainResult train(const Matrix& dataset, const GanConfig& cfg, Rng& rng, GanParams initial) {
  cfg.validate();
  if (dataset.rows() == 0) throw ArgumentError("train: dataset is empty");
  require_cols(dataset, cfg.pixels(), "train dataset");
  check_shapes(initial, cfg);

  TrainResult res;
  res.params = std::move(initial);
  GanParams velocity = zero_params(cfg);
  res.history.reserve(cfg.steps);

  const std::size_t batch = cfg.batch_size;
  Matrix z(batch, cfg.z_dim);
  std::vector<std::size_t> picks(batch);
  for (std::uint32_t step = 0; step < cfg.steps; ++step) {
    for (double& v : z.values()) v = rng.normal();
    for (auto& i : picks) i = static_cast<std::size_t>(rng.below(dataset.rows()));
    const Matrix real = dataset.gather_rows(picks);

    TrainStep record;
    try {
      const GanGradients de = gradients_impl(z, real, res.params, cfg, {false, true, true, true});
      record.loss_d = de.losses.loss_d;
      record.loss_e = de.losses.loss_e;
      for (ParamGroup g : {ParamGroup::trunk, ParamGroup::disc_head, ParamGroup::enc_head}) {
        Mlp total = de.loss_d.group(g);
        add_into(total, de.log_likelihood.group(g));
        add_into(total, de.reconstruction.group(g));
        momentum_step(res.params.group(g), velocity.group(g), total, cfg.learning_rate);
      }

      const GanGradients gen = gradients_impl(z, real, res.params, cfg, {true, false, false, true});
      record.loss_g = gen.losses.loss_g;
      momentum_step(res.params.mapping, velocity.mapping, gen.loss_g.mapping, cfg.learning_rate);
      Mlp synth = gen.loss_g.synthesis;
      add_into(synth, gen.reconstruction.synthesis);
      momentum_step(res.params.synthesis, velocity.synthesis, synth, cfg.learning_rate);
    } catch (const NumericError& e) {
      throw DivergenceError("training diverged at step " + std::to_string(step) + ": " + e.what(), step);
    }
    if (!res.params.all_finite()) {
      throw DivergenceError("training diverged at step " + std::to_string(step) +
                                ": non-finite parameters",
                            step);
    }
    res.history.push_back(record);
  }
  return res;
}

double reconstruction_mse(const Matrix& images, const GanParams& params) {
  const Matrix rec = synthesize_batch(encode_batch(images, params), params);
  double s = 0.0;
  for (std::size_t k = 0; k < images.size(); ++k) {
    const double d = images.values()[k] - rec.values()[k];
    s += d * d;
  }
  return s / static_cast<double>(images.size());
}

Matrix embed(const Matrix& images, const GanParams& params) { return encode_batch(images, params); }

std::vector<double> class_direction(const Matrix& embeddings, const LabelSet& labels) {
  if (!labels.has_both_classes()) throw DegenerateError("class_direction: both classes must be labeled");
  const auto idx = labels.indices();
  for (std::size_t i : idx)
    if (i >= embeddings.rows()) throw ArgumentError("class_direction: label index out of range");
  std::vector<int> y;
  for (std::size_t i : idx) y.push_back(labels.at(i));
  const LogisticModel model = fit_logistic(embeddings.gather_rows(idx), y);
  double norm = 0.0;
  for (double v : model.weights) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw DegenerateError("class_direction: separator has zero weight vector");
  std::vector<double> dir = model.weights;
  for (double& v : dir) v /= norm;
  return dir;
}

Matrix manipulate(std::span<const double> w, std::span<const double> direction, double alpha,
                  const GanParams& params) {
  if (w.size() != direction.size()) throw ShapeError("manipulate: direction length differs from w");
  double norm = 0.0;
  for (double v : direction) norm += v * v;
  if (std::abs(std::sqrt(norm) - 1.0) > 1e-6) {
    throw ArgumentError("manipulate: direction norm " + std::to_string(std::sqrt(norm)) + " is not 1");
  }
  std::vector<double> moved(w.begin(), w.end());
  for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += alpha * direction[k];
  return synthesize(moved, params);
}

}  // namespace sslab
