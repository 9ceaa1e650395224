#include "crof/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "crof/embedding_store.hpp"
#include "crof/error.hpp"
#include "crof/text_format.hpp"

namespace crof {
namespace {

void check_width(const Matrix& x, const AdapterParams& p) {
  if (x.cols() != p.dims()) {
    fail(ErrorKind::kShape, "adapter expects " + std::to_string(p.dims()) +
                                "-dim features, got " + std::to_string(x.cols()));
  }
}

std::vector<double> inverse_row_norms(const Matrix& m) {
  std::vector<double> inv(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double norm = l2_norm(m.row(r));
    if (!(norm > 0.0)) {
      fail(ErrorKind::kDegenerate, "text embedding row " + std::to_string(r) + " has zero norm");
    }
    inv[r] = 1.0 / norm;
  }
  return inv;
}

void similarities_into(std::span<const double> x_star, const Matrix& text,
                       std::span<const double> inv_text_norm, double tau, std::span<double> out) {
  const double norm = l2_norm(x_star);
  require(norm > 0.0, ErrorKind::kDegenerate, "adapted feature has zero norm");
  for (std::size_t i = 0; i < text.rows(); ++i) {
    out[i] = dot(x_star, text.row(i)) / norm * inv_text_norm[i] / tau;
  }
}

void adamw(Matrix& theta, Matrix& m, Matrix& v, const Matrix& g, double lr, double bc1,
           double bc2, const AdapterConfig& cfg) {
  auto th = theta.values();
  auto mm = m.values();
  auto vv = v.values();
  const auto gg = g.values();
  for (std::size_t i = 0; i < th.size(); ++i) {
    mm[i] = cfg.beta1 * mm[i] + (1.0 - cfg.beta1) * gg[i];
    vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gg[i] * gg[i];
    const double m_hat = mm[i] / bc1;
    const double v_hat = vv[i] / bc2;
    th[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * th[i]);
  }
}

}  // namespace

void AdapterConfig::validate() const {
  require(hidden_ratio >= 1, ErrorKind::kConfig, "hidden ratio must be >= 1");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kConfig, "lambda must lie in [0, 1]");
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::kConfig, "tau must be > 0");
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::kConfig, "learning rate must be > 0");
  require(weight_decay >= 0.0, ErrorKind::kConfig, "weight decay must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorKind::kConfig,
          "AdamW betas must lie in [0, 1)");
  require(eps > 0.0, ErrorKind::kConfig, "AdamW epsilon must be > 0");
}

std::size_t hidden_width(std::size_t dims, std::size_t hidden_ratio) {
  return std::max<std::size_t>(1, dims / std::max<std::size_t>(1, hidden_ratio));
}

AdapterParams init_params(std::size_t dims, const AdapterConfig& cfg) {
  cfg.validate();
  require(dims >= 1, ErrorKind::kConfig, "adapter needs at least one input dimension");
  const std::size_t h = hidden_width(dims, cfg.hidden_ratio);
  std::mt19937_64 rng(cfg.seed);

  AdapterParams p;
  p.lambda = cfg.lambda;
  p.w1 = Matrix(dims, h);
  p.w2 = Matrix(h, dims);
  std::uniform_real_distribution<double> u1(-1.0 / std::sqrt(static_cast<double>(dims)),
                                            1.0 / std::sqrt(static_cast<double>(dims)));
  for (double& w : p.w1.values()) w = u1(rng);
  std::uniform_real_distribution<double> u2(-1.0 / std::sqrt(static_cast<double>(h)),
                                            1.0 / std::sqrt(static_cast<double>(h)));
  for (double& w : p.w2.values()) w = u2(rng);

  p.m1 = Matrix(dims, h);
  p.v1 = Matrix(dims, h);
  p.m2 = Matrix(h, dims);
  p.v2 = Matrix(h, dims);
  return p;
}

ForwardPass forward_pass(const Matrix& x, const AdapterParams& p) {
  check_width(x, p);
  const std::size_t batch = x.rows();
  const std::size_t d = p.dims();
  const std::size_t h = p.hidden();
  const double lambda = p.lambda;

  ForwardPass out{Matrix(batch, h), Matrix(batch, d)};
  std::vector<double> act(h);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto xb = x.row(b);
    auto pre = out.pre_activation.row(b);
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = xb[i];
      const auto w1_row = p.w1.row(i);
      for (std::size_t k = 0; k < h; ++k) pre[k] += xi * w1_row[k];
    }
    for (std::size_t k = 0; k < h; ++k) act[k] = pre[k] > 0.0 ? pre[k] : 0.0;

    auto xs = out.adapted.row(b);
    for (std::size_t k = 0; k < h; ++k) {
      const double a = act[k];
      if (a == 0.0) continue;
      const auto w2_row = p.w2.row(k);
      for (std::size_t j = 0; j < d; ++j) xs[j] += a * w2_row[j];
    }
    for (std::size_t j = 0; j < d; ++j) xs[j] = (1.0 - lambda) * xb[j] + lambda * xs[j];
  }
  return out;
}

Matrix forward(const Matrix& x, const AdapterParams& p) { return forward_pass(x, p).adapted; }

std::vector<double> similarities(std::span<const double> x_star, const Matrix& text, double tau) {
  require(tau > 0.0, ErrorKind::kConfig, "tau must be > 0");
  if (x_star.size() != text.cols()) {
    fail(ErrorKind::kShape, "feature has " + std::to_string(x_star.size()) + " dims, text has " +
                                std::to_string(text.cols()));
  }
  const auto inv = inverse_row_norms(text);
  std::vector<double> z(text.rows());
  similarities_into(x_star, text, inv, tau, z);
  return z;
}

Matrix similarities(const Matrix& x_star, const Matrix& text, double tau) {
  require(tau > 0.0, ErrorKind::kConfig, "tau must be > 0");
  require(x_star.cols() == text.cols(), ErrorKind::kShape,
          "features have " + std::to_string(x_star.cols()) + " dims, text has " +
              std::to_string(text.cols()));
  const auto inv = inverse_row_norms(text);
  Matrix z(x_star.rows(), text.rows());
  for (std::size_t b = 0; b < x_star.rows(); ++b) {
    similarities_into(x_star.row(b), text, inv, tau, z.row(b));
  }
  return z;
}

double log_sum_exp(std::span<const double> z) {
  const double max = *std::ranges::max_element(z);
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - max);
  return max + std::log(acc);
}

std::vector<double> probabilities(std::span<const double> z) {
  const double max = *std::ranges::max_element(z);
  std::vector<double> p(z.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - max);
    acc += p[i];
  }
  for (double& v : p) v /= acc;
  return p;
}

double ce_loss(std::span<const double> z, std::size_t label) {
  if (label >= z.size()) {
    fail(ErrorKind::kIndex, "label " + std::to_string(label) + " out of range for " +
                                std::to_string(z.size()) + " classes");
  }
  return log_sum_exp(z) - z[label];
}

AdapterGrads backward(const Matrix& x, const Matrix& text, const AdapterParams& p,
                      const Matrix& logit_grads, double tau) {
  check_width(x, p);
  require(text.cols() == p.dims(), ErrorKind::kShape, "text embedding width mismatch");
  require(logit_grads.rows() == x.rows() && logit_grads.cols() == text.rows(), ErrorKind::kShape,
          "logit gradients must be " + std::to_string(x.rows()) + "x" +
              std::to_string(text.rows()));
  require(tau > 0.0, ErrorKind::kConfig, "tau must be > 0");

  const std::size_t batch = x.rows();
  const std::size_t d = p.dims();
  const std::size_t h = p.hidden();
  const std::size_t n = text.rows();
  const double lambda = p.lambda;

  AdapterGrads g{Matrix(d, h), Matrix(h, d)};
  if (batch == 0 || lambda == 0.0) return g;

  const Matrix unit_text = normalize_rows(text);
  const ForwardPass fwd = forward_pass(x, p);

  std::vector<double> grad_u(d), grad_b(d), grad_a(h);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto gz = logit_grads.row(b);
    const auto xs = fwd.adapted.row(b);
    const double norm = l2_norm(xs);
    if (!(norm > 0.0)) {
      fail(ErrorKind::kDegenerate, "adapted feature " + std::to_string(b) + " has zero norm");
    }

    // dL/du where u = x*/|x*| and z_i = u . e_i / tau.
    std::ranges::fill(grad_u, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = gz[i] / tau;
      if (gi == 0.0) continue;
      const auto e = unit_text.row(i);
      for (std::size_t j = 0; j < d; ++j) grad_u[j] += gi * e[j];
    }
    // Through the normalization: (I - u u^T) / |x*|, then the lambda branch.
    double u_dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) u_dot += xs[j] / norm * grad_u[j];
    for (std::size_t j = 0; j < d; ++j) {
      grad_b[j] = lambda * (grad_u[j] - xs[j] / norm * u_dot) / norm;
    }

    const auto pre = fwd.pre_activation.row(b);
    for (std::size_t k = 0; k < h; ++k) {
      if (pre[k] <= 0.0) {
        grad_a[k] = 0.0;
        continue;
      }
      auto gw2 = g.w2.row(k);
      const auto w2_row = p.w2.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        gw2[j] += pre[k] * grad_b[j];
        acc += w2_row[j] * grad_b[j];
      }
      grad_a[k] = acc;
    }

    const auto xb = x.row(b);
    for (std::size_t i = 0; i < d; ++i) {
      auto gw1 = g.w1.row(i);
      for (std::size_t k = 0; k < h; ++k) gw1[k] += xb[i] * grad_a[k];
    }
  }

  const double scale = 1.0 / static_cast<double>(batch);
  for (double& v : g.w1.values()) v *= scale;
  for (double& v : g.w2.values()) v *= scale;
  return g;
}

double cosine_lr(double base_lr, std::size_t step, std::size_t total_steps) {
  require(total_steps > 0, ErrorKind::kConfig, "total steps must be > 0");
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void optimizer_step(AdapterParams& p, const AdapterGrads& grads, std::size_t step,
                    std::size_t total_steps, const AdapterConfig& cfg) {
  require(step < total_steps, ErrorKind::kConfig,
          "step " + std::to_string(step) + " is not below total steps " +
              std::to_string(total_steps));
  require(grads.w1.rows() == p.w1.rows() && grads.w1.cols() == p.w1.cols() &&
              grads.w2.rows() == p.w2.rows() && grads.w2.cols() == p.w2.cols(),
          ErrorKind::kShape, "gradient shapes do not match parameters");

  ++p.step_count;
  const double lr = cosine_lr(cfg.lr, step, total_steps);
  const double t = static_cast<double>(p.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  adamw(p.w1, p.m1, p.v1, grads.w1, lr, bc1, bc2, cfg);
  adamw(p.w2, p.m2, p.v2, grads.w2, lr, bc1, bc2, cfg);
}

void save_params(const AdapterParams& p, const std::filesystem::path& prefix) {
  const std::size_t d = p.dims();
  const std::size_t h = p.hidden();
  Matrix w1t(h, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < h; ++k) w1t(k, i) = p.w1(i, k);
  }
  save_embeddings(EmbeddingMatrix::from_matrix(w1t), prefix.string() + ".w1.emb");
  save_embeddings(EmbeddingMatrix::from_matrix(p.w2), prefix.string() + ".w2.emb");
  std::string header;
  header += "lambda = " + format_number(p.lambda) + "\n";
  header += "hidden = " + std::to_string(h) + "\n";
  header += "dims = " + std::to_string(d) + "\n";
  header += "step = " + std::to_string(p.step_count) + "\n";
  header += "w1_layout = transposed\n";
  write_text_file(prefix.string() + ".txt", header);
}

AdapterParams load_params(const std::filesystem::path& prefix) {
  const auto header_path = prefix.string() + ".txt";
  const auto kv = parse_key_values(read_text_file(header_path), header_path);
  const std::size_t h = kv_size(kv, "hidden");
  const std::size_t d = kv_size(kv, "dims");

  const Matrix w1t = load_embeddings(prefix.string() + ".w1.emb").to_matrix();
  const Matrix w2 = load_embeddings(prefix.string() + ".w2.emb").to_matrix();
  require(w1t.rows() == h && w1t.cols() == d && w2.rows() == h && w2.cols() == d,
          ErrorKind::kShape, "adapter weight files do not match header " + std::to_string(h) +
                                 "x" + std::to_string(d));

  AdapterParams p;
  p.lambda = kv_double(kv, "lambda");
  p.step_count = kv_size(kv, "step");
  p.w1 = Matrix(d, h);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < h; ++k) p.w1(i, k) = w1t(k, i);
  }
  p.w2 = w2;
  p.m1 = Matrix(d, h);
  p.v1 = Matrix(d, h);
  p.m2 = Matrix(h, d);
  p.v2 = Matrix(h, d);
  return p;
}

}  // namespace crof
