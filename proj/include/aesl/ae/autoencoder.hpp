#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "aesl/core/error.hpp"
#include "aesl/core/linalg.hpp"
#include "aesl/core/rng.hpp"
#include "aesl/core/types.hpp"

namespace aesl {

struct AeConfig {
  std::size_t input_dim = 784;
  std::size_t hidden_dim = 2048;
  std::size_t latent_dim = 16;
  bool tie_weights = true;

  void validate() const {
    require(input_dim >= 1 && hidden_dim >= 1 && latent_dim >= 1,
            "AeConfig: all dims must be >= 1");
    require(latent_dim < hidden_dim, "AeConfig: latent_dim must be < hidden_dim");
  }
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  Optimizer optimizer = Optimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    require(learning_rate >= 0.0, "TrainConfig: learning_rate must be >= 0");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  }
};

namespace detail {

/// Per-block Adam moments. Blocks update independently (cross-training steps
/// touch only the encoder of one member and the decoder of another), so each
/// block keeps its own bias-correction step counter.
struct OptState {
  std::vector<std::vector<double>> m, v;
  std::vector<std::size_t> t;
  bool ready = false;

  void ensure(const std::vector<std::size_t>& sizes) {
    if (ready) return;
    m.resize(sizes.size());
    v.resize(sizes.size());
    t.assign(sizes.size(), 0);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      m[i].assign(sizes[i], 0.0);
      v[i].assign(sizes[i], 0.0);
    }
    ready = true;
  }
};

inline void sgd_update(double* w, const double* g, std::size_t n, double lr) {
  for (std::size_t i = 0; i < n; ++i) w[i] -= lr * g[i];
}

inline void adam_update(double* w, const double* g, std::size_t n, double* m,
                        double* v, std::size_t t, const TrainConfig& cfg) {
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / corr1;
    const double vhat = v[i] / corr2;
    w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

}  // namespace detail

/// Tied-weight fully-connected autoencoder:
///   encode:  z = W2 * relu(W1 x + b1) + b2          (latent linear)
///   decode:  x* = sigmoid(W1^T relu(W2^T z + b3) + b4)
/// With tie_weights=false the decoder gets its own V2 (hidden x latent) and
/// V1 (input x hidden) in place of the transposes.
struct Autoencoder {
  AeConfig config;
  DenseMatrix W1;  // hidden x input
  DenseVector b1;  // hidden
  DenseMatrix W2;  // latent x hidden
  DenseVector b2;  // latent
  DenseVector b3;  // hidden (decoder bias on W2^T path)
  DenseVector b4;  // input  (decoder bias on W1^T path)
  DenseMatrix V2;  // hidden x latent, only when untied
  DenseMatrix V1;  // input x hidden, only when untied

  detail::OptState opt;  // training-only state, not serialized

  std::size_t param_count() const {
    std::size_t n = W1.data.size() + W2.data.size() + b1.size() + b2.size() +
                    b3.size() + b4.size();
    if (!config.tie_weights) n += V2.data.size() + V1.data.size();
    return n;
  }

  /// Parameter blocks in fixed declaration order (also the file order).
  std::vector<std::pair<double*, std::size_t>> param_blocks() {
    std::vector<std::pair<double*, std::size_t>> blocks = {
        {W1.ptr(), W1.data.size()}, {b1.ptr(), b1.size()},
        {W2.ptr(), W2.data.size()}, {b2.ptr(), b2.size()},
        {b3.ptr(), b3.size()},      {b4.ptr(), b4.size()}};
    if (!config.tie_weights) {
      blocks.push_back({V2.ptr(), V2.data.size()});
      blocks.push_back({V1.ptr(), V1.data.size()});
    }
    return blocks;
  }
};

inline void glorot_fill(DenseMatrix& w, std::size_t fan_in, std::size_t fan_out,
                        RngState& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data) v = rng.next_uniform(-bound, bound);
}

inline Autoencoder ae_init(const AeConfig& config, RngState rng) {
  config.validate();
  Autoencoder ae;
  ae.config = config;
  ae.W1 = DenseMatrix(config.hidden_dim, config.input_dim);
  ae.W2 = DenseMatrix(config.latent_dim, config.hidden_dim);
  ae.b1 = DenseVector(config.hidden_dim);
  ae.b2 = DenseVector(config.latent_dim);
  ae.b3 = DenseVector(config.hidden_dim);
  ae.b4 = DenseVector(config.input_dim);
  glorot_fill(ae.W1, config.input_dim, config.hidden_dim, rng);
  glorot_fill(ae.W2, config.hidden_dim, config.latent_dim, rng);
  if (!config.tie_weights) {
    ae.V2 = DenseMatrix(config.hidden_dim, config.latent_dim);
    ae.V1 = DenseMatrix(config.input_dim, config.hidden_dim);
    glorot_fill(ae.V2, config.latent_dim, config.hidden_dim, rng);
    glorot_fill(ae.V1, config.hidden_dim, config.input_dim, rng);
  }
  return ae;
}

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Decoder's hidden map (W2^T when tied) and output map (W1^T when tied).
inline Eigen::MatrixXd dec_hidden_map(const Autoencoder& ae) {
  if (ae.config.tie_weights) return as_eigen(ae.W2).transpose();
  return as_eigen(ae.V2);
}
inline Eigen::MatrixXd dec_output_map(const Autoencoder& ae) {
  if (ae.config.tie_weights) return as_eigen(ae.W1).transpose();
  return as_eigen(ae.V1);
}

}  // namespace detail

inline DenseVector encode(const Autoencoder& ae, const DenseVector& x) {
  require(x.size() == ae.config.input_dim, "encode: input length mismatch");
  Eigen::VectorXd h =
      (as_eigen(ae.W1) * as_eigen(x) + as_eigen(ae.b1)).cwiseMax(0.0);
  DenseVector z(ae.config.latent_dim);
  as_eigen(z) = as_eigen(ae.W2) * h + as_eigen(ae.b2);
  return z;
}

inline DenseVector decode(const Autoencoder& ae, const DenseVector& z) {
  require(z.size() == ae.config.latent_dim, "decode: latent length mismatch");
  Eigen::VectorXd h =
      (detail::dec_hidden_map(ae) * as_eigen(z) + as_eigen(ae.b3)).cwiseMax(0.0);
  Eigen::VectorXd pre = detail::dec_output_map(ae) * h + as_eigen(ae.b4);
  DenseVector x(ae.config.input_dim);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = detail::sigmoid(pre[i]);
  return x;
}

inline DenseVector reconstruct(const Autoencoder& ae, const DenseVector& x) {
  return decode(ae, encode(ae, x));
}

/// Batched columns-as-samples forward. X is input_dim x B.
inline Eigen::MatrixXd encode_batch(const Autoencoder& ae, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h =
      ((as_eigen(ae.W1) * x).colwise() + as_eigen(ae.b1)).cwiseMax(0.0);
  return (as_eigen(ae.W2) * h).colwise() + as_eigen(ae.b2);
}

inline Eigen::MatrixXd decode_batch(const Autoencoder& ae, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd h =
      ((detail::dec_hidden_map(ae) * z).colwise() + as_eigen(ae.b3)).cwiseMax(0.0);
  Eigen::MatrixXd pre = (detail::dec_output_map(ae) * h).colwise() + as_eigen(ae.b4);
  return pre.unaryExpr([](double v) { return detail::sigmoid(v); });
}

/// Analytic decoder Jacobian at z, shape input_dim x latent_dim, with the relu
/// activation pattern frozen at z. Column j is the partial of decode() along
/// latent axis j.
inline DenseMatrix decoder_jacobian(const Autoencoder& ae, const DenseVector& z) {
  require(z.size() == ae.config.latent_dim, "decoder_jacobian: latent length mismatch");
  Eigen::MatrixXd dh = detail::dec_hidden_map(ae);   // hidden x latent
  Eigen::MatrixXd dx = detail::dec_output_map(ae);   // input x hidden
  Eigen::VectorXd pre3 = dh * as_eigen(z) + as_eigen(ae.b3);
  Eigen::VectorXd h = pre3.cwiseMax(0.0);
  Eigen::VectorXd pre4 = dx * h + as_eigen(ae.b4);
  // Rows of dh where relu is inactive contribute nothing.
  Eigen::MatrixXd gated = dh;
  for (Eigen::Index r = 0; r < gated.rows(); ++r)
    if (pre3[r] <= 0.0) gated.row(r).setZero();
  DenseMatrix jac(ae.config.input_dim, ae.config.latent_dim);
  EigenMapRow out = as_eigen(jac);
  out.noalias() = dx * gated;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double s = detail::sigmoid(pre4[r]);
    out.row(r) *= s * (1.0 - s);
  }
  return jac;
}

namespace detail {

struct AeGradients {
  // Row-major so flat buffers line up with DenseMatrix parameter storage.
  EigenRowMat gW1_enc, gW2_enc, gW2_dec, gW1_dec;  // dec grads in V-shape when untied
  Eigen::VectorXd gb1, gb2, gb3, gb4;
  double loss = 0.0;
};

/// Forward + backward for the pipeline decode_dec(encode_enc(X)) against
/// Target under an optional per-component mask:
///   loss = (1/B) sum_b || m .* (x_hat_b - target_b) ||^2
/// Self-training is the enc == dec case with Target = X and no mask.
inline AeGradients cross_backward(const Autoencoder& enc, const Autoencoder& dec,
                                  const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& target,
                                  const Eigen::VectorXd* mask) {
  const auto b = static_cast<double>(x.cols());
  AeGradients g;

  Eigen::MatrixXd pre1 = (as_eigen(enc.W1) * x).colwise() + as_eigen(enc.b1);
  Eigen::MatrixXd h1 = pre1.cwiseMax(0.0);
  Eigen::MatrixXd z = (as_eigen(enc.W2) * h1).colwise() + as_eigen(enc.b2);

  Eigen::MatrixXd dh = dec_hidden_map(dec);
  Eigen::MatrixXd dx = dec_output_map(dec);
  Eigen::MatrixXd pre3 = (dh * z).colwise() + as_eigen(dec.b3);
  Eigen::MatrixXd h2 = pre3.cwiseMax(0.0);
  Eigen::MatrixXd xr =
      ((dx * h2).colwise() + as_eigen(dec.b4)).unaryExpr([](double v) {
        return sigmoid(v);
      });

  Eigen::MatrixXd resid = xr - target;
  if (mask != nullptr) resid = mask->asDiagonal() * resid;
  g.loss = resid.squaredNorm() / b;

  // d loss / d xr; the mask enters squared for non-binary masks.
  Eigen::MatrixXd d4 = (2.0 / b) * (xr - target);
  if (mask != nullptr) d4 = mask->cwiseProduct(*mask).asDiagonal() * d4;
  d4.array() *= (xr.array() * (1.0 - xr.array()));

  g.gb4 = d4.rowwise().sum();
  g.gW1_dec.noalias() = d4 * h2.transpose();  // input x hidden (V1 shape)
  Eigen::MatrixXd d3 = dx.transpose() * d4;
  d3.array() *= (pre3.array() > 0.0).cast<double>();
  g.gb3 = d3.rowwise().sum();
  g.gW2_dec.noalias() = d3 * z.transpose();  // hidden x latent (V2 shape)
  Eigen::MatrixXd dz = dh.transpose() * d3;

  g.gb2 = dz.rowwise().sum();
  g.gW2_enc.noalias() = dz * h1.transpose();  // latent x hidden
  Eigen::MatrixXd dhid = as_eigen(enc.W2).transpose() * dz;
  dhid.array() *= (pre1.array() > 0.0).cast<double>();
  g.gb1 = dhid.rowwise().sum();
  g.gW1_enc.noalias() = dhid * x.transpose();  // hidden x input

  return g;
}

enum BlockIndex : std::size_t { kW1 = 0, kB1, kW2, kB2, kB3, kB4, kV2, kV1 };

inline void ensure_opt(Autoencoder& ae) {
  std::vector<std::size_t> sizes = {ae.W1.data.size(), ae.b1.size(),
                                    ae.W2.data.size(), ae.b2.size(),
                                    ae.b3.size(),      ae.b4.size()};
  if (!ae.config.tie_weights) {
    sizes.push_back(ae.V2.data.size());
    sizes.push_back(ae.V1.data.size());
  }
  ae.opt.ensure(sizes);
}

inline void update_block(Autoencoder& ae, std::size_t idx, double* w,
                         const double* grad, std::size_t n, const TrainConfig& cfg) {
  if (cfg.optimizer == Optimizer::Sgd) {
    sgd_update(w, grad, n, cfg.learning_rate);
    return;
  }
  ensure_opt(ae);
  ae.opt.t[idx] += 1;
  adam_update(w, grad, n, ae.opt.m[idx].data(), ae.opt.v[idx].data(),
              ae.opt.t[idx], cfg);
}

/// Applies the encoder-side gradient pieces to `enc` and the decoder-side
/// pieces to `dec`. With enc == dec and tied weights, W1/W2 receive the sum
/// of both roles' gradients in a single optimizer step.
inline void apply_gradients(Autoencoder& enc, Autoencoder& dec, AeGradients& g,
                            const TrainConfig& cfg) {
  const bool same = (&enc == &dec);
  if (same && enc.config.tie_weights) {
    EigenRowMat w1sum = g.gW1_enc + g.gW1_dec.transpose();
    EigenRowMat w2sum = g.gW2_enc + g.gW2_dec.transpose();
    update_block(enc, kW1, enc.W1.ptr(), w1sum.data(), enc.W1.data.size(), cfg);
    update_block(enc, kW2, enc.W2.ptr(), w2sum.data(), enc.W2.data.size(), cfg);
  } else {
    update_block(enc, kW1, enc.W1.ptr(), g.gW1_enc.data(), enc.W1.data.size(), cfg);
    update_block(enc, kW2, enc.W2.ptr(), g.gW2_enc.data(), enc.W2.data.size(), cfg);
    if (dec.config.tie_weights) {
      EigenRowMat w1d = g.gW1_dec.transpose();
      EigenRowMat w2d = g.gW2_dec.transpose();
      update_block(dec, kW1, dec.W1.ptr(), w1d.data(), dec.W1.data.size(), cfg);
      update_block(dec, kW2, dec.W2.ptr(), w2d.data(), dec.W2.data.size(), cfg);
    }
  }
  if (!dec.config.tie_weights) {
    update_block(dec, kV2, dec.V2.ptr(), g.gW2_dec.data(), dec.V2.data.size(), cfg);
    update_block(dec, kV1, dec.V1.ptr(), g.gW1_dec.data(), dec.V1.data.size(), cfg);
  }
  update_block(enc, kB1, enc.b1.ptr(), g.gb1.data(), enc.b1.size(), cfg);
  update_block(enc, kB2, enc.b2.ptr(), g.gb2.data(), enc.b2.size(), cfg);
  update_block(dec, kB3, dec.b3.ptr(), g.gb3.data(), dec.b3.size(), cfg);
  update_block(dec, kB4, dec.b4.ptr(), g.gb4.data(), dec.b4.size(), cfg);
}

inline Eigen::MatrixXd to_batch(const std::vector<DenseVector>& batch,
                                std::size_t dim) {
  Eigen::MatrixXd x(dim, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    require(batch[i].size() == dim, "batch: sample length mismatch");
    x.col(static_cast<Eigen::Index>(i)) = as_eigen(batch[i]);
  }
  return x;
}

}  // namespace detail

/// One optimizer step on a batch. Returns the mean per-sample L2 loss before
/// the update. A non-finite loss aborts without touching parameters.
inline double train_step_batch(Autoencoder& ae, const Eigen::MatrixXd& x,
                               const TrainConfig& cfg) {
  cfg.validate();
  detail::AeGradients g = detail::cross_backward(ae, ae, x, x, nullptr);
  if (!std::isfinite(g.loss))
    throw TrainingDivergedError("train_step: non-finite loss");
  detail::apply_gradients(ae, ae, g, cfg);
  return g.loss;
}

inline double train_step(Autoencoder& ae, const std::vector<DenseVector>& batch,
                         const TrainConfig& cfg) {
  require(!batch.empty(), "train_step: empty batch");
  return train_step_batch(ae, detail::to_batch(batch, ae.config.input_dim), cfg);
}

}  // namespace aesl
