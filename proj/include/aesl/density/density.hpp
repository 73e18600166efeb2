#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "aesl/ae/autoencoder.hpp"
#include "aesl/core/error.hpp"
#include "aesl/core/linalg.hpp"
#include "aesl/core/types.hpp"

namespace aesl {

/// Gaussian fit over latent codes, regularized diagonally. Stores the
/// Cholesky factor of the regularized covariance for cheap log-density.
struct LatentPrior {
  DenseVector mean;
  DenseMatrix covariance;  // latent x latent, SPD after regularization
  double regularization = 0.0;
  DenseMatrix chol;     // lower factor of covariance
  double log_det = 0.0;

  std::size_t dim() const { return mean.size(); }

  double log_density(const DenseVector& z) const {
    require(z.size() == mean.size(), "LatentPrior: code length mismatch");
    DenseVector centered(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) centered[i] = z[i] - mean[i];
    DenseVector y = forward_subst(chol, centered);
    const double quad = dot(y, y);
    const double k = static_cast<double>(z.size());
    return -0.5 * (quad + log_det + k * std::log(2.0 * std::numbers::pi));
  }
};

/// Per-autoencoder scoring state for the log-density assembly.
struct DensityModel {
  double sigma = 1.0;
  LatentPrior prior;
  double const1 = 0.0;
  double const2 = 1.0;
  bool use_prior_term = false;
  bool use_det_term = false;
};

struct DensityScore {
  double recon_term = 0.0;
  double prior_term = 0.0;
  double det_term = 0.0;
  double total = 0.0;
};

/// sigma = sqrt(mean over samples and components of squared residual),
/// floored at 1e-6 so a perfect reconstructor stays usable downstream.
inline double estimate_sigma(const Autoencoder& ae,
                             const std::vector<DenseVector>& data) {
  require(!data.empty(), "estimate_sigma: empty data");
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (const DenseVector& x : data) {
    DenseVector xr = reconstruct(ae, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - xr[i];
      sum_sq += r * r;
    }
    count += x.size();
  }
  return std::max(std::sqrt(sum_sq / static_cast<double>(count)), 1e-6);
}

/// Gaussian fit over the encoder's codes of `data`: sample mean, sample
/// covariance (unbiased) plus reg on the diagonal.
inline LatentPrior fit_latent_prior(const Autoencoder& ae,
                                    const std::vector<DenseVector>& data,
                                    double reg) {
  const std::size_t k = ae.config.latent_dim;
  require(data.size() >= k + 1, "fit_latent_prior: need at least latent_dim+1 samples");
  require(reg >= 0.0, "fit_latent_prior: regularization must be >= 0");

  std::vector<DenseVector> codes;
  codes.reserve(data.size());
  for (const DenseVector& x : data) codes.push_back(encode(ae, x));

  LatentPrior prior;
  prior.regularization = reg;
  prior.mean = DenseVector(k);
  const double n = static_cast<double>(codes.size());
  for (const DenseVector& z : codes)
    for (std::size_t i = 0; i < k; ++i) prior.mean[i] += z[i] / n;

  prior.covariance = DenseMatrix(k, k);
  for (const DenseVector& z : codes)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        prior.covariance(i, j) +=
            (z[i] - prior.mean[i]) * (z[j] - prior.mean[j]) / (n - 1.0);
  for (std::size_t i = 0; i < k; ++i) prior.covariance(i, i) += reg;

  prior.chol = cholesky_factor(prior.covariance);
  prior.log_det = 0.0;
  for (std::size_t i = 0; i < k; ++i) prior.log_det += 2.0 * std::log(prior.chol(i, i));
  return prior;
}

/// Rebuilds the cached Cholesky factor after deserialization.
inline void refresh_prior_factor(LatentPrior& prior) {
  prior.chol = cholesky_factor(prior.covariance);
  prior.log_det = 0.0;
  for (std::size_t i = 0; i < prior.dim(); ++i)
    prior.log_det += 2.0 * std::log(prior.chol(i, i));
}

/// -||m .* (x - x*)||^2 / (2 sigma^2). Missing mask = all ones.
inline double recon_term(const DenseVector& x, const DenseVector& x_star,
                         const DenseVector* mask, double sigma) {
  require(x.size() == x_star.size(), "recon_term: length mismatch");
  if (mask != nullptr)
    require(mask->size() == x.size(), "recon_term: mask length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = x[i] - x_star[i];
    if (mask != nullptr) r *= (*mask)[i];
    sum += r * r;
  }
  return -sum / (2.0 * sigma * sigma);
}

/// The log of the Euler-Poisson determinant factor:
///   -1/2 * log det( (J/sigma)^T (J/sigma) / 2pi )
/// J^T J gets 1e-9 I before factorization; trained decoders can have
/// near-collinear Jacobian columns.
inline double det_term(const DenseMatrix& jac, double sigma) {
  require(sigma > 0.0, "det_term: sigma must be positive");
  const std::size_t k = jac.cols;
  DenseMatrix jtj(k, k);
  as_eigen(jtj).noalias() = as_eigen(jac).transpose() * as_eigen(jac);
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) jtj(i, j) *= inv_s2;
    jtj(i, i) += 1e-9;
  }
  double logdet;
  try {
    logdet = cholesky_logdet(jtj);
  } catch (const SingularityError& e) {
    throw SingularityError("det_term: singular Jacobian", e.pivot_index);
  }
  const double k_d = static_cast<double>(k);
  return -0.5 * (logdet - k_d * std::log(2.0 * std::numbers::pi));
}

/// Full Eq.-style score: z* = g(x), x* = f(z*), then the three terms under the
/// model's flags. Disabled terms contribute exactly zero.
inline DensityScore log_px(const Autoencoder& ae, const DensityModel& dm,
                           const DenseVector& x, const DenseVector* mask = nullptr) {
  DenseVector z_star = encode(ae, x);
  DenseVector x_star = decode(ae, z_star);
  DensityScore score;
  score.recon_term = recon_term(x, x_star, mask, dm.sigma);
  if (dm.use_prior_term) score.prior_term = dm.prior.log_density(z_star);
  if (dm.use_det_term)
    score.det_term = det_term(decoder_jacobian(ae, z_star), dm.sigma);
  score.total = dm.const1 + dm.const2 * score.recon_term + score.prior_term +
                score.det_term;
  return score;
}

/// Diagnostic for the stationarity condition grad f(z*) _|_ (x - f(z*)):
/// max over latent axes of |cos angle| between Jacobian column and residual.
/// Zero residual or a zero column counts as 0 for that axis.
inline double orthogonality_residual(const Autoencoder& ae, const DenseVector& x) {
  DenseVector z_star = encode(ae, x);
  DenseVector x_star = decode(ae, z_star);
  DenseVector resid(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) resid[i] = x[i] - x_star[i];
  const double rn = norm2(resid);
  if (rn == 0.0) return 0.0;
  DenseMatrix jac = decoder_jacobian(ae, z_star);
  double worst = 0.0;
  for (std::size_t j = 0; j < jac.cols; ++j) {
    double cn = 0.0, proj = 0.0;
    for (std::size_t r = 0; r < jac.rows; ++r) {
      cn += jac(r, j) * jac(r, j);
      proj += jac(r, j) * resid[r];
    }
    if (cn == 0.0) continue;
    worst = std::max(worst, std::abs(proj) / (std::sqrt(cn) * rn));
  }
  return worst;
}

}  // namespace aesl
