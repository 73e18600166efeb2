#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "aesl/density/density.hpp"
#include "../support/oracles.hpp"

using namespace aesl;

namespace {

// AE whose encoder is exactly z = 10*(x - 0.5) on 2-dim inputs. relu stays in
// its linear region because inputs are non-negative.
Autoencoder linear_probe_ae() {
  AeConfig cfg{2, 4, 2, true};
  Autoencoder ae = ae_init(cfg, RngState::from_seed(1));
  ae.W1 = DenseMatrix(4, 2);
  ae.W1(0, 0) = 10.0;
  ae.W1(1, 1) = 10.0;
  ae.W2 = DenseMatrix(2, 4);
  ae.W2(0, 0) = 1.0;
  ae.W2(1, 1) = 1.0;
  ae.b1 = DenseVector(4);
  ae.b2 = DenseVector{-5.0, -5.0};
  return ae;
}

Autoencoder constant_half_ae(std::size_t dim) {
  AeConfig cfg{dim, 4, 2, true};
  Autoencoder ae = ae_init(cfg, RngState::from_seed(2));
  ae.W1 = DenseMatrix(4, dim);
  ae.W2 = DenseMatrix(2, 4);
  ae.b1 = DenseVector(4);
  ae.b2 = DenseVector(2);
  ae.b3 = DenseVector(4);
  ae.b4 = DenseVector(dim);  // sigmoid(0) = 0.5 everywhere
  return ae;
}

}  // namespace

TEST_CASE("estimate_sigma constant residual and floor") {
  Autoencoder ae = constant_half_ae(6);
  // Reconstruction is 0.5 everywhere; input 0.6 gives residual 0.1.
  std::vector<DenseVector> data{DenseVector(6, 0.6)};
  CHECK(estimate_sigma(ae, data) == Catch::Approx(0.1).epsilon(1e-12));

  std::vector<DenseVector> exact{DenseVector(6, 0.5)};
  CHECK(estimate_sigma(ae, exact) == 1e-6);

  CHECK_THROWS_AS(estimate_sigma(ae, {}), ContractError);
}

TEST_CASE("fit_latent_prior recovers an isotropic Gaussian") {
  Autoencoder ae = linear_probe_ae();
  RngState rng = RngState::from_seed(99);
  const int n = 10000;
  std::vector<DenseVector> data;
  for (int i = 0; i < n; ++i) {
    DenseVector x(2);
    for (int d = 0; d < 2; ++d) {
      double z = rng.next_gaussian();
      z = std::clamp(z, -4.9, 4.9);
      x[d] = z / 10.0 + 0.5;
    }
    data.push_back(x);
  }
  LatentPrior prior = fit_latent_prior(ae, data, 0.0);
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(prior.mean[0]) < tol);
  CHECK(std::abs(prior.mean[1]) < tol);
  CHECK(std::abs(prior.covariance(0, 0) - 1.0) < 3 * tol);
  CHECK(std::abs(prior.covariance(1, 1) - 1.0) < 3 * tol);
  CHECK(std::abs(prior.covariance(0, 1)) < 3 * tol);

  // Mode beats samples.
  const double at_mean = prior.log_density(prior.mean);
  for (int i = 0; i < 50; ++i) {
    const double lp = prior.log_density(encode(ae, data[static_cast<std::size_t>(i)]));
    CHECK(at_mean >= lp);
  }
}

TEST_CASE("fit_latent_prior degenerate data plus regularizer") {
  Autoencoder ae = linear_probe_ae();
  std::vector<DenseVector> data(5, DenseVector{0.7, 0.4});
  LatentPrior prior = fit_latent_prior(ae, data, 1.0);
  CHECK(prior.covariance(0, 0) == Catch::Approx(1.0));
  CHECK(prior.covariance(1, 1) == Catch::Approx(1.0));
  CHECK(prior.covariance(0, 1) == Catch::Approx(0.0).margin(1e-12));
  DenseVector code = encode(ae, data[0]);
  CHECK(prior.mean[0] == Catch::Approx(code[0]));
  CHECK(prior.mean[1] == Catch::Approx(code[1]));

  std::vector<DenseVector> few(2, DenseVector{0.5, 0.5});
  CHECK_THROWS_AS(fit_latent_prior(ae, few, 0.0), ContractError);
}

TEST_CASE("recon_term basics, the 784-dim hand value, masks, sigma scaling") {
  DenseVector x(784, 0.6), xs(784, 0.5);
  CHECK(recon_term(x, x, nullptr, 0.1) == 0.0);

  DenseVector zero_mask(784, 0.0);
  CHECK(recon_term(x, xs, &zero_mask, 0.1) == 0.0);

  // 784 * 0.1^2 / (2 * 0.1^2) = 392
  CHECK(recon_term(x, xs, nullptr, 0.1) == Catch::Approx(-392.0).epsilon(1e-12));

  // Exact 1/sigma^2 scaling (powers of two commute with rounding).
  const double at_sigma = recon_term(x, xs, nullptr, 0.17);
  const double at_two_sigma = recon_term(x, xs, nullptr, 0.34);
  CHECK(at_two_sigma == at_sigma / 4.0);

  CHECK_THROWS_AS(recon_term(x, DenseVector(10, 0.0), nullptr, 0.1), ContractError);
}

TEST_CASE("masked recon_term equals unmasked recon_term on the masked subvector") {
  RngState rng = RngState::from_seed(4);
  DenseVector x(32), xs(32), mask(32);
  for (int i = 0; i < 32; ++i) {
    x[static_cast<std::size_t>(i)] = rng.next_double();
    xs[static_cast<std::size_t>(i)] = rng.next_double();
    mask[static_cast<std::size_t>(i)] = (rng.next_double() < 0.5) ? 0.0 : 1.0;
  }
  DenseVector xm, xsm;
  for (int i = 0; i < 32; ++i)
    if (mask[static_cast<std::size_t>(i)] == 1.0) {
      xm.data.push_back(x[static_cast<std::size_t>(i)]);
      xsm.data.push_back(xs[static_cast<std::size_t>(i)]);
    }
  CHECK(recon_term(x, xs, &mask, 0.2) ==
        Catch::Approx(recon_term(xm, xsm, nullptr, 0.2)).epsilon(1e-12));
}

TEST_CASE("det_term trivial cases") {
  const double s2pi = std::sqrt(2.0 * std::numbers::pi);
  DenseMatrix j(3, 3);
  for (int i = 0; i < 3; ++i)
    j(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 0.7 * s2pi;
  CHECK(det_term(j, 0.7) == Catch::Approx(0.0).margin(1e-8));

  // Orthonormal columns, sigma 1: +(k/2) ln(2 pi).
  DenseMatrix q(5, 2);
  q(0, 0) = 1.0;
  q(3, 1) = 1.0;
  CHECK(det_term(q, 1.0) ==
        Catch::Approx(std::log(2.0 * std::numbers::pi)).margin(1e-8));
}

TEST_CASE("det_term matches LU oracle on random Jacobians") {
  RngState rng = RngState::from_seed(21);
  for (int trial = 0; trial < 5; ++trial) {
    DenseMatrix j(50, 4);
    for (double& v : j.data) v = rng.next_uniform(-1.0, 1.0);
    const double sigma = 0.3;
    DenseMatrix a(4, 4);
    as_eigen(a).noalias() = as_eigen(j).transpose() * as_eigen(j);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < 4; ++k) a(i, k) /= sigma * sigma;
      a(i, i) += 1e-9;
    }
    const double want = -0.5 * (oracles::lu_logdet(a) -
                                4.0 * std::log(2.0 * std::numbers::pi));
    CHECK(std::abs(det_term(j, sigma) - want) /
              std::max(1.0, std::abs(want)) <
          1e-8);
  }
}

TEST_CASE("det_term rejects non-finite Jacobians") {
  DenseMatrix j(4, 2);
  j(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(det_term(j, 1.0), SingularityError);
}

TEST_CASE("log_px flag semantics and mask invariance at perfect pixels") {
  Autoencoder ae = constant_half_ae(8);
  DensityModel dm;
  dm.sigma = 0.2;
  dm.const1 = 1.5;
  dm.const2 = 2.0;
  DenseVector x(8, 0.7);

  DensityScore s = log_px(ae, dm, x);
  CHECK(s.prior_term == 0.0);
  CHECK(s.det_term == 0.0);
  CHECK(s.total == Catch::Approx(dm.const1 + dm.const2 * s.recon_term));

  // Reconstruction is 0.5 everywhere; an input equal to 0.5 at some pixels is
  // insensitive to the mask there.
  DenseVector y(8, 0.9);
  y[2] = 0.5;
  y[5] = 0.5;
  DenseVector mask_a(8, 1.0), mask_b(8, 1.0);
  mask_b[2] = 0.0;
  mask_b[5] = 0.3;
  CHECK(log_px(ae, dm, y, &mask_a).total ==
        Catch::Approx(log_px(ae, dm, y, &mask_b).total).epsilon(1e-12));
}

TEST_CASE("log_px with prior and det terms enabled") {
  Autoencoder ae = linear_probe_ae();
  RngState rng = RngState::from_seed(31);
  std::vector<DenseVector> data;
  for (int i = 0; i < 200; ++i) {
    DenseVector x(2);
    x[0] = 0.4 + 0.2 * rng.next_double();
    x[1] = 0.4 + 0.2 * rng.next_double();
    data.push_back(x);
  }
  DensityModel dm;
  dm.sigma = estimate_sigma(ae, data);
  dm.prior = fit_latent_prior(ae, data, 1e-6);
  dm.use_prior_term = true;
  dm.use_det_term = true;
  DensityScore s = log_px(ae, dm, data[0]);
  CHECK(std::isfinite(s.total));
  CHECK(s.prior_term != 0.0);
  CHECK(s.det_term != 0.0);
  CHECK(s.total == Catch::Approx(dm.const1 + dm.const2 * s.recon_term +
                                 s.prior_term + s.det_term));
}

TEST_CASE("det_term invariant under latent rotation") {
  RngState rng = RngState::from_seed(61);
  DenseMatrix j(20, 2);
  for (double& v : j.data) v = rng.next_uniform(-1.0, 1.0);
  const double theta = 0.83;
  DenseMatrix q(2, 2);
  q(0, 0) = std::cos(theta);
  q(0, 1) = -std::sin(theta);
  q(1, 0) = std::sin(theta);
  q(1, 1) = std::cos(theta);
  DenseMatrix jq = matmul(j, q);
  CHECK(std::abs(det_term(j, 0.5) - det_term(jq, 0.5)) < 1e-8);
}

TEST_CASE("orthogonality_residual zero and untrained baselines") {
  Autoencoder ae = constant_half_ae(8);
  CHECK(orthogonality_residual(ae, DenseVector(8, 0.5)) == 0.0);

  AeConfig cfg{16, 12, 3, true};
  Autoencoder rnd = ae_init(cfg, RngState::from_seed(71));
  RngState rng = RngState::from_seed(72);
  DenseVector x(16);
  for (auto& v : x.data) v = rng.next_double();
  const double r = orthogonality_residual(rnd, x);
  CHECK(r > 0.0);
  CHECK(r <= 1.0);
}
