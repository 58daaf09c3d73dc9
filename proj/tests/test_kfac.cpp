#include <cmath>

#include <doctest.h>

#include "amckfac/kfac.hpp"
#include "helpers.hpp"

using namespace amckfac;

namespace {

SolveContext exact_like_ctx() {
  SolveContext ctx;
  ctx.device.write_tolerance = 0.0;
  ctx.device.off_leak_max = 0.0;
  ctx.converters.dac_bits = 30;
  ctx.converters.adc_bits = 30;
  ctx.spec = FixedPointSpec{26};
  return ctx;
}

Matrix synthetic_batch(std::size_t b, std::uint64_t seed) {
  return testutil::random_matrix(b, ModelDims::image_size, seed, 0.0, 1.0);
}

}  // namespace

TEST_CASE("fc_factors rank-1 hand case") {
  Matrix act(1, 2, {1.0, 0.0});
  Matrix grads(1, 1, {2.0});
  auto [a, g] = fc_factors(act, grads);
  CHECK(a(0, 0) == 1.0);
  CHECK(a(0, 1) == 0.0);
  CHECK(a(1, 1) == 0.0);
  CHECK(g(0, 0) == 4.0);
}

TEST_CASE("fc_factors averaging invariance for duplicated samples") {
  Matrix act1(1, 3, {0.5, -1.0, 2.0});
  Matrix grads1(1, 2, {1.0, -0.5});
  Matrix act2(2, 3, {0.5, -1.0, 2.0, 0.5, -1.0, 2.0});
  Matrix grads2(2, 2, {1.0, -0.5, 1.0, -0.5});
  auto [a1, g1] = fc_factors(act1, grads1);
  auto [a2, g2] = fc_factors(act2, grads2);
  CHECK(norm_max(a1 - a2) <= 1e-15);
  CHECK(norm_max(g1 - g2) <= 1e-15);
}

TEST_CASE("fc_factors match the brute-force second moment") {
  Matrix act = testutil::random_matrix(100, 6, 21);
  Matrix grads = testutil::random_matrix(100, 3, 22);
  auto [a, g] = fc_factors(act, grads);
  Matrix a_oracle(6, 6, 0.0);
  for (std::size_t b = 0; b < 100; ++b)
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        a_oracle(i, j) += act(b, i) * act(b, j) / 100.0;
  CHECK(norm_max(a - a_oracle) <= 1e-12);
  CHECK(norm_max(a - a.transposed()) <= 1e-12);
  CHECK(norm_max(g - g.transposed()) <= 1e-12);
}

TEST_CASE("conv_factors scalar and zero cases") {
  Matrix patches(1, 1, {0.7});
  Matrix grads(1, 1, {0.0});
  auto [a, g] = conv_factors(patches, grads);
  CHECK(a(0, 0) == doctest::Approx(0.49));
  CHECK(g(0, 0) == 0.0);

  Matrix zero_grads(5, 2, 0.0);
  Matrix some_patches = testutil::random_matrix(5, 3, 23);
  auto [a2, g2] = conv_factors(some_patches, zero_grads);
  CHECK(norm_max(g2) == 0.0);

  CHECK_THROWS_AS(conv_factors(Matrix(4, 3), Matrix(5, 2)),
                  ContractViolation);
}

TEST_CASE("compute_damping trace-ratio split") {
  SUBCASE("balanced traces") {
    Matrix a = Matrix::identity(3);
    Matrix g = Matrix::identity(2);
    auto [alpha, beta] = compute_damping(a, g, 0.04);
    CHECK(alpha == doctest::Approx(0.2));
    CHECK(beta == doctest::Approx(0.2));
  }
  SUBCASE("pi = 2 worked example") {
    Matrix a = 4.0 * Matrix::identity(3);  // tr/dim = 4
    Matrix g = Matrix::identity(2);        // tr/dim = 1
    auto [alpha, beta] = compute_damping(a, g, 0.04);
    CHECK(alpha == doctest::Approx(0.4));
    CHECK(beta == doctest::Approx(0.1));
    CHECK(alpha * beta == doctest::Approx(0.04));
  }
  SUBCASE("zero G falls back to pi = 1") {
    Matrix a = Matrix::identity(3);
    Matrix g(2, 2, 0.0);
    auto [alpha, beta] = compute_damping(a, g, 0.04);
    CHECK(alpha == doctest::Approx(0.2));
    CHECK(beta == doctest::Approx(0.2));
  }
  SUBCASE("product equals lambda across random factors") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Matrix a = testutil::random_spd(5, 30.0, seed);
      Matrix g = testutil::random_spd(3, 30.0, seed + 40);
      auto [alpha, beta] = compute_damping(a, g, 3e-2);
      CHECK(alpha * beta == doctest::Approx(3e-2).epsilon(1e-10));
      CHECK(alpha > 0.0);
      CHECK(beta > 0.0);
    }
  }
}

TEST_CASE("damped factors are positive definite") {
  Matrix a = testutil::random_spd(9, 1e4, 31);  // nearly singular tail
  Matrix g = testutil::random_spd(4, 1e4, 32);
  auto [alpha, beta] = compute_damping(a, g, 3e-2);
  CHECK_NOTHROW(cholesky_factor(add_scaled_identity(a, alpha)));
  CHECK_NOTHROW(cholesky_factor(add_scaled_identity(g, beta)));
}

TEST_CASE("kfac preconditioning equals the Kronecker-inverse oracle") {
  SolveContext ctx = exact_like_ctx();
  Matrix a_factor = testutil::random_spd(9, 20.0, 33);
  Matrix g_factor = testutil::random_spd(4, 20.0, 34);
  Matrix grad = testutil::random_matrix(4, 9, 35);
  const double alpha = 0.25, beta = 0.12;

  Matrix out = precondition_update(grad, a_factor, g_factor, alpha, beta, ctx);

  Matrix a_damped_inv = invert(add_scaled_identity(a_factor, alpha));
  Matrix g_damped_inv = invert(add_scaled_identity(g_factor, beta));
  Vector oracle =
      mvm(testutil::kron(a_damped_inv, g_damped_inv), vectorize(grad));
  CHECK(relative_error(vectorize(out), oracle) <= 1e-5);
}

TEST_CASE("exact-limit kfac_step matches the digital oracle") {
  Model model = Model::init(3);
  Matrix images = synthetic_batch(16, 36);
  std::vector<int> labels;
  for (int i = 0; i < 16; ++i) labels.push_back(i % 4);

  SolveContext ctx = exact_like_ctx();
  KfacConfig cfg;
  KfacStepReport report = kfac_step(model, images, labels, cfg, ctx);
  CHECK(report.rel_err_conv_w <= 1e-5);
  CHECK(report.rel_err_conv_b <= 1e-5);
  CHECK(report.rel_err_fc_w <= 1e-5);
  CHECK(report.rel_err_fc_b <= 1e-5);
  CHECK(report.mean_rel_err <= 1e-5);
}

TEST_CASE("a kfac step descends the batch loss") {
  Model model = Model::init(5);
  Matrix images = synthetic_batch(32, 37);
  std::vector<int> labels;
  for (int i = 0; i < 32; ++i) labels.push_back((i * 7) % 4);

  SolveContext ctx = exact_like_ctx();
  KfacConfig cfg;
  const double loss_before =
      batch_loss(forward(model, images), labels);
  KfacStepReport report =
      kfac_step(model, images, labels, cfg, ctx, /*exact_solver=*/true);
  CHECK(report.loss_before == doctest::Approx(loss_before));
  const double loss_after = batch_loss(forward(model, images), labels);
  CHECK(loss_after < loss_before);
}

TEST_CASE("exact and analog step reports share the oracle convention") {
  // with the exact solver the update *is* the oracle: errors are ~0
  Model model = Model::init(7);
  Matrix images = synthetic_batch(8, 38);
  std::vector<int> labels = {0, 1, 2, 3, 0, 1, 2, 3};
  SolveContext ctx = exact_like_ctx();
  KfacConfig cfg;
  KfacStepReport report =
      kfac_step(model, images, labels, cfg, ctx, /*exact_solver=*/true);
  CHECK(report.mean_rel_err <= 1e-12);
}
