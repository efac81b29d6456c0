#include <doctest.h>

#include <cmath>
#include <vector>

#include "interlat/latents.hpp"

using namespace interlat;

namespace {

// Pairwise dot-product oracle: mean of squared off-diagonal Gram entries.
double oracle_ortho(const std::vector<double>& rows, size_t k, size_t d) {
  double acc = 0.0;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      double dot = 0.0;
      for (size_t c = 0; c < d; ++c) dot += rows[i * d + c] * rows[j * d + c];
      acc += dot * dot;
    }
  }
  return acc / (static_cast<double>(k) * static_cast<double>(k - 1));
}

}  // namespace

TEST_SUITE("latents") {
  TEST_CASE("init is deterministic per seed and scale") {
    auto a = init_latents(4, 5, 6, 99, 0.02);
    auto b = init_latents(4, 5, 6, 99, 0.02);
    CHECK(a.spatial.to_vector() == b.spatial.to_vector());
    CHECK(a.temporal.to_vector() == b.temporal.to_vector());
    CHECK(a.spatial.shape() == Shape{4, 6});
    CHECK(a.temporal.shape() == Shape{5, 6});
    auto c = init_latents(4, 5, 6, 100, 0.02);
    CHECK(a.spatial.to_vector() != c.spatial.to_vector());
  }

  TEST_CASE("zero scale gives zero latents") {
    auto lat = init_latents(3, 3, 4, 1, 0.0);
    for (double v : lat.spatial.to_vector()) CHECK(v == 0.0);
    for (double v : lat.temporal.to_vector()) CHECK(v == 0.0);
  }

  TEST_CASE("full-scale codebook shape is expressible") {
    auto lat = init_latents(512, 512, 512, 3, 0.02);
    CHECK(lat.spatial.shape() == Shape{512, 512});
    CHECK(lat.temporal.shape() == Shape{512, 512});
  }

  TEST_CASE("invalid sizes are rejected") {
    CHECK_THROWS_AS(init_latents(0, 1, 1, 0, 0.1), Error);
    CHECK_THROWS_AS(init_latents(1, 0, 1, 0, 0.1), Error);
    CHECK_THROWS_AS(init_latents(1, 1, 0, 0, 0.1), Error);
    CHECK_THROWS_AS(init_latents(1, 1, 1, 0, -0.5), Error);
  }

  TEST_CASE("orthogonal rows give exactly zero loss") {
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    CHECK(orthogonality_loss(eye).item() == 0.0);
  }

  TEST_CASE("duplicated row [[1,0],[1,0]] gives exactly one") {
    Tensor dup = Tensor::from_data({2, 2}, {1, 0, 1, 0});
    CHECK(orthogonality_loss(dup).item() == 1.0);
  }

  TEST_CASE("random latents match the pairwise oracle") {
    Rng rng(17);
    Tensor latents = Tensor::randn({8, 16}, rng);
    double expect = oracle_ortho(latents.to_vector(), 8, 16);
    CHECK(orthogonality_loss(latents).item() ==
          doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("loss is invariant under row permutation") {
    Rng rng(18);
    Tensor latents = Tensor::randn({5, 7}, rng);
    auto v = latents.to_vector();
    std::vector<double> shuffled(v.size());
    size_t order[5] = {3, 0, 4, 1, 2};
    for (size_t i = 0; i < 5; ++i) {
      for (size_t c = 0; c < 7; ++c) shuffled[i * 7 + c] = v[order[i] * 7 + c];
    }
    double a = orthogonality_loss(latents).item();
    double b = orthogonality_loss(Tensor::from_data({5, 7}, shuffled)).item();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }

  TEST_CASE("fewer than two rows is an error") {
    try {
      orthogonality_loss(Tensor::ones({1, 4}));
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TooFewLatents);
    }
    CHECK_THROWS_AS(orthogonality_loss(Tensor::ones({4})), Error);
  }

  TEST_CASE("combined loss is the sum of both components") {
    auto lat = init_latents(4, 6, 8, 21, 0.5);
    double s = orthogonality_loss(lat.spatial).item();
    double t = orthogonality_loss(lat.temporal).item();
    CHECK(combined_ortho_loss(lat).item() == s + t);
    // Orthogonal rows in both components -> zero.
    InteractionLatents ortho;
    ortho.spatial = Tensor::from_data({2, 3}, {1, 0, 0, 0, 2, 0});
    ortho.temporal = Tensor::from_data({2, 3}, {0, 0, 3, 0, 5, 0});
    CHECK(combined_ortho_loss(ortho).item() == 0.0);
  }

  TEST_CASE("row-normalized variant matches cosine oracle and scale invariance") {
    Rng rng(19);
    Tensor latents = Tensor::randn({4, 6}, rng);
    auto v = latents.to_vector();
    // Normalize rows by hand, then apply the plain oracle.
    std::vector<double> unit(v.size());
    for (size_t i = 0; i < 4; ++i) {
      double norm = 0.0;
      for (size_t c = 0; c < 6; ++c) norm += v[i * 6 + c] * v[i * 6 + c];
      norm = std::sqrt(norm);
      for (size_t c = 0; c < 6; ++c) unit[i * 6 + c] = v[i * 6 + c] / norm;
    }
    double expect = oracle_ortho(unit, 4, 6);
    CHECK(orthogonality_loss(latents, true).item() ==
          doctest::Approx(expect).epsilon(1e-12));
    // Scaling any row must not change the normalized loss.
    std::vector<double> scaled = v;
    for (size_t c = 0; c < 6; ++c) scaled[2 * 6 + c] *= 7.5;
    CHECK(orthogonality_loss(Tensor::from_data({4, 6}, scaled), true).item() ==
          doctest::Approx(orthogonality_loss(latents, true).item())
              .epsilon(1e-12));
  }

  TEST_CASE("gradient passes finite differences") {
    Rng rng(20);
    Tensor latents = Tensor::randn({4, 6}, rng).with_requires_grad();
    double err = finite_diff_check(
        [](const Tensor& l) { return orthogonality_loss(l); }, latents, 1e-4);
    CHECK(err < 1e-4);
    Tensor latents2 = Tensor::randn({3, 5}, rng).with_requires_grad();
    double err2 = finite_diff_check(
        [](const Tensor& l) { return orthogonality_loss(l, true); }, latents2,
        1e-4);
    CHECK(err2 < 1e-4);
  }

  TEST_CASE("gradient descent drives the loss below 1e-3") {
    Rng rng(0);
    Tensor latents = Tensor::randn({8, 16}, rng).with_requires_grad();
    double initial = orthogonality_loss(latents).item();
    for (int step = 0; step < 500; ++step) {
      Tape tape;
      {
        TapeScope scope(tape);
        tape.backward(orthogonality_loss(latents));
      }
      latents = sub(latents.detach(), scale(latents.grad(), 0.1))
                    .with_requires_grad();
    }
    double final_loss = orthogonality_loss(latents).item();
    CHECK(final_loss < 1e-3);
    CHECK(final_loss < initial);
  }
}
