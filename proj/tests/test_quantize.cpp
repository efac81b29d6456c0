#include <doctest.h>

#include <cmath>
#include <vector>

#include "interlat/quantize.hpp"

using namespace interlat;

namespace {

// Brute-force oracle: per position, squared distances by direct subtraction,
// softmax over -D/tau, weighted sum of codebook rows.
std::vector<double> oracle_quantize(const std::vector<double>& states,
                                    const std::vector<double>& codebook,
                                    size_t positions, size_t k, size_t d,
                                    double tau) {
  std::vector<double> out(positions * d, 0.0);
  for (size_t p = 0; p < positions; ++p) {
    std::vector<double> dist(k, 0.0);
    for (size_t r = 0; r < k; ++r) {
      for (size_t c = 0; c < d; ++c) {
        double delta = states[p * d + c] - codebook[r * d + c];
        dist[r] += delta * delta;
      }
    }
    double mx = -1e300;
    for (size_t r = 0; r < k; ++r) mx = std::max(mx, -dist[r] / tau);
    double denom = 0.0;
    std::vector<double> w(k);
    for (size_t r = 0; r < k; ++r) {
      w[r] = std::exp(-dist[r] / tau - mx);
      denom += w[r];
    }
    for (size_t r = 0; r < k; ++r) {
      for (size_t c = 0; c < d; ++c) {
        out[p * d + c] += (w[r] / denom) * codebook[r * d + c];
      }
    }
  }
  return out;
}

size_t oracle_nearest(const std::vector<double>& states,
                      const std::vector<double>& codebook, size_t p, size_t k,
                      size_t d) {
  size_t best = 0;
  double best_dist = 1e300;
  for (size_t r = 0; r < k; ++r) {
    double dist = 0.0;
    for (size_t c = 0; c < d; ++c) {
      double delta = states[p * d + c] - codebook[r * d + c];
      dist += delta * delta;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = r;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("quantize") {
  TEST_CASE("single-row codebook replaces every position with that row") {
    Rng rng(30);
    Tensor states = Tensor::randn({1, 2, 2, 2, 3}, rng);
    Tensor codebook = Tensor::from_data({1, 3}, {0.5, -1.0, 2.0});
    Tensor out = soft_quantize(states, codebook, {1.0});
    CHECK(out.shape() == states.shape());
    auto v = out.to_vector();
    for (size_t p = 0; p < 8; ++p) {
      CHECK(v[p * 3 + 0] == 0.5);
      CHECK(v[p * 3 + 1] == -1.0);
      CHECK(v[p * 3 + 2] == 2.0);
    }
  }

  TEST_CASE("matches the brute-force oracle at moderate temperature") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      Tensor states = Tensor::randn({1, 2, 2, 2, 4}, rng);
      Tensor codebook = Tensor::randn({6, 4}, rng);
      for (double tau : {1.0, 0.37, 3.0}) {
        Tensor out = soft_quantize(states, codebook, {tau});
        auto expect = oracle_quantize(states.to_vector(), codebook.to_vector(),
                                      8, 6, 4, tau);
        auto got = out.to_vector();
        for (size_t i = 0; i < got.size(); ++i) {
          CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));
        }
      }
    }
  }

  TEST_CASE("tiny temperature reproduces the hard nearest neighbor") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      Tensor states = Tensor::randn({1, 1, 2, 2, 4}, rng);
      Tensor codebook = Tensor::randn({16, 4}, rng);
      Tensor out = soft_quantize(states, codebook, {1e-6});
      auto sv = states.to_vector();
      auto cv = codebook.to_vector();
      auto ov = out.to_vector();
      for (size_t p = 0; p < 4; ++p) {
        size_t nn = oracle_nearest(sv, cv, p, 16, 4);
        for (size_t c = 0; c < 4; ++c) {
          CHECK(std::abs(ov[p * 4 + c] - cv[nn * 4 + c]) < 1e-6);
        }
      }
    }
  }

  TEST_CASE("huge temperature gives the codebook mean") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed + 100);
      Tensor states = Tensor::randn({1, 1, 2, 2, 4}, rng);
      Tensor codebook = Tensor::randn({16, 4}, rng);
      Tensor out = soft_quantize(states, codebook, {1e9});
      auto cv = codebook.to_vector();
      double mean[4] = {0, 0, 0, 0};
      for (size_t r = 0; r < 16; ++r) {
        for (size_t c = 0; c < 4; ++c) mean[c] += cv[r * 4 + c] / 16.0;
      }
      auto ov = out.to_vector();
      for (size_t p = 0; p < 4; ++p) {
        for (size_t c = 0; c < 4; ++c) {
          CHECK(std::abs(ov[p * 4 + c] - mean[c]) < 1e-6);
        }
      }
    }
  }

  TEST_CASE("outputs stay inside the per-coordinate codebook hull") {
    Rng rng(31);
    Tensor states = Tensor::randn({2, 2, 2, 2, 4}, rng, 3.0);
    Tensor codebook = Tensor::randn({5, 4}, rng);
    Tensor out = soft_quantize(states, codebook, {1.0});
    auto cv = codebook.to_vector();
    auto ov = out.to_vector();
    for (size_t c = 0; c < 4; ++c) {
      double lo = 1e300, hi = -1e300;
      for (size_t r = 0; r < 5; ++r) {
        lo = std::min(lo, cv[r * 4 + c]);
        hi = std::max(hi, cv[r * 4 + c]);
      }
      for (size_t p = 0; p < 16; ++p) {
        CHECK(ov[p * 4 + c] >= lo - 1e-12);
        CHECK(ov[p * 4 + c] <= hi + 1e-12);
      }
    }
  }

  TEST_CASE("output is invariant under codebook row permutation") {
    Rng rng(32);
    Tensor states = Tensor::randn({1, 2, 2, 1, 3}, rng);
    Tensor codebook = Tensor::randn({4, 3}, rng);
    auto cv = codebook.to_vector();
    std::vector<double> shuffled(cv.size());
    size_t order[4] = {2, 0, 3, 1};
    for (size_t r = 0; r < 4; ++r) {
      for (size_t c = 0; c < 3; ++c) shuffled[r * 3 + c] = cv[order[r] * 3 + c];
    }
    auto a = soft_quantize(states, codebook, {0.7}).to_vector();
    auto b =
        soft_quantize(states, Tensor::from_data({4, 3}, shuffled), {0.7})
            .to_vector();
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("decreasing tau never decreases the peak weight") {
    Rng rng(33);
    Tensor states = Tensor::randn({1, 1, 2, 2, 4}, rng);
    Tensor codebook = Tensor::randn({6, 4}, rng);
    std::vector<double> prev_peak(4, 0.0);
    bool first = true;
    for (double tau : {4.0, 2.0, 1.0, 0.5, 0.25}) {
      Tensor weights;
      soft_quantize(states, codebook, {tau}, &weights);
      CHECK(weights.shape() == Shape{4, 6});
      for (size_t p = 0; p < 4; ++p) {
        double peak = 0.0;
        for (size_t r = 0; r < 6; ++r) {
          peak = std::max(peak, weights.value_at(p * 6 + r));
        }
        if (!first) CHECK(peak >= prev_peak[p] - 1e-12);
        prev_peak[p] = peak;
      }
      first = false;
    }
  }

  TEST_CASE("gradients pass finite differences for states and codebook") {
    Rng rng(34);
    Tensor states = Tensor::randn({1, 1, 2, 2, 3}, rng).with_requires_grad();
    Tensor codebook = Tensor::randn({4, 3}, rng).with_requires_grad();
    Tensor probe = Tensor::randn({1, 1, 2, 2, 3}, rng);
    for (double tau : {1.0, 0.5}) {
      double err = finite_diff_check(
          [tau, probe](const std::vector<Tensor>& in) {
            return sum_all(mul(soft_quantize(in[0], in[1], {tau}), probe));
          },
          {states, codebook}, 1e-4);
      CHECK(err < 1e-4);
    }
  }

  TEST_CASE("invalid arguments are rejected") {
    Tensor states = Tensor::ones({1, 1, 2, 2, 3});
    Tensor codebook = Tensor::ones({4, 3});
    try {
      soft_quantize(states, codebook, {0.0});
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NonPositiveTemperature);
    }
    try {
      soft_quantize(states, Tensor::ones({4, 5}), {1.0});
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimMismatch);
    }
    CHECK_THROWS_AS(soft_quantize(Tensor::ones({2, 3}), codebook, {1.0}),
                    Error);
  }
}
