#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../oracles/metrics_oracle.hpp"
#include "bsup/errors.hpp"
#include "bsup/gradient_check.hpp"
#include "bsup/metrics.hpp"
#include "bsup/models.hpp"
#include "helpers.hpp"

using namespace bsup;
using testing_helpers::random_image;

namespace {

metrics_oracle::Img as_oracle(const GrayImage& g) { return {g.width, g.height, g.pixels}; }

GrayImage noisy_copy(const GrayImage& img, double eps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  GrayImage out = img;
  for (double& v : out.pixels) v = std::clamp(v + eps * nd(rng), 0.0, 1.0);
  return out;
}

// Smooth test image with local structure (random pixels have almost none).
GrayImage smooth_image(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 1.0 + 4.0 * u(rng), fy = 1.0 + 4.0 * u(rng), ph = 6.0 * u(rng);
  GrayImage g(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      g.at(x, y) = 0.5 + 0.4 * std::sin(fx * x / double(n) * 6.28 + ph) * std::cos(fy * y / double(n) * 6.28);
  return g;
}

}  // namespace

TEST_CASE("mae / mse hand values and identity") {
  const std::vector<double> a = {0, 0.5, 1}, b = {0.5, 0.5, 0.5};
  const ImageView va{3, 1, a}, vb{3, 1, b};
  CHECK(mae(va, vb) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(mse(va, vb) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(mae(va, va) == 0.0);
  CHECK(mse(va, va) == 0.0);
  const std::vector<double> c = {0, 0};
  CHECK_THROWS_AS(mae(va, ImageView{2, 1, c}), ShapeError);
}

TEST_CASE("psnr formula values") {
  const std::vector<double> z(4, 0.0), p1(4, 0.1), one(4, 1.0);
  CHECK(psnr({2, 2, z}, {2, 2, p1}) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr({2, 2, z}, {2, 2, one}) == 0.0);
  CHECK(std::isinf(psnr({2, 2, z}, {2, 2, z})));
}

TEST_CASE("mae / mse / psnr match double-loop oracles exactly on 16x16") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = random_image(16, 16, 2 * s), b = random_image(16, 16, 2 * s + 1);
    CHECK(mae(a.view(), b.view()) == metrics_oracle::mae(as_oracle(a), as_oracle(b)));
    CHECK(mse(a.view(), b.view()) == metrics_oracle::mse(as_oracle(a), as_oracle(b)));
    CHECK(psnr(a.view(), b.view()) == metrics_oracle::psnr(as_oracle(a), as_oracle(b)));
  }
}

TEST_CASE("ssim: identity, constant images, size error") {
  const auto a = random_image(20, 20, 5);
  CHECK(ssim(a.view(), a.view()) == doctest::Approx(1.0).epsilon(1e-12));
  const GrayImage zero(16, 16, 0.0), one(16, 16, 1.0);
  CHECK(ssim(zero.view(), one.view()) == doctest::Approx(1e-4 / (1.0 + 1e-4)).epsilon(1e-9));
  const GrayImage small(10, 10);
  CHECK_THROWS_AS(ssim(small.view(), small.view()), ShapeError);
}

TEST_CASE("ssim matches the per-window oracle on random 32x32 pairs") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto a = random_image(32, 32, 100 + s);
    const auto b = noisy_copy(a, 0.1, 200 + s);
    CHECK(std::abs(ssim(a.view(), b.view()) - metrics_oracle::ssim(as_oracle(a), as_oracle(b))) < 1e-9);
  }
}

TEST_CASE("ms_ssim matches the oracle, reduces scales, and is symmetric") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = smooth_image(48, s);
    const auto b = noisy_copy(a, 0.05, 50 + s);
    const double v = ms_ssim(a.view(), b.view());
    CHECK(std::abs(v - metrics_oracle::ms_ssim(as_oracle(a), as_oracle(b))) < 1e-9);
    CHECK(v == doctest::Approx(ms_ssim(b.view(), a.view())).epsilon(1e-12));
    CHECK(ssim(a.view(), b.view()) == doctest::Approx(ssim(b.view(), a.view())).epsilon(1e-12));
  }
  const auto a = random_image(64, 64, 1);
  const auto r = ms_ssim_detail(a.view(), a.view());
  CHECK(r.scales_used == 3);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  const GrayImage tiny(8, 8);
  CHECK_THROWS_AS(ms_ssim(tiny.view(), tiny.view()), ShapeError);
}

TEST_CASE("ms_ssim decreases as noise grows") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = smooth_image(64, 10 + s);
    double prev = 1.0;
    for (double eps : {0.01, 0.05, 0.1}) {
      const double v = ms_ssim(x.view(), noisy_copy(x, eps, 77 + s).view());
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("combined loss: table identities, identity input, omega range") {
  struct Row {
    double combined, mae, ms_loss, ms_ssim;
  };
  const Row rows[] = {{0.0251, 0.0212, 0.0258, 0.9742},
                      {0.0217, 0.0198, 0.0221, 0.9779},
                      {0.0211, 0.0219, 0.021, 0.979},
                      {0.0167, 0.014, 0.0172, 0.9828}};
  for (const Row& r : rows) {
    CHECK(std::abs(combine_loss_terms(r.ms_loss, r.mae) - r.combined) < 5e-4);
    CHECK(std::abs((1.0 - r.ms_ssim) - r.ms_loss) < 5e-5);
  }
  CHECK(std::abs(combine_loss_terms(1.0 - 0.9828, 0.0140) - 0.0167) < 5e-4);
  CHECK(std::abs(combine_loss_terms(1.0 - 0.9742, 0.0212) - 0.0251) < 5e-4);

  const auto a = random_image(32, 32, 3);
  CHECK(combined_loss(a.view(), a.view()) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(combined_loss(a.view(), a.view(), 1.5), RangeError);
}

TEST_CASE("image metrics report invariants") {
  const auto a = smooth_image(40, 4);
  const auto b = noisy_copy(a, 0.05, 9);
  const auto r = compute_image_metrics(a.view(), b.view());
  REQUIRE(r.ms_ssim);
  CHECK(std::abs(*r.ms_ssim_loss - (1.0 - *r.ms_ssim)) < 1e-12);
  CHECK(std::abs(*r.combined_loss - (0.84 * *r.ms_ssim_loss + 0.16 * r.mae)) < 1e-12);
  const auto self = compute_image_metrics(a.view(), a.view());
  CHECK(self.mae == 0.0);
  CHECK(std::isinf(self.psnr));
  CHECK(*self.ssim == doctest::Approx(1.0));
  CHECK(metrics_csv_header() == "mae,mse,psnr,ssim,ms_ssim,ms_ssim_loss,combined_loss");
  const auto small = compute_image_metrics(random_image(8, 8, 1).view(), random_image(8, 8, 2).view());
  CHECK_FALSE(small.ssim.has_value());
}

TEST_CASE("combined loss gradient matches central differences") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto t = smooth_image(24, 30 + s);
    const auto p = noisy_copy(t, 0.08, 40 + s);
    std::vector<Parameter> ps = {{"pred", Tensor(Shape{1, 1, 24, 24}, p.pixels, true), 0.0}};
    const Tensor target(Shape{1, 1, 24, 24}, t.pixels);
    GradientCheckOptions opt;
    opt.max_entries = 60;
    opt.seed = s;
    const auto r = gradient_check([&] { return combined_loss(ps[0].tensor, target); }, ps, opt);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("confusion metrics") {
  auto m = confusion_metrics({50, 50, 0, 0});
  CHECK(*m.accuracy == 1.0);
  CHECK(*m.sensitivity == 1.0);
  CHECK(*m.specificity == 1.0);
  CHECK(*m.precision == 1.0);
  CHECK(*m.f_measure == 1.0);
  CHECK(*m.mcc == 1.0);
  m = confusion_metrics({25, 25, 25, 25});
  CHECK(*m.mcc == 0.0);
  CHECK(*m.accuracy == 0.5);
  m = confusion_metrics({45, 40, 10, 5});
  CHECK(*m.mcc == doctest::Approx(0.7035).epsilon(1e-4));
  m = confusion_metrics({0, 10, 0, 0});
  CHECK_FALSE(m.precision.has_value());
  CHECK_FALSE(m.sensitivity.has_value());
  CHECK_FALSE(m.mcc.has_value());
  CHECK_THROWS_AS(confusion_metrics({-1, 0, 0, 0}), RangeError);
}

TEST_CASE("auc equals the all-pairs definition") {
  CHECK(auc_roc({{0.1, false}, {0.2, false}, {0.8, true}, {0.9, true}}) == 1.0);
  CHECK(auc_roc({{0.5, false}, {0.5, true}, {0.5, true}}) == 0.5);
  CHECK_THROWS_AS(auc_roc({{0.1, true}}), RangeError);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> score(0, 9);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::pair<double, bool>> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({score(rng) / 10.0, (rng() & 1) == 1});
    double wins = 0.0, pairs = 0.0;
    for (const auto& p : pts)
      for (const auto& q : pts)
        if (p.second && !q.second) {
          pairs += 1.0;
          wins += p.first > q.first ? 1.0 : (p.first == q.first ? 0.5 : 0.0);
        }
    CHECK(auc_roc(pts) == doctest::Approx(wins / pairs).epsilon(1e-14));
  }
}
