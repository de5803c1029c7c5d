#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bsup/checkpoint.hpp"
#include "bsup/errors.hpp"
#include "bsup/gradient_check.hpp"
#include "bsup/ops.hpp"
#include "bsup/optimizer.hpp"
#include "helpers.hpp"

using namespace bsup;
using testing_helpers::random_tensor;

namespace {

// Direct nested-loop same-zero-padded cross-correlation.
std::vector<double> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  std::vector<double> out(xs.n * ws.n * xs.h * xs.w, 0.0);
  const long ph = static_cast<long>(ws.h / 2);
  const long pw = static_cast<long>(ws.w / 2);
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t co = 0; co < ws.n; ++co)
      for (std::size_t y = 0; y < xs.h; ++y)
        for (std::size_t xx = 0; xx < xs.w; ++xx) {
          double acc = b.data()[co];
          for (std::size_t ci = 0; ci < xs.c; ++ci)
            for (std::size_t ky = 0; ky < ws.h; ++ky)
              for (std::size_t kx = 0; kx < ws.w; ++kx) {
                const long sy = static_cast<long>(y + ky) - ph;
                const long sx = static_cast<long>(xx + kx) - pw;
                if (sy < 0 || sx < 0 || sy >= static_cast<long>(xs.h) || sx >= static_cast<long>(xs.w)) continue;
                acc += w.at(co, ci, ky, kx) * x.at(n, ci, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
              }
          out[((n * ws.n + co) * xs.h + y) * xs.w + xx] = acc;
        }
  return out;
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("conv2d: ones kernel on ones image") {
  const Tensor x = Tensor::full(Shape{1, 1, 3, 3}, 1.0);
  const Tensor w = Tensor::full(Shape{1, 1, 3, 3}, 1.0);
  const Tensor b = Tensor::zeros(Shape{1, 1, 1, 1});
  CHECK(vec(conv2d(x, w, b).data()) == std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4});
}

TEST_CASE("conv2d: Dirac kernel is the identity; 1x1 kernel is affine") {
  const Tensor x = random_tensor(Shape{2, 1, 5, 7}, 1);
  std::vector<double> dirac(9, 0.0);
  dirac[4] = 1.0;
  const Tensor y = conv2d(x, Tensor(Shape{1, 1, 3, 3}, dirac), Tensor::zeros(Shape{1, 1, 1, 1}));
  CHECK(vec(y.data()) == vec(x.data()));

  const Tensor x2(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  const Tensor z = conv2d(x2, Tensor(Shape{1, 1, 1, 1}, {2}), Tensor(Shape{1, 1, 1, 1}, {1}));
  CHECK(vec(z.data()) == std::vector<double>{3, 5, 7, 9});
}

TEST_CASE("conv2d matches the nested-loop oracle and preserves spatial dims") {
  std::uint64_t seed = 100;
  for (std::size_t k : {1, 3, 5})
    for (std::size_t trial = 0; trial < 6; ++trial) {
      const Shape xs{1 + trial % 2, 1 + trial % 3, 3 + trial, 4 + 2 * trial};
      const Tensor x = random_tensor(xs, seed++);
      const Tensor w = random_tensor(Shape{2 + trial % 2, xs.c, k, k}, seed++);
      const Tensor b = random_tensor(Shape{1, 1, 1, w.shape().n}, seed++);
      const Tensor y = conv2d(x, w, b);
      CHECK(y.shape() == Shape{xs.n, w.shape().n, xs.h, xs.w});
      const auto ref = naive_conv(x, w, b);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d errors") {
  const Tensor x = Tensor::zeros(Shape{1, 2, 4, 4});
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros(Shape{1, 3, 3, 3}), Tensor::zeros(Shape{1, 1, 1, 1})), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros(Shape{1, 2, 2, 2}), Tensor::zeros(Shape{1, 1, 1, 1})), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros(Shape{2, 2, 3, 3}), Tensor::zeros(Shape{1, 1, 1, 1})), ShapeError);
  const Tensor bad(Shape{1, 2, 1, 1}, {1.0, NAN});
  CHECK_THROWS_AS(conv2d(bad, Tensor::zeros(Shape{1, 2, 1, 1}), Tensor::zeros(Shape{1, 1, 1, 1})), NumericError);
}

TEST_CASE("activations") {
  CHECK(vec(relu(Tensor(Shape{1, 1, 1, 3}, {-1, 0, 2})).data()) == std::vector<double>{0, 0, 2});
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(sigmoid(Tensor::scalar(std::log(3.0))).item() == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(sigmoid(Tensor::scalar(-800.0)).item() == 0.0);
  CHECK(sigmoid(Tensor::scalar(800.0)).item() == 1.0);
  CHECK_THROWS_AS(relu(Tensor::scalar(INFINITY)), NumericError);
  CHECK(activation(Tensor::scalar(-2.0), Activation::relu).item() == 0.0);
}

TEST_CASE("resampling") {
  CHECK(downsample2(Tensor(Shape{1, 1, 2, 2}, {1, 2, 3, 4})).item() == 4.0);
  CHECK(vec(upsample2(Tensor::scalar(5.0)).data()) == std::vector<double>{5, 5, 5, 5});
  const Tensor x = random_tensor(Shape{2, 3, 6, 8}, 9);
  CHECK(upsample2(downsample2(x)).shape() == x.shape());
  const Tensor c = Tensor::full(Shape{1, 2, 4, 4}, 0.37);
  const Tensor pooled = downsample2(c);
  for (double v : pooled.data()) CHECK(v == 0.37);
  CHECK_THROWS_AS(downsample2(Tensor::zeros(Shape{1, 1, 3, 4})), ShapeError);
}

TEST_CASE("residual_add and scale") {
  const Tensor x = random_tensor(Shape{1, 2, 3, 3}, 4);
  CHECK(vec(residual_add(x, Tensor::zeros(x.shape())).data()) == vec(x.data()));
  CHECK(vec(scale(x, 1.0).data()) == vec(x.data()));
  CHECK(vec(scale(Tensor(Shape{1, 1, 1, 2}, {10, -20}), 0.1).data()) == std::vector<double>{1, -2});
  CHECK_THROWS_AS(residual_add(x, Tensor::zeros(Shape{1, 1, 3, 3})), ShapeError);
}

TEST_CASE("backward: linear form and quadratic") {
  Tensor w(Shape{1, 1, 1, 3}, {0.5, -1, 2}, true);
  const Tensor x(Shape{1, 1, 1, 3}, {3, 4, 5});
  backward(sum(multiply(w, x)));
  CHECK(vec(w.grad()) == std::vector<double>{3, 4, 5});

  Tensor v(Shape{}, {1.0}, true);
  const Tensor t = Tensor::scalar(0.0);
  const Tensor d = subtract(v, t);
  backward(mean(multiply(d, d)));
  CHECK(v.grad()[0] == 2.0);
}

TEST_CASE("backward: errors and graph release") {
  Tensor w = random_tensor(Shape{1, 1, 2, 2}, 1, true);
  CHECK_THROWS_AS(backward(scale(w, 2.0)), UsageError);
  const Tensor loss = sum(scale(w, 2.0));
  backward(loss);
  CHECK_THROWS_AS(backward(loss), GraphError);
}

TEST_CASE("no-grad mode records nothing") {
  Tensor w = random_tensor(Shape{1, 1, 2, 2}, 1, true);
  NoGradGuard guard;
  const Tensor y = sum(w);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("l1 regularization") {
  std::vector<Parameter> ps = {{"a", Tensor(Shape{1, 1, 1, 2}, {-2, 2}, true), 0.5}};
  CHECK(l1_regularization(ps).item() == 2.0);
  ps[0].l1_coeff = 0.0;
  CHECK(l1_regularization(ps).item() == 0.0);

  std::vector<Parameter> many;
  double brute = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double coeff = 0.1 * (i + 1);
    many.push_back({"p" + std::to_string(i), random_tensor(Shape{1, 2, 3, 3}, 50 + i, true), coeff});
    for (double v : many.back().tensor.data()) brute += coeff * std::abs(v);
  }
  CHECK(l1_regularization(many).item() == doctest::Approx(brute).epsilon(1e-13));

  std::vector<Parameter> zero = {{"z", Tensor(Shape{1, 1, 1, 2}, {0.0, 1.0}, true), 1.0}};
  backward(l1_regularization(zero));
  CHECK(zero[0].tensor.grad()[0] == 0.0);
  CHECK(zero[0].tensor.grad()[1] == 1.0);
}

TEST_CASE("optimizer: SGD definition, null step, convergence") {
  OptimizerSettings s;
  s.kind = OptimizerKind::sgd;
  s.learning_rate = 0.1;
  std::vector<Parameter> ps = {{"w", Tensor(Shape{}, {1.0}, true), 0.0}};
  backward(scale(ps[0].tensor, 2.0));
  Optimizer(s).step(ps);
  CHECK(ps[0].tensor.item() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_FALSE(ps[0].tensor.has_grad());

  s.learning_rate = 0.0;
  Optimizer still(s);
  backward(scale(ps[0].tensor, 2.0));
  still.step(ps);
  CHECK(ps[0].tensor.item() == doctest::Approx(0.8).epsilon(1e-15));

  s.learning_rate = 0.1;
  Optimizer opt(s);
  std::vector<Parameter> q = {{"w", Tensor(Shape{}, {0.0}, true), 0.0}};
  for (int i = 0; i < 200; ++i) {
    const Tensor d = subtract(q[0].tensor, Tensor::scalar(3.0));
    backward(sum(multiply(d, d)));
    opt.step(q);
  }
  CHECK(std::abs(q[0].tensor.item() - 3.0) < 1e-6);
}

TEST_CASE("optimizer: Adam first step moves by lr against the gradient sign") {
  OptimizerSettings s;
  s.learning_rate = 0.01;
  std::vector<Parameter> ps = {{"w", Tensor(Shape{1, 1, 1, 2}, {1.0, 1.0}, true), 0.0}};
  backward(sum(multiply(ps[0].tensor, Tensor(Shape{1, 1, 1, 2}, {3.0, -0.2}))));
  Optimizer(s).step(ps);
  CHECK(ps[0].tensor.data()[0] == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(ps[0].tensor.data()[1] == doctest::Approx(1.01).epsilon(1e-6));
}

TEST_CASE("optimizer errors") {
  std::vector<Parameter> ps = {{"w", Tensor(Shape{}, {1.0}, true), 0.0}};
  CHECK_THROWS_AS(Optimizer({}).step(ps), UsageError);
  OptimizerSettings bad;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("gradient check: linear layer, sigmoid chain, vacuous, nondeterministic") {
  std::vector<Parameter> lin = {{"w", random_tensor(Shape{1, 1, 1, 4}, 3, true), 0.0}};
  const Tensor x = random_tensor(Shape{1, 1, 1, 4}, 4);
  auto r = gradient_check([&] { return sum(multiply(lin[0].tensor, x)); }, lin);
  CHECK(r.passed);
  CHECK(r.max_relative_error < 1e-7);

  std::vector<Parameter> sg = {{"w", random_tensor(Shape{1, 1, 1, 5}, 6, true), 0.0}};
  const Tensor x5 = random_tensor(Shape{1, 1, 1, 5}, 7);
  r = gradient_check([&] { return sum(sigmoid(scale(sigmoid(multiply(sg[0].tensor, x5)), 3.0))); }, sg);
  CHECK(r.max_relative_error < 1e-5);

  std::vector<Parameter> none;
  r = gradient_check([] { return Tensor::scalar(1.0); }, none);
  CHECK(r.passed);
  CHECK(r.entries_checked == 0);

  int calls = 0;
  CHECK_THROWS_AS(gradient_check([&] { return sum(scale(lin[0].tensor, 1.0 + 0.1 * ++calls)); }, lin), UsageError);

  // ReLU kink 3e-6 away: the default step straddles it, a smaller one does not.
  std::vector<Parameter> kink = {{"w", Tensor(Shape{1, 1, 1, 1}, {3e-6}, true), 0.0}};
  r = gradient_check([&] { return sum(relu(kink[0].tensor)); }, kink);
  CHECK(r.max_relative_error == doctest::Approx(0.35));
  GradientCheckOptions retry;
  retry.fallback_steps = {1e-6};
  r = gradient_check([&] { return sum(relu(kink[0].tensor)); }, kink, retry);
  CHECK(r.passed);
}

TEST_CASE("autodiff soundness for every layer type") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    std::vector<Parameter> ps = {
        {"w1", random_tensor(Shape{3, 2, 3, 3}, seed * 10 + 1, true, -0.5, 0.5), 0.0},
        {"b1", random_tensor(Shape{1, 1, 1, 3}, seed * 10 + 2, true), 0.0},
        {"w2", random_tensor(Shape{3, 3, 1, 1}, seed * 10 + 3, true), 0.0},
        {"b2", random_tensor(Shape{1, 1, 1, 3}, seed * 10 + 4, true), 0.0},
        {"w3", random_tensor(Shape{1, 3, 5, 5}, seed * 10 + 5, true, -0.3, 0.3), 0.3},
        {"b3", random_tensor(Shape{1, 1, 1, 1}, seed * 10 + 6, true), 0.0},
    };
    const Tensor x = random_tensor(Shape{2, 2, 4, 6}, seed * 10 + 7);
    const Tensor target = random_tensor(Shape{2, 1, 4, 6}, seed * 10 + 8, false, 0.0, 1.0);
    auto forward = [&] {
      Tensor h = conv2d(x, ps[0].tensor, ps[1].tensor);
      h = relu(h);
      Tensor skip = h;
      h = upsample2(downsample2(h));
      h = conv2d(h, ps[2].tensor, ps[3].tensor);
      h = residual_add(skip, scale(h, 0.1));
      h = sigmoid(conv2d(h, ps[4].tensor, ps[5].tensor));
      h = clamp(subtract(h, Tensor::full(h.shape(), 0.05)), 0.0, 1.0);
      const Tensor d = subtract(h, target);
      return residual_add(mean(multiply(d, d)), l1_regularization(ps));
    };
    const auto r = gradient_check(forward, ps);
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.entries_checked > 0);
  }
}

TEST_CASE("checkpoint: bit-exact round trip and corruption") {
  std::vector<Parameter> ps = {{"conv1.weight", random_tensor(Shape{2, 1, 3, 3}, 1, true), 0.0},
                               {"conv1.bias", random_tensor(Shape{1, 1, 1, 2}, 2, true), 0.0}};
  const Checkpoint c = make_checkpoint(0x0104, ps);
  const auto bytes = encode_checkpoint(c);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "BSUP");
  CHECK(decode_checkpoint(bytes) == c);
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(bytes.size() - 1)), FormatError);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(extra), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), FormatError);

  const auto dir = testing_helpers::scratch_dir("engine_ckpt");
  write_checkpoint(dir / "m.ckpt", c);
  CHECK(read_checkpoint(dir / "m.ckpt") == c);
  CHECK_FALSE(std::filesystem::exists(dir / "m.ckpt.tmp"));
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST_CASE("determinism: identical seeds give identical trajectories") {
  auto run = [] {
    std::vector<Parameter> ps = {{"w", random_tensor(Shape{2, 1, 3, 3}, 77, true), 0.0},
                                 {"b", Tensor::zeros(Shape{1, 1, 1, 2}, true), 0.0}};
    const Tensor x = random_tensor(Shape{2, 1, 6, 6}, 78);
    Optimizer opt({});
    for (int i = 0; i < 10; ++i) {
      backward(mean(sigmoid(conv2d(x, ps[0].tensor, ps[1].tensor))));
      opt.step(ps);
    }
    return std::vector<double>(ps[0].tensor.data().begin(), ps[0].tensor.data().end());
  };
  CHECK(run() == run());
}
