#include <cmath>
#include <random>

#include "bsup/errors.hpp"
#include "bsup/models.hpp"

namespace bsup {

std::size_t scaled_width(std::size_t base, double width_scale) {
  if (!(width_scale > 0.0) || !std::isfinite(width_scale))
    throw ConfigError("width_scale must be a positive number");
  const double w = static_cast<double>(base) * width_scale;
  const double r = std::round(w);
  if (std::abs(w - r) > 1e-9 || r < 1.0)
    throw ConfigError("width_scale " + std::to_string(width_scale) + " gives a non-integer filter count for base " +
                      std::to_string(base) + " (" + std::to_string(w) + ")");
  return static_cast<std::size_t>(r);
}

double parse_width_scale(const std::string& text) {
  try {
    std::size_t pos = 0;
    const auto slash = text.find('/');
    double v;
    if (slash == std::string::npos) {
      v = std::stod(text, &pos);
      if (pos != text.size()) throw ConfigError("");
    } else {
      const std::string num = text.substr(0, slash);
      const std::string den = text.substr(slash + 1);
      const double a = std::stod(num, &pos);
      if (pos != num.size()) throw ConfigError("");
      const double b = std::stod(den, &pos);
      if (pos != den.size() || b == 0.0) throw ConfigError("");
      v = a / b;
    }
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid width scale '" + text + "' (expected e.g. 0.25 or 1/4)");
  }
}

namespace {

enum class Init { he, glorot };

class Builder {
 public:
  Builder(ModelKind kind, double width_scale, std::uint64_t seed) : rng_(seed) {
    g_.kind = kind;
    g_.width_scale = width_scale;
  }

  std::size_t width(std::size_t base) const { return scaled_width(base, g_.width_scale); }

  void conv(const std::string& name, std::size_t filters, Init init, double l1 = 0.0) {
    LayerSpec l;
    l.type = LayerType::conv;
    l.in_channels = channels_;
    l.filters = filters;
    add_conv_params(l, name, channels_, filters, init, l1);
    g_.layers.push_back(std::move(l));
    channels_ = filters;
  }

  void block(const std::string& name) {
    LayerSpec l;
    l.type = LayerType::residual_block;
    l.in_channels = channels_;
    l.filters = channels_;
    l.block_scale = kResidualScale;
    add_conv_params(l, name + ".conv1", channels_, channels_, Init::he, 0.0);
    add_conv_params(l, name + ".conv2", channels_, channels_, Init::glorot, 0.0);
    g_.layers.push_back(std::move(l));
  }

  void op(LayerType t) {
    LayerSpec l;
    l.type = t;
    g_.layers.push_back(std::move(l));
  }

  NetworkGraph finish() { return std::move(g_); }
  NetworkGraph& graph() { return g_; }

 private:
  void add_conv_params(LayerSpec& l, const std::string& name, std::size_t cin, std::size_t cout, Init init, double l1) {
    const std::size_t k = l.kernel;
    const double fan_in = static_cast<double>(cin * k * k);
    const double fan_out = static_cast<double>(cout * k * k);
    const double limit = init == Init::he ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(cout * cin * k * k);
    for (double& v : w) v = dist(rng_);
    l.params.push_back(g_.params.size());
    g_.params.push_back({name + ".weight", Tensor(Shape{cout, cin, k, k}, std::move(w), true), l1});
    l.params.push_back(g_.params.size());
    g_.params.push_back({name + ".bias", Tensor::zeros(Shape{1, 1, 1, cout}, true), 0.0});
  }

  NetworkGraph g_;
  std::mt19937_64 rng_;
  std::size_t channels_ = 1;
};

}  // namespace

NetworkGraph build_ae_bs(double width_scale, std::uint64_t seed) {
  Builder b(ModelKind::ae_bs, width_scale, seed);
  const std::size_t w16 = b.width(16), w32 = b.width(32), w64 = b.width(64);
  b.conv("conv1", w16, Init::he);
  b.op(LayerType::relu);
  b.op(LayerType::downsample);
  b.conv("conv2", w32, Init::he);
  b.op(LayerType::relu);
  b.op(LayerType::downsample);
  b.conv("conv3", w64, Init::he);
  b.op(LayerType::relu);
  b.conv("conv4", w64, Init::he);
  b.op(LayerType::relu);
  b.op(LayerType::upsample);
  b.conv("conv5", w32, Init::he);
  b.op(LayerType::relu);
  b.op(LayerType::upsample);
  b.conv("conv6", w16, Init::he);
  b.op(LayerType::relu);
  b.conv("conv7", 1, Init::glorot);
  b.op(LayerType::sigmoid);
  return b.finish();
}

NetworkGraph build_convnet_bs(double width_scale, std::uint64_t seed, double l1_coeff) {
  if (!(l1_coeff >= 0.0)) throw ConfigError("l1 coefficient must be non-negative");
  Builder b(ModelKind::convnet_bs, width_scale, seed);
  std::vector<std::size_t> widths;
  for (std::size_t base : {16, 32, 64, 128, 256, 512}) widths.push_back(b.width(base));
  std::size_t i = 1;
  for (std::size_t w : widths) {
    b.conv("conv" + std::to_string(i++), w, Init::he, l1_coeff);
    b.op(LayerType::relu);
  }
  b.conv("conv" + std::to_string(i), 1, Init::glorot, l1_coeff);
  b.op(LayerType::sigmoid);
  return b.finish();
}

NetworkGraph build_rl_bs(double width_scale, std::uint64_t seed, RlMode mode) {
  Builder b(ModelKind::rl_bs, width_scale, seed);
  b.graph().rl_mode = mode;
  std::vector<std::size_t> widths;
  for (std::size_t base : {8, 16, 32, 64, 128, 256, 512}) widths.push_back(b.width(base));
  std::size_t i = 1;
  for (std::size_t w : widths) {
    b.conv("conv" + std::to_string(i++), w, Init::he);
    b.op(LayerType::relu);
  }
  b.conv("conv" + std::to_string(i), 1, Init::glorot);
  b.op(mode == RlMode::residual ? LayerType::subtract_from_input : LayerType::sigmoid);
  return b.finish();
}

NetworkGraph build_resnet_bs(std::size_t num_blocks, double width_scale, std::uint64_t seed) {
  if (num_blocks == 0) throw ConfigError("ResNet-BS needs at least one residual block");
  Builder b(ModelKind::resnet_bs, width_scale, seed);
  b.graph().num_blocks = num_blocks;
  b.conv("head", b.width(64), Init::glorot);
  for (std::size_t i = 1; i <= num_blocks; ++i) b.block("block" + std::to_string(i));
  b.conv("tail", 1, Init::glorot);
  b.op(LayerType::sigmoid);
  return b.finish();
}

NetworkGraph build_model(const ModelSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::ae_bs: return build_ae_bs(spec.width_scale, seed);
    case ModelKind::convnet_bs: return build_convnet_bs(spec.width_scale, seed, spec.l1_coeff);
    case ModelKind::rl_bs: return build_rl_bs(spec.width_scale, seed, spec.rl_mode);
    case ModelKind::resnet_bs: return build_resnet_bs(spec.num_blocks, spec.width_scale, seed);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace bsup
