#include <algorithm>
#include <cstdio>
#include <map>
#include <cctype>
#include <cmath>

#include "bsup/errors.hpp"
#include "bsup/models.hpp"

namespace bsup {

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::ae_bs: return "ae";
    case ModelKind::convnet_bs: return "convnet";
    case ModelKind::rl_bs: return "rl";
    case ModelKind::resnet_bs: return "resnet";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const char* suffix : {"_bs", "-bs"})
    if (n.size() > 3 && n.compare(n.size() - 3, 3, suffix) == 0) n.resize(n.size() - 3);
  if (n == "ae") return ModelKind::ae_bs;
  if (n == "convnet") return ModelKind::convnet_bs;
  if (n == "rl") return ModelKind::rl_bs;
  if (n == "resnet") return ModelKind::resnet_bs;
  throw UsageError("unknown model '" + name + "' (expected ae, convnet, rl or resnet)");
}

const char* to_string(RlMode m) { return m == RlMode::residual ? "residual" : "direct"; }

RlMode parse_rl_mode(const std::string& name) {
  if (name == "residual") return RlMode::residual;
  if (name == "direct") return RlMode::direct;
  throw ConfigError("unknown rl mode '" + name + "' (expected residual or direct)");
}

const char* to_string(LayerType t) {
  switch (t) {
    case LayerType::conv: return "conv";
    case LayerType::relu: return "relu";
    case LayerType::sigmoid: return "sigmoid";
    case LayerType::downsample: return "downsample";
    case LayerType::upsample: return "upsample";
    case LayerType::residual_block: return "residual_block";
    case LayerType::subtract_from_input: return "subtract_from_input";
  }
  return "?";
}

Tensor NetworkGraph::forward(const Tensor& input) const {
  const Shape& s = input.shape();
  if (s.c != 1) throw ShapeError("networks take single-channel input, got " + s.str());
  if (kind == ModelKind::ae_bs && (s.h % 4 != 0 || s.w % 4 != 0))
    throw ShapeError("AE-BS requires height and width divisible by 4, got " + std::to_string(s.h) + "x" +
                     std::to_string(s.w));
  Tensor x = input;
  for (const LayerSpec& l : layers) {
    switch (l.type) {
      case LayerType::conv:
        x = conv2d(x, params[l.params[0]].tensor, params[l.params[1]].tensor);
        break;
      case LayerType::relu: x = relu(x); break;
      case LayerType::sigmoid: x = sigmoid(x); break;
      case LayerType::downsample: x = downsample2(x); break;
      case LayerType::upsample: x = upsample2(x); break;
      case LayerType::residual_block: {
        Tensor h = conv2d(x, params[l.params[0]].tensor, params[l.params[1]].tensor);
        h = relu(h);
        h = conv2d(h, params[l.params[2]].tensor, params[l.params[3]].tensor);
        x = residual_add(x, scale(h, l.block_scale));
        break;
      }
      case LayerType::subtract_from_input: x = clamp(subtract(input, x), 0.0, 1.0); break;
    }
  }
  return x;
}

std::uint16_t NetworkGraph::model_tag() const {
  const auto variant = static_cast<std::uint16_t>(kind == ModelKind::rl_bs && rl_mode == RlMode::direct ? 1 : 0);
  return static_cast<std::uint16_t>(static_cast<std::uint16_t>(kind) | (variant << 8));
}

std::size_t NetworkGraph::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

std::vector<std::size_t> filter_sequence(const NetworkGraph& g) {
  std::vector<std::size_t> out;
  for (const auto& l : g.layers) {
    if (l.type == LayerType::conv) out.push_back(l.filters);
    if (l.type == LayerType::residual_block) {
      out.push_back(l.filters);
      out.push_back(l.filters);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Layer pattern tokens: C<base> conv with base filter count (0 = unscaled 1),
// R relu, S sigmoid, D downsample, U upsample, B residual block, X input minus.
std::vector<std::string> expected_pattern(const NetworkGraph& g) {
  auto convs = [](std::initializer_list<int> bases, bool relu_after) {
    std::vector<std::string> p;
    for (int b : bases) {
      p.push_back("C" + std::to_string(b));
      if (relu_after) p.push_back("R");
    }
    return p;
  };
  std::vector<std::string> p;
  switch (g.kind) {
    case ModelKind::ae_bs:
      p = {"C16", "R", "D", "C32", "R", "D", "C64", "R", "C64", "R", "U", "C32", "R", "U", "C16", "R", "C0", "S"};
      break;
    case ModelKind::convnet_bs:
      p = convs({16, 32, 64, 128, 256, 512}, true);
      p.insert(p.end(), {"C0", "S"});
      break;
    case ModelKind::rl_bs:
      p = convs({8, 16, 32, 64, 128, 256, 512}, true);
      p.push_back("C0");
      p.push_back(g.rl_mode == RlMode::residual ? "X" : "S");
      break;
    case ModelKind::resnet_bs:
      p = {"C64"};
      for (std::size_t b = 0; b < g.num_blocks; ++b) p.push_back("B64");
      p.insert(p.end(), {"C0", "S"});
      break;
  }
  return p;
}

std::string token(const LayerSpec& l, double width_scale) {
  auto base = [&](std::size_t filters) {
    const double b = static_cast<double>(filters) / width_scale;
    const long r = std::lround(b);
    return std::abs(b - static_cast<double>(r)) < 1e-9 ? std::to_string(r) : "?";
  };
  switch (l.type) {
    case LayerType::conv: return "C" + base(l.filters);
    case LayerType::relu: return "R";
    case LayerType::sigmoid: return "S";
    case LayerType::downsample: return "D";
    case LayerType::upsample: return "U";
    case LayerType::residual_block: return "B" + base(l.filters);
    case LayerType::subtract_from_input: return "X";
  }
  return "?";
}

}  // namespace

StructureReport validate_structure(const NetworkGraph& g) {
  StructureReport rep;
  auto fail = [&](std::string msg) {
    rep.valid = false;
    rep.problems.push_back(std::move(msg));
  };
  if (!(g.width_scale > 0.0)) fail("width_scale must be positive");
  if (g.kind == ModelKind::resnet_bs && g.num_blocks == 0) fail("ResNet-BS needs at least one block");

  const auto expected = expected_pattern(g);
  if (expected.size() != g.layers.size()) {
    fail("expected " + std::to_string(expected.size()) + " layers, found " + std::to_string(g.layers.size()));
  } else {
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const LayerSpec& l = g.layers[i];
      std::string got = token(l, g.width_scale);
      if (expected[i] == "C0") got = l.type == LayerType::conv && l.filters == 1 ? "C0" : got;
      if (got != expected[i]) fail("layer " + std::to_string(i) + ": expected " + expected[i] + ", found " + got);
      if (l.type == LayerType::residual_block && l.block_scale != kResidualScale)
        fail("layer " + std::to_string(i) + ": residual scale " + std::to_string(l.block_scale));
    }
  }

  // Channel chaining and parameter shapes.
  std::size_t channels = 1;
  std::vector<int> uses(g.params.size(), 0);
  auto check_param = [&](std::size_t idx, Shape want, const std::string& where) {
    if (idx >= g.params.size()) {
      fail(where + ": parameter index out of range");
      return;
    }
    ++uses[idx];
    if (!(g.params[idx].tensor.shape() == want))
      fail(where + ": parameter " + g.params[idx].id + " has shape " + g.params[idx].tensor.shape().str() +
           ", expected " + want.str());
  };
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const LayerSpec& l = g.layers[i];
    const std::string where = "layer " + std::to_string(i);
    if (l.type == LayerType::conv || l.type == LayerType::residual_block) {
      if (l.in_channels != channels) fail(where + ": takes " + std::to_string(l.in_channels) + " channels, receives " +
                                          std::to_string(channels));
      const std::size_t convs = l.type == LayerType::conv ? 1 : 2;
      if (l.params.size() != 2 * convs) {
        fail(where + ": wrong parameter count");
        continue;
      }
      std::size_t cin = l.in_channels;
      for (std::size_t c = 0; c < convs; ++c) {
        check_param(l.params[2 * c], Shape{l.filters, cin, l.kernel, l.kernel}, where);
        check_param(l.params[2 * c + 1], Shape{1, 1, 1, l.filters}, where);
        cin = l.filters;
      }
      if (l.type == LayerType::residual_block && l.filters != l.in_channels)
        fail(where + ": residual block must preserve channel count");
      channels = l.filters;
    } else if (!l.params.empty()) {
      fail(where + ": " + to_string(l.type) + " layer carries parameters");
    }
  }
  if (channels != 1) fail("network ends with " + std::to_string(channels) + " channels, expected 1");
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < g.params.size(); ++i) {
    if (uses[i] != 1) fail("parameter " + g.params[i].id + " referenced " + std::to_string(uses[i]) + " times");
    if (++ids[g.params[i].id] > 1) fail("duplicate parameter id " + g.params[i].id);
    if (g.params[i].l1_coeff < 0.0) fail("parameter " + g.params[i].id + " has a negative L1 weight");
  }
  return rep;
}

// ---------------------------------------------------------------------------

Checkpoint to_checkpoint(const NetworkGraph& g) { return make_checkpoint(g.model_tag(), g.params); }

NetworkGraph network_from_checkpoint(const Checkpoint& ckpt) {
  const auto kind_byte = static_cast<std::uint8_t>(ckpt.model_tag & 0xff);
  const auto variant = static_cast<std::uint8_t>(ckpt.model_tag >> 8);
  if (kind_byte < 1 || kind_byte > 4) throw FormatError("checkpoint has unknown model tag " + std::to_string(ckpt.model_tag));
  const auto kind = static_cast<ModelKind>(kind_byte);
  if (variant > 1 || (variant == 1 && kind != ModelKind::rl_bs))
    throw FormatError("checkpoint has unknown model variant " + std::to_string(variant));

  auto find = [&](const std::string& id) -> const StoredTensor* {
    for (const auto& t : ckpt.tensors)
      if (t.id == id) return &t;
    return nullptr;
  };
  const char* first_id = kind == ModelKind::resnet_bs ? "head.weight" : "conv1.weight";
  const StoredTensor* first = find(first_id);
  if (!first) throw FormatError(std::string("checkpoint lacks ") + first_id);
  const double base = kind == ModelKind::resnet_bs ? 64.0 : kind == ModelKind::rl_bs ? 8.0 : 16.0;
  const double width_scale = static_cast<double>(first->shape.n) / base;

  ModelSpec spec;
  spec.kind = kind;
  spec.width_scale = width_scale;
  spec.rl_mode = variant == 1 ? RlMode::direct : RlMode::residual;
  spec.num_blocks = 0;
  if (kind == ModelKind::resnet_bs) {
    while (find("block" + std::to_string(spec.num_blocks + 1) + ".conv1.weight")) ++spec.num_blocks;
    if (spec.num_blocks == 0) throw FormatError("ResNet-BS checkpoint has no residual blocks");
  }
  NetworkGraph g;
  try {
    g = build_model(spec, 0);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint does not describe a valid network: ") + e.what());
  }
  if (g.params.size() != ckpt.tensors.size())
    throw FormatError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, architecture needs " +
                      std::to_string(g.params.size()));
  for (std::size_t i = 0; i < g.params.size(); ++i) {
    const StoredTensor& t = ckpt.tensors[i];
    Parameter& p = g.params[i];
    if (t.id != p.id || !(t.shape == p.tensor.shape()))
      throw FormatError("checkpoint tensor " + std::to_string(i) + " ('" + t.id + "' " + t.shape.str() +
                        ") does not match expected '" + p.id + "' " + p.tensor.shape().str());
    auto dst = p.tensor.mutable_data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<double>(t.values[k]);
    require_finite(p.tensor, "checkpoint load");
  }
  return g;
}

}  // namespace bsup
