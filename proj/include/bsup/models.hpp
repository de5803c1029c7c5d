#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bsup/checkpoint.hpp"
#include "bsup/datapipe.hpp"
#include "bsup/metrics.hpp"
#include "bsup/ops.hpp"
#include "bsup/optimizer.hpp"

namespace bsup {

// ---------------------------------------------------------------------------
// Differentiable losses over (N, 1, H, W) batches. `target` is treated as
// constant. Values are batch means of the per-image quantity.

Tensor mae_loss(const Tensor& pred, const Tensor& target);
Tensor mse_loss(const Tensor& pred, const Tensor& target);
/// 1 - MS-SSIM per image, averaged over the batch.
Tensor ms_ssim_loss(const Tensor& pred, const Tensor& target, const MsSsimOptions& options = {});
/// omega * ms_ssim_loss + (1 - omega) * mae_loss. A term whose weight is zero
/// is not evaluated, so omega = 0 works on images smaller than the SSIM window.
Tensor combined_loss(const Tensor& pred, const Tensor& target, double omega = kDefaultOmega,
                     const MsSsimOptions& options = {});

enum class LossKind { combined, mae, mse };
const char* to_string(LossKind k);
LossKind parse_loss_kind(const std::string& name);

Tensor compute_loss(LossKind kind, const Tensor& pred, const Tensor& target, double omega = kDefaultOmega);

// ---------------------------------------------------------------------------
// Networks

enum class ModelKind : std::uint8_t { ae_bs = 1, convnet_bs = 2, rl_bs = 3, resnet_bs = 4 };
const char* to_string(ModelKind k);
/// Accepts ae, convnet, rl, resnet (and the *_bs / *-bs spellings).
ModelKind parse_model_kind(const std::string& name);

enum class RlMode { residual, direct };
const char* to_string(RlMode m);
RlMode parse_rl_mode(const std::string& name);

enum class LayerType { conv, relu, sigmoid, downsample, upsample, residual_block, subtract_from_input };
const char* to_string(LayerType t);

struct LayerSpec {
  LayerType type = LayerType::conv;
  std::size_t in_channels = 0;   // conv / residual_block
  std::size_t filters = 0;       // conv / residual_block
  std::size_t kernel = 3;
  double block_scale = 0.0;      // residual_block
  std::vector<std::size_t> params;  // indices into NetworkGraph::params
};

struct NetworkGraph {
  ModelKind kind = ModelKind::resnet_bs;
  std::vector<LayerSpec> layers;
  std::vector<Parameter> params;
  double width_scale = 1.0;
  std::size_t num_blocks = 0;  // ResNet-BS only
  RlMode rl_mode = RlMode::residual;

  /// (N, 1, H, W) -> (N, 1, H, W). Throws ShapeError for incompatible input.
  Tensor forward(const Tensor& input) const;
  std::uint16_t model_tag() const;
  std::size_t parameter_count() const;
};

/// Output filters of every convolution in forward order (block convs included).
std::vector<std::size_t> filter_sequence(const NetworkGraph& g);

struct StructureReport {
  bool valid = true;
  std::vector<std::string> problems;
};

/// Checks the layer sequence against the canonical layout for the graph's
/// kind, width scale and block count, channel chaining, parameter shapes, and
/// that every parameter is used exactly once.
StructureReport validate_structure(const NetworkGraph& g);

/// Scaled filter count; throws ConfigError unless base * scale is a positive integer.
std::size_t scaled_width(std::size_t base, double width_scale);
/// Parses "0.25" or "1/4".
double parse_width_scale(const std::string& text);

inline constexpr double kDefaultL1 = 1e-5;
inline constexpr double kResidualScale = 0.1;

NetworkGraph build_ae_bs(double width_scale = 1.0, std::uint64_t seed = 0);
NetworkGraph build_convnet_bs(double width_scale = 1.0, std::uint64_t seed = 0, double l1_coeff = kDefaultL1);
NetworkGraph build_rl_bs(double width_scale = 1.0, std::uint64_t seed = 0, RlMode mode = RlMode::residual);
NetworkGraph build_resnet_bs(std::size_t num_blocks = 16, double width_scale = 1.0, std::uint64_t seed = 0);

struct ModelSpec {
  ModelKind kind = ModelKind::resnet_bs;
  double width_scale = 0.25;
  std::size_t num_blocks = 4;
  RlMode rl_mode = RlMode::residual;
  double l1_coeff = kDefaultL1;
};

NetworkGraph build_model(const ModelSpec& spec, std::uint64_t seed);

Checkpoint to_checkpoint(const NetworkGraph& g);
/// Rebuilds the architecture recorded in the checkpoint and loads its weights.
/// Throws FormatError when ids or shapes do not form a known architecture.
NetworkGraph network_from_checkpoint(const Checkpoint& ckpt);

// ---------------------------------------------------------------------------
// Training and inference

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  OptimizerSettings optimizer;
  double validation_fraction = 0.10;
  LossKind loss = LossKind::combined;
  double omega = kDefaultOmega;
  std::filesystem::path checkpoint_path;  // empty: keep in memory only
  /// Called after every epoch with (epoch, train loss, validation loss).
  std::function<void(std::size_t, double, double)> on_epoch;

  void validate() const;
};

struct ValidationSummary {
  double mae = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
  std::optional<double> ssim;
  std::optional<double> ms_ssim;
  double input_psnr = 0.0;  // unsuppressed source vs target, for reference
};

struct TrainReport {
  std::vector<double> train_loss;    // per epoch, excluding the L1 penalty
  std::vector<double> val_loss;      // per epoch
  double initial_val_loss = 0.0;     // before the first update
  std::vector<double> best_val_loss; // running minimum, per epoch
  std::size_t best_epoch = 0;        // 1-based; 0 means the initial weights
  ValidationSummary final_metrics;   // of the retained checkpoint
  std::size_t train_pairs = 0;
  std::size_t val_pairs = 0;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Trains `model` in place; on return it holds the best-validation weights.
TrainReport train(NetworkGraph& model, const std::vector<ImagePair>& dataset, const TrainConfig& config);

/// Packs equally sized images into an (N, 1, H, W) tensor.
Tensor stack_images(const std::vector<const GrayImage*>& images);

GrayImage suppress(const NetworkGraph& model, const GrayImage& image);
GrayImage suppress(const Checkpoint& ckpt, const GrayImage& image);

}  // namespace bsup
