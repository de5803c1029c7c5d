#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "bsup/errors.hpp"
#include "bsup/models.hpp"

namespace bsup {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie in (0, 1)");
  if (!(omega >= 0.0 && omega <= 1.0)) throw ConfigError("omega must lie in [0, 1]");
  optimizer.validate();
}

Tensor stack_images(const std::vector<const GrayImage*>& images) {
  if (images.empty()) throw UsageError("cannot stack an empty image list");
  const std::size_t w = images.front()->width;
  const std::size_t h = images.front()->height;
  std::vector<double> data;
  data.reserve(images.size() * w * h);
  for (const GrayImage* img : images) {
    if (img->width != w || img->height != h)
      throw ShapeError("all images in a batch must share dimensions (" + std::to_string(w) + "x" + std::to_string(h) +
                       " vs " + std::to_string(img->width) + "x" + std::to_string(img->height) + ")");
    data.insert(data.end(), img->pixels.begin(), img->pixels.end());
  }
  return Tensor(Shape{images.size(), 1, h, w}, std::move(data));
}

namespace {

void check_dataset(const std::vector<ImagePair>& dataset) {
  if (dataset.empty()) throw UsageError("training needs a non-empty dataset");
  const std::size_t w = dataset.front().source.width;
  const std::size_t h = dataset.front().source.height;
  for (const auto& p : dataset) {
    for (const GrayImage* img : {&p.source, &p.target}) {
      if (img->width != w || img->height != h)
        throw ShapeError("pair '" + p.source_id + "' is " + std::to_string(img->width) + "x" +
                         std::to_string(img->height) + ", expected " + std::to_string(w) + "x" + std::to_string(h));
      for (double v : img->pixels)
        if (!(v >= 0.0 && v <= 1.0)) throw RangeError("pair '" + p.source_id + "' has pixel values outside [0, 1]");
    }
  }
}

struct Batches {
  std::vector<Tensor> inputs;
  std::vector<Tensor> targets;
};

Batches make_batches(const std::vector<ImagePair>& pairs, const std::vector<std::size_t>& order, std::size_t batch) {
  Batches b;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    std::vector<const GrayImage*> src;
    std::vector<const GrayImage*> tgt;
    for (std::size_t i = start; i < std::min(order.size(), start + batch); ++i) {
      src.push_back(&pairs[order[i]].source);
      tgt.push_back(&pairs[order[i]].target);
    }
    b.inputs.push_back(stack_images(src));
    b.targets.push_back(stack_images(tgt));
  }
  return b;
}

double evaluate_loss(const NetworkGraph& model, const Batches& batches, const TrainConfig& cfg) {
  NoGradGuard guard;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < batches.inputs.size(); ++i) {
    const Tensor pred = model.forward(batches.inputs[i]);
    const double l = compute_loss(cfg.loss, pred, batches.targets[i], cfg.omega).item();
    acc += l * static_cast<double>(batches.inputs[i].shape().n);
    count += batches.inputs[i].shape().n;
  }
  const double v = acc / static_cast<double>(count);
  if (!std::isfinite(v)) throw NumericError("validation loss became non-finite");
  return v;
}

std::vector<std::vector<double>> snapshot(const NetworkGraph& model) {
  std::vector<std::vector<double>> out;
  for (const auto& p : model.params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

}  // namespace

TrainReport train(NetworkGraph& model, const std::vector<ImagePair>& dataset, const TrainConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  check_dataset(dataset);
  const auto [train_set, val_set] = split_train_val(dataset, config.validation_fraction, config.seed);

  TrainReport report;
  report.seed = config.seed;
  report.train_pairs = train_set.size();
  report.val_pairs = val_set.size();

  std::vector<std::size_t> val_order(val_set.size());
  for (std::size_t i = 0; i < val_order.size(); ++i) val_order[i] = i;
  const Batches val_batches = make_batches(val_set, val_order, config.batch_size);

  bool has_l1 = false;
  for (const auto& p : model.params) has_l1 = has_l1 || p.l1_coeff > 0.0;

  Optimizer opt(config.optimizer);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  report.initial_val_loss = evaluate_loss(model, val_batches, config);
  double best = report.initial_val_loss;
  auto best_weights = snapshot(model);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    const Batches batches = make_batches(train_set, order, config.batch_size);

    double acc = 0.0;
    for (std::size_t b = 0; b < batches.inputs.size(); ++b) {
      const Tensor pred = model.forward(batches.inputs[b]);
      const Tensor loss = compute_loss(config.loss, pred, batches.targets[b], config.omega);
      const double value = loss.item();
      if (!std::isfinite(value))
        throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1));
      acc += value * static_cast<double>(batches.inputs[b].shape().n);
      backward(has_l1 ? residual_add(loss, l1_regularization(model.params)) : loss);
      opt.step(model.params);
    }
    report.train_loss.push_back(acc / static_cast<double>(train_set.size()));

    const double v = evaluate_loss(model, val_batches, config);
    report.val_loss.push_back(v);
    if (v < best) {
      best = v;
      report.best_epoch = epoch;
      best_weights = snapshot(model);
    }
    report.best_val_loss.push_back(best);
    if (config.on_epoch) config.on_epoch(epoch, report.train_loss.back(), v);
  }

  // Retain the best weights at checkpoint (f32) precision so the in-memory
  // model and the written checkpoint behave identically.
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    auto dst = model.params[i].tensor.mutable_data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<double>(static_cast<float>(best_weights[i][k]));
  }

  ValidationSummary& s = report.final_metrics;
  double ssim_acc = 0.0;
  double ms_acc = 0.0;
  bool have_ssim = true;
  for (const auto& p : val_set) {
    const GrayImage out = suppress(model, p.source);
    const auto m = compute_image_metrics(out.view(), p.target.view(), config.omega);
    s.mae += m.mae;
    s.mse += m.mse;
    s.psnr += m.psnr;
    s.input_psnr += psnr(p.source.view(), p.target.view());
    if (m.ssim && m.ms_ssim) {
      ssim_acc += *m.ssim;
      ms_acc += *m.ms_ssim;
    } else {
      have_ssim = false;
    }
  }
  const auto nv = static_cast<double>(val_set.size());
  s.mae /= nv;
  s.mse /= nv;
  s.psnr /= nv;
  s.input_psnr /= nv;
  if (have_ssim) {
    s.ssim = ssim_acc / nv;
    s.ms_ssim = ms_acc / nv;
  }

  if (!config.checkpoint_path.empty()) write_checkpoint(config.checkpoint_path, to_checkpoint(model));
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

GrayImage suppress(const NetworkGraph& model, const GrayImage& image) {
  for (double v : image.pixels)
    if (!std::isfinite(v)) throw NumericError("input image has non-finite pixels");
  NoGradGuard guard;
  const Tensor out = model.forward(stack_images({&image}));
  GrayImage result(image.width, image.height, 0.0, image.bit_depth_origin);
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) result.pixels[i] = std::clamp(d[i], 0.0, 1.0);
  return result;
}

GrayImage suppress(const Checkpoint& ckpt, const GrayImage& image) { return suppress(network_from_checkpoint(ckpt), image); }

}  // namespace bsup
