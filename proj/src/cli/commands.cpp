#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "bsup/cli.hpp"
#include "bsup/datapipe.hpp"
#include "bsup/errors.hpp"
#include "bsup/histsim.hpp"
#include "bsup/models.hpp"
#include "bsup/report.hpp"
#include "bsup/stats.hpp"

namespace fs = std::filesystem;

namespace bsup::cli {

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd.add_option("--config", c.config, "Plain-text key=value file; flags override it");
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

Json envelope(const char* command, std::uint64_t seed, Json config) {
  Json j;
  j["tool"] = "bsup";
  j["version"] = kToolkitVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = std::move(config);
  return j;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".pgm";
}

std::vector<std::string> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<ImagePair> load_pairs(const fs::path& data) {
  if (fs::is_regular_file(data)) return load_manifest_pairs(data);
  if (fs::is_directory(data)) return read_dataset(data);
  throw IoError("no dataset at " + data.string());
}

// ---------------------------------------------------------------------------

struct AugmentArgs {
  Common common;
  std::string manifest;
  std::string out;
  std::size_t count = 4500;
  std::size_t width = 256;
  std::size_t height = 256;
  double saturate_percent = 1.0;
  bool no_preprocess = false;
  double max_rotation = 10.0;
  double max_shift = 5.0;
  double hflip_probability = 0.5;
  double min_zoom = 0.9;
  double max_zoom = 1.1;
  std::string filters = "none,median3,max3,min3,unsharp";
  bool filter_target = true;
};

void add_augment(CLI::App& app, AugmentArgs& a) {
  auto* cmd = app.add_subcommand("augment", "Preprocess and augment a manifest of image pairs");
  add_common(*cmd, a.common);
  cmd->add_option("--manifest", a.manifest, "CSV with source_path,target_path,source_id");
  cmd->add_option("--out", a.out, "Output dataset directory");
  cmd->add_option("--count", a.count, "Total output pairs (originals included)")->capture_default_str();
  cmd->add_option("--width", a.width, "Preprocessed width")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--height", a.height, "Preprocessed height")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--saturate-percent", a.saturate_percent, "Percent saturated at each end")->capture_default_str();
  cmd->add_flag("--no-preprocess", a.no_preprocess, "Skip resizing and contrast stretching");
  cmd->add_option("--max-rotation", a.max_rotation, "Degrees")->capture_default_str();
  cmd->add_option("--max-shift", a.max_shift, "Pixels")->capture_default_str();
  cmd->add_option("--hflip-probability", a.hflip_probability)->capture_default_str();
  cmd->add_option("--min-zoom", a.min_zoom)->capture_default_str();
  cmd->add_option("--max-zoom", a.max_zoom)->capture_default_str();
  cmd->add_option("--filters", a.filters, "Comma-separated intensity filters to draw from")->capture_default_str();
  cmd->add_option("--filter-target", a.filter_target, "Apply intensity filters to targets too")->capture_default_str();
}

std::vector<IntensityFilter> parse_filter_list(const std::string& text) {
  std::vector<IntensityFilter> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_intensity_filter(item));
  if (out.empty()) throw ConfigError("--filters needs at least one filter");
  return out;
}

int run_augment(const AugmentArgs& a, std::ostream& out) {
  require(a.manifest, "--manifest");
  require(a.out, "--out");
  AugmentPolicy policy;
  policy.max_rotation_deg = a.max_rotation;
  policy.max_shift_px = a.max_shift;
  policy.hflip_probability = a.hflip_probability;
  policy.min_zoom = a.min_zoom;
  policy.max_zoom = a.max_zoom;
  policy.filters = parse_filter_list(a.filters);
  policy.filter_target = a.filter_target;
  AugmentSpec bound;
  bound.rotation_deg = a.max_rotation;
  bound.shift_x = bound.shift_y = a.max_shift;
  bound.zoom = a.max_zoom;
  bound.validate();
  bound.zoom = a.min_zoom;
  bound.validate();
  if (!(a.hflip_probability >= 0.0 && a.hflip_probability <= 1.0))
    throw ConfigError("--hflip-probability must lie in [0, 1]");
  if (a.min_zoom > a.max_zoom) throw ConfigError("--min-zoom exceeds --max-zoom");

  auto pairs = load_manifest_pairs(a.manifest);
  if (!a.no_preprocess)
    for (auto& p : pairs) {
      p.source = preprocess(p.source, a.width, a.height, a.saturate_percent);
      p.target = preprocess(p.target, a.width, a.height, a.saturate_percent);
    }
  const auto data = generate_augmented_dataset(pairs, a.count, a.common.seed, policy);
  write_dataset(a.out, data);

  Json cfg;
  cfg["manifest"] = a.manifest;
  cfg["out"] = a.out;
  cfg["count"] = a.count;
  cfg["preprocess"] = !a.no_preprocess;
  cfg["width"] = a.width;
  cfg["height"] = a.height;
  cfg["saturate_percent"] = a.saturate_percent;
  cfg["max_rotation"] = a.max_rotation;
  cfg["max_shift"] = a.max_shift;
  cfg["hflip_probability"] = a.hflip_probability;
  cfg["min_zoom"] = a.min_zoom;
  cfg["max_zoom"] = a.max_zoom;
  cfg["filters"] = a.filters;
  cfg["filter_target"] = a.filter_target;
  Json rep = envelope("augment", a.common.seed, cfg);
  rep["input_pairs"] = pairs.size();
  rep["output_pairs"] = data.size();
  write_text_file(fs::path(a.out) / "report.json", rep.dump(2) + "\n");
  out << "augment: wrote " << data.size() << " pairs to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string model;
  std::string data;
  std::string out;
  std::string report;
  std::string curve_csv;
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double momentum = 0.0;
  double val_fraction = 0.10;
  std::string loss = "combined";
  double omega = kDefaultOmega;
  std::string width = "1/4";
  std::size_t blocks = 4;
  std::string rl_mode = "residual";
  double l1 = kDefaultL1;
  bool record_timing = false;
  bool quiet = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train a bone suppression model");
  add_common(*cmd, a.common);
  cmd->add_option("--model", a.model, "ae, convnet, rl or resnet");
  cmd->add_option("--data", a.data, "Dataset directory or manifest CSV");
  cmd->add_option("--out", a.out, "Checkpoint path");
  cmd->add_option("--report", a.report, "Report JSON path (default: <out>.json)");
  cmd->add_option("--curve-csv", a.curve_csv, "Per-epoch loss curve CSV");
  cmd->add_option("--epochs", a.epochs)->capture_default_str();
  cmd->add_option("--batch-size", a.batch_size)->capture_default_str();
  cmd->add_option("--optimizer", a.optimizer, "adam or sgd")->capture_default_str();
  cmd->add_option("--lr", a.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--momentum", a.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--val-fraction", a.val_fraction)->capture_default_str();
  cmd->add_option("--loss", a.loss, "combined, mae or mse")->capture_default_str();
  cmd->add_option("--omega", a.omega, "MS-SSIM weight of the combined loss")->capture_default_str();
  cmd->add_option("--width", a.width, "Filter-count multiplier, e.g. 0.25 or 1/4")->capture_default_str();
  cmd->add_option("--blocks", a.blocks, "Residual blocks (resnet)")->capture_default_str();
  cmd->add_option("--rl-mode", a.rl_mode, "residual or direct (rl)")->capture_default_str();
  cmd->add_option("--l1", a.l1, "L1 coefficient on conv weights (convnet)")->capture_default_str();
  cmd->add_flag("--record-timing", a.record_timing, "Include wall-clock seconds in the report");
  cmd->add_flag("--quiet", a.quiet, "No per-epoch output");
}

Json to_json(const ValidationSummary& s) {
  Json j;
  j["mae"] = json_number(s.mae);
  j["mse"] = json_number(s.mse);
  j["psnr"] = json_number(s.psnr);
  j["ssim"] = json_number(s.ssim);
  j["ms_ssim"] = json_number(s.ms_ssim);
  j["input_psnr"] = json_number(s.input_psnr);
  return j;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  require(a.model, "--model");
  ModelSpec spec;
  spec.kind = parse_model_kind(a.model);
  require(a.data, "--data");
  require(a.out, "--out");
  spec.width_scale = parse_width_scale(a.width);
  spec.num_blocks = a.blocks;
  spec.rl_mode = parse_rl_mode(a.rl_mode);
  spec.l1_coeff = a.l1;

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.seed = a.common.seed;
  if (a.optimizer == "adam") cfg.optimizer.kind = OptimizerKind::adam;
  else if (a.optimizer == "sgd") cfg.optimizer.kind = OptimizerKind::sgd;
  else throw ConfigError("unknown optimizer '" + a.optimizer + "' (expected adam or sgd)");
  cfg.optimizer.learning_rate = a.lr;
  cfg.optimizer.momentum = a.momentum;
  cfg.validation_fraction = a.val_fraction;
  cfg.loss = parse_loss_kind(a.loss);
  cfg.omega = a.omega;
  cfg.checkpoint_path = a.out;
  cfg.validate();
  if (!a.quiet)
    cfg.on_epoch = [&out](std::size_t epoch, double tl, double vl) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "epoch %zu train_loss %.6f val_loss %.6f\n", epoch, tl, vl);
      out << buf << std::flush;
    };

  NetworkGraph model = build_model(spec, a.common.seed);
  const auto data = load_pairs(a.data);
  const TrainReport r = train(model, data, cfg);

  Json c;
  c["model"] = to_string(spec.kind);
  c["data"] = a.data;
  c["out"] = a.out;
  c["epochs"] = a.epochs;
  c["batch_size"] = a.batch_size;
  c["optimizer"] = a.optimizer;
  c["lr"] = a.lr;
  c["momentum"] = a.momentum;
  c["val_fraction"] = a.val_fraction;
  c["loss"] = a.loss;
  c["omega"] = a.omega;
  c["width"] = spec.width_scale;
  c["blocks"] = a.blocks;
  c["rl_mode"] = a.rl_mode;
  c["l1"] = a.l1;
  Json rep = envelope("train", a.common.seed, c);
  rep["parameters"] = model.parameter_count();
  rep["filters"] = filter_sequence(model);
  rep["train_pairs"] = r.train_pairs;
  rep["val_pairs"] = r.val_pairs;
  rep["initial_val_loss"] = json_number(r.initial_val_loss);
  rep["train_loss"] = r.train_loss;
  rep["val_loss"] = r.val_loss;
  rep["best_val_loss"] = r.best_val_loss;
  rep["best_epoch"] = r.best_epoch;
  rep["final_metrics"] = to_json(r.final_metrics);
  if (a.record_timing) rep["wall_clock_seconds"] = r.wall_clock_seconds;
  write_text_file(a.report.empty() ? a.out + ".json" : a.report, rep.dump(2) + "\n");

  if (!a.curve_csv.empty()) {
    std::string csv = "epoch,train_loss,val_loss,best_val_loss\n";
    csv += "0,," + csv_number(r.initial_val_loss) + "," + csv_number(r.initial_val_loss) + "\n";
    for (std::size_t i = 0; i < r.train_loss.size(); ++i)
      csv += std::to_string(i + 1) + "," + csv_number(r.train_loss[i]) + "," + csv_number(r.val_loss[i]) + "," +
             csv_number(r.best_val_loss[i]) + "\n";
    write_text_file(a.curve_csv, csv);
  }
  out << "train: best epoch " << r.best_epoch << ", validation PSNR " << csv_number(r.final_metrics.psnr)
      << " dB (input " << csv_number(r.final_metrics.input_psnr) << " dB)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SuppressArgs {
  Common common;
  std::string checkpoint;
  std::string input;
  std::string out;
};

void add_suppress(CLI::App& app, SuppressArgs& a) {
  auto* cmd = app.add_subcommand("suppress", "Apply a trained model to an image or a directory");
  add_common(*cmd, a.common);
  cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint written by train");
  cmd->add_option("--input", a.input, "Image file or directory");
  cmd->add_option("--out", a.out, "Output file or directory");
}

int run_suppress(const SuppressArgs& a, std::ostream& out) {
  require(a.checkpoint, "--checkpoint");
  require(a.input, "--input");
  require(a.out, "--out");
  const NetworkGraph model = network_from_checkpoint(read_checkpoint(a.checkpoint));
  if (fs::is_directory(a.input)) {
    const auto names = list_images(a.input);
    fs::create_directories(a.out);
    for (const auto& name : names) {
      try {
        save_image(suppress(model, load_image(fs::path(a.input) / name)), fs::path(a.out) / name);
      } catch (const Error& e) {
        if (dynamic_cast<const NumericError*>(&e)) throw;
        throw UsageError(name + ": " + e.what());
      }
    }
    out << "suppress: wrote " << names.size() << " images to " << a.out << "\n";
  } else {
    save_image(suppress(model, load_image(a.input)), a.out);
    out << "suppress: wrote " << a.out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  Common common;
  std::string pred;
  std::string gt;
  std::string csv;
  std::string json;
  double omega = kDefaultOmega;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* cmd = app.add_subcommand("evaluate", "Image quality metrics of predictions against ground truth");
  add_common(*cmd, a.common);
  cmd->add_option("--pred", a.pred, "Directory of predicted images");
  cmd->add_option("--gt", a.gt, "Directory of ground-truth images (same filenames)");
  cmd->add_option("--csv", a.csv, "Per-image + aggregate CSV (default: stdout)");
  cmd->add_option("--json", a.json, "Per-image + aggregate JSON");
  cmd->add_option("--omega", a.omega, "MS-SSIM weight of the combined loss")->capture_default_str();
}

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  require(a.pred, "--pred");
  require(a.gt, "--gt");
  if (!(a.omega >= 0.0 && a.omega <= 1.0)) throw ConfigError("--omega must lie in [0, 1]");
  const auto pred_names = list_images(a.pred);
  const auto gt_names = list_images(a.gt);
  std::vector<std::string> orphans;
  std::set_symmetric_difference(pred_names.begin(), pred_names.end(), gt_names.begin(), gt_names.end(),
                                std::back_inserter(orphans));
  if (!orphans.empty()) {
    std::string list;
    for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
    throw UsageError("prediction and ground-truth file sets differ; orphans: " + list);
  }
  if (pred_names.empty()) throw UsageError("no images found in " + a.pred);

  std::vector<ImageMetricsReport> rows;
  for (const auto& name : pred_names) {
    const GrayImage p = load_image(fs::path(a.pred) / name);
    const GrayImage g = load_image(fs::path(a.gt) / name);
    if (p.width != g.width || p.height != g.height) throw ShapeError(name + ": prediction and ground truth differ in size");
    rows.push_back(compute_image_metrics(p.view(), g.view(), a.omega));
  }

  ImageMetricsReport agg;
  const auto n = static_cast<double>(rows.size());
  auto mean_opt = [&](auto field) -> std::optional<double> {
    double acc = 0.0;
    for (const auto& r : rows) {
      if (!(r.*field)) return std::nullopt;
      acc += *(r.*field);
    }
    return acc / n;
  };
  for (const auto& r : rows) {
    agg.mae += r.mae / n;
    agg.mse += r.mse / n;
    agg.psnr += r.psnr / n;
  }
  agg.ssim = mean_opt(&ImageMetricsReport::ssim);
  agg.ms_ssim = mean_opt(&ImageMetricsReport::ms_ssim);
  agg.ms_ssim_loss = mean_opt(&ImageMetricsReport::ms_ssim_loss);
  agg.combined_loss = mean_opt(&ImageMetricsReport::combined_loss);

  std::string csv = "file," + metrics_csv_header() + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) csv += pred_names[i] + "," + metrics_csv_row(rows[i]) + "\n";
  csv += "aggregate," + metrics_csv_row(agg) + "\n";

  Json cfg;
  cfg["pred"] = a.pred;
  cfg["gt"] = a.gt;
  cfg["omega"] = a.omega;
  Json rep = envelope("evaluate", a.common.seed, cfg);
  Json images = Json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Json j;
    j["file"] = pred_names[i];
    j["metrics"] = bsup::to_json(rows[i]);
    images.push_back(std::move(j));
  }
  rep["images"] = std::move(images);
  rep["aggregate"] = bsup::to_json(agg);

  if (!a.csv.empty()) write_text_file(a.csv, csv);
  if (!a.json.empty()) write_text_file(a.json, rep.dump(2) + "\n");
  if (a.csv.empty() && a.json.empty()) out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct HistArgs {
  Common common;
  std::string image_a;
  std::string image_b;
  std::size_t bins = kDefaultHistogramBins;
  std::string normalization = "unit-sum";
  std::string out;
};

void add_hist(CLI::App& app, HistArgs& a) {
  auto* cmd = app.add_subcommand("hist-compare", "Compare the intensity histograms of two images");
  add_common(*cmd, a.common);
  cmd->add_option("image-a,--image-a", a.image_a, "First image");
  cmd->add_option("image-b,--image-b", a.image_b, "Second image");
  cmd->add_option("--bins", a.bins)->capture_default_str();
  cmd->add_option("--normalization", a.normalization, "counts or unit-sum")->capture_default_str();
  cmd->add_option("--out", a.out, "Report JSON (default: stdout)");
}

int run_hist(const HistArgs& a, std::ostream& out) {
  require(a.image_a, "image-a");
  require(a.image_b, "image-b");
  HistogramNormalization norm;
  if (a.normalization == "counts") norm = HistogramNormalization::counts;
  else if (a.normalization == "unit-sum") norm = HistogramNormalization::unit_sum;
  else throw ConfigError("unknown normalization '" + a.normalization + "' (expected counts or unit-sum)");
  const GrayImage img_a = load_image(a.image_a);
  const GrayImage img_b = load_image(a.image_b);
  const auto c = compare_histograms(build_histogram(img_a.view(), a.bins, norm), build_histogram(img_b.view(), a.bins, norm));

  Json cfg;
  cfg["image_a"] = a.image_a;
  cfg["image_b"] = a.image_b;
  cfg["bins"] = a.bins;
  cfg["normalization"] = a.normalization;
  Json rep = envelope("hist-compare", a.common.seed, cfg);
  rep["correlation"] = json_number(c.correlation);
  rep["intersection"] = json_number(c.intersection);
  rep["chi_square"] = json_number(c.chi_square);
  rep["bhattacharyya"] = json_number(c.bhattacharyya);
  rep["emd"] = json_number(c.emd);
  rep["chi_square_skipped_bins"] = c.chi_square_skipped_bins;
  if (a.out.empty()) out << rep.dump(2) << "\n";
  else write_text_file(a.out, rep.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  Common common;
  std::string groups;
  double alpha = 0.05;
  std::string levene_center = "mean";
  std::string baseline;
  std::string treatment;
  std::string out;
};

void add_stats(CLI::App& app, StatsArgs& a) {
  auto* cmd = app.add_subcommand("stats", "Baseline-vs-treatment comparison with assumption checks");
  add_common(*cmd, a.common);
  cmd->add_option("--groups", a.groups, "CSV with label,value rows");
  cmd->add_option("--alpha", a.alpha)->capture_default_str();
  cmd->add_option("--levene-center", a.levene_center, "mean or median")->capture_default_str();
  cmd->add_option("--baseline", a.baseline, "Baseline label (default: first label in the file)");
  cmd->add_option("--treatment", a.treatment, "Treatment label (default: second label in the file)");
  cmd->add_option("--out", a.out, "Report JSON (default: stdout)");
}

std::vector<SampleGroup> read_groups_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<SampleGroup> groups;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected label,value");
    const std::string label = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (lineno == 1 && label == "label" && value == "value") continue;
    double v;
    try {
      std::size_t pos = 0;
      v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": '" + value + "' is not a number");
    }
    auto [it, fresh] = index.emplace(label, groups.size());
    if (fresh) groups.push_back({label, {}});
    groups[it->second].values.push_back(v);
  }
  return groups;
}

int run_stats(const StatsArgs& a, std::ostream& out) {
  require(a.groups, "--groups");
  LeveneCenter center;
  if (a.levene_center == "mean") center = LeveneCenter::mean;
  else if (a.levene_center == "median") center = LeveneCenter::median;
  else throw ConfigError("unknown Levene centre '" + a.levene_center + "' (expected mean or median)");

  const auto groups = read_groups_csv(a.groups);
  if (groups.size() < 2) throw UsageError(a.groups + " must hold at least two labels");
  auto pick = [&](const std::string& label, std::size_t fallback, const char* flag) -> const SampleGroup& {
    if (label.empty()) {
      if (groups.size() != 2) throw UsageError(std::string(flag) + " is required when the file holds more than two labels");
      return groups[fallback];
    }
    for (const auto& g : groups)
      if (g.label == label) return g;
    throw UsageError(std::string(flag) + ": no group labelled '" + label + "'");
  };
  const SampleGroup& base = pick(a.baseline, 0, "--baseline");
  const SampleGroup& treat = pick(a.treatment, 1, "--treatment");
  if (&base == &treat) throw UsageError("baseline and treatment must be different groups");

  const auto report = compare_runs(base, treat, a.alpha, center);
  Json cfg;
  cfg["groups"] = a.groups;
  cfg["alpha"] = a.alpha;
  cfg["levene_center"] = a.levene_center;
  cfg["baseline"] = base.label;
  cfg["treatment"] = treat.label;
  Json rep = envelope("stats", a.common.seed, cfg);
  const Json body = bsup::to_json(report);
  for (const auto& [k, v] : body.items()) rep[k] = v;
  if (a.out.empty()) out << rep.dump(2) << "\n";
  else write_text_file(a.out, rep.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::size_t count = 200;
  std::size_t size = 64;
  std::string out;
  SynthOptions options;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* cmd = app.add_subcommand("synth", "Generate synthetic bone-overlay image pairs");
  add_common(*cmd, a.common);
  cmd->add_option("--count", a.count)->capture_default_str();
  cmd->add_option("--size", a.size, "Square image size in pixels")->capture_default_str();
  cmd->add_option("--out", a.out, "Output dataset directory");
  cmd->add_option("--bumps", a.options.bumps, "Gaussian bumps in the soft-tissue background")->capture_default_str();
  cmd->add_option("--min-bone-fraction", a.options.min_bone_fraction)->capture_default_str();
  cmd->add_option("--max-bone-fraction", a.options.max_bone_fraction)->capture_default_str();
  cmd->add_option("--min-bone-intensity", a.options.min_bone_intensity)->capture_default_str();
  cmd->add_option("--max-bone-intensity", a.options.max_bone_intensity)->capture_default_str();
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  require(a.out, "--out");
  if (a.count == 0) throw UsageError("--count must be at least 1");
  const auto pairs = synth_generate(a.count, a.size, a.common.seed, a.options);
  write_dataset(a.out, pairs);
  Json cfg;
  cfg["count"] = a.count;
  cfg["size"] = a.size;
  cfg["out"] = a.out;
  cfg["bumps"] = a.options.bumps;
  cfg["min_bone_fraction"] = a.options.min_bone_fraction;
  cfg["max_bone_fraction"] = a.options.max_bone_fraction;
  cfg["min_bone_intensity"] = a.options.min_bone_intensity;
  cfg["max_bone_intensity"] = a.options.max_bone_intensity;
  write_text_file(fs::path(a.out) / "report.json", envelope("synth", a.common.seed, cfg).dump(2) + "\n");
  out << "synth: wrote " << pairs.size() << " pairs to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bone suppression toolkit: augment, train, suppress, evaluate, compare", "bsup"};
  app.set_version_flag("--version", kToolkitVersion);
  app.require_subcommand(1);

  AugmentArgs augment;
  TrainArgs train_args;
  SuppressArgs suppress_args;
  EvaluateArgs evaluate;
  HistArgs hist;
  StatsArgs stats;
  SynthArgs synth;
  add_augment(app, augment);
  add_train(app, train_args);
  add_suppress(app, suppress_args);
  add_evaluate(app, evaluate);
  add_hist(app, hist);
  add_stats(app, stats);
  add_synth(app, synth);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolkitVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "bsup: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    const std::map<std::string, const Common*> commons = {
        {"augment", &augment.common},    {"train", &train_args.common}, {"suppress", &suppress_args.common},
        {"evaluate", &evaluate.common},  {"hist-compare", &hist.common}, {"stats", &stats.common},
        {"synth", &synth.common}};
    const Common* common = commons.at(cmd->get_name());
    if (!common->config.empty()) apply_config(*cmd, read_config_file(common->config));

    const std::string& name = cmd->get_name();
    if (name == "augment") return run_augment(augment, out);
    if (name == "train") return run_train(train_args, out);
    if (name == "suppress") return run_suppress(suppress_args, out);
    if (name == "evaluate") return run_evaluate(evaluate, out);
    if (name == "hist-compare") return run_hist(hist, out);
    if (name == "stats") return run_stats(stats, out);
    if (name == "synth") return run_synth(synth, out);
    throw UsageError("unknown command " + name);
  } catch (const std::exception& e) {
    err << "bsup " << cmd->get_name() << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace bsup::cli
