#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bsup/image_view.hpp"

namespace bsup {

/// Grayscale image with pixels normalised to [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;
  int bit_depth_origin = 8;  // 8 or 16; governs quantisation on save

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0, int bit_depth = 8)
      : width(w), height(h), pixels(w * h, fill), bit_depth_origin(bit_depth) {}

  ImageView view() const { return {width, height, pixels}; }
  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

// ---------------------------------------------------------------------------
// I/O

/// Reads 8/16-bit grayscale PNG or binary/ASCII PGM. Throws FormatError for
/// anything else (colour, palette, alpha, unknown container).
GrayImage load_image(const std::filesystem::path& path);
/// Format chosen by extension (.png or .pgm); samples are rounded to the
/// nearest level of `bit_depth_origin`.
void save_image(const GrayImage& img, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Preprocessing

GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height);

/// Percentile with linear interpolation between order statistics (q in [0, 100]).
double percentile(std::vector<double> values, double q);

/// Bilinear resize, then a linear stretch sending the `saturate_percent`
/// percentile to 0 and the (100 - saturate_percent) percentile to 1, clamped.
/// Images whose two percentiles coincide are only resized.
GrayImage preprocess(const GrayImage& img, std::size_t width = 256, std::size_t height = 256,
                     double saturate_percent = 1.0);

// ---------------------------------------------------------------------------
// Augmentation

enum class IntensityFilter { none, median3, max3, min3, unsharp };

const char* to_string(IntensityFilter f);
IntensityFilter parse_intensity_filter(const std::string& name);

struct AugmentSpec {
  double rotation_deg = 0.0;  // [-10, 10]
  double shift_x = 0.0;       // [-5, 5] pixels
  double shift_y = 0.0;       // [-5, 5] pixels
  bool hflip = false;
  double zoom = 1.0;  // (0.5, 2]
  IntensityFilter filter = IntensityFilter::none;
  bool filter_target = true;  // apply the intensity filter to the target as well
  double unsharp_sigma = 1.0;
  double unsharp_amount = 1.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is outside its documented range.
  void validate() const;
  bool operator==(const AugmentSpec&) const = default;
};

struct ImagePair {
  GrayImage source;  // with bones
  GrayImage target;  // bone-suppressed ground truth
  std::string source_id;
  std::vector<AugmentSpec> augmentation_trace;
};

/// Rotation/zoom about the image centre, then shift, then horizontal mirror;
/// bilinear sampling with zero fill outside the frame.
GrayImage apply_geometric(const GrayImage& img, const AugmentSpec& spec);
GrayImage apply_filter(const GrayImage& img, IntensityFilter filter, double unsharp_sigma = 1.0,
                       double unsharp_amount = 1.0);

/// Applies one spec to both members and appends it to the trace.
ImagePair augment_pair(const ImagePair& pair, const AugmentSpec& spec);

struct AugmentPolicy {
  double max_rotation_deg = 10.0;
  double max_shift_px = 5.0;
  double hflip_probability = 0.5;
  double min_zoom = 0.9;
  double max_zoom = 1.1;
  std::vector<IntensityFilter> filters = {IntensityFilter::none, IntensityFilter::median3, IntensityFilter::max3,
                                          IntensityFilter::min3, IntensityFilter::unsharp};
  bool filter_target = true;

  static AugmentPolicy identity_only();
};

/// Every input appears once unchanged, followed by randomly augmented variants
/// assigned round-robin over the sources until `target_count` pairs exist.
/// Output is ordered by (input order, variant index).
std::vector<ImagePair> generate_augmented_dataset(const std::vector<ImagePair>& pairs, std::size_t target_count,
                                                  std::uint64_t seed, const AugmentPolicy& policy = {});

/// Splits at source_id level: ceil(fraction * #sources) ids go to validation
/// (at least 1, at most #sources - 1). Relative order inside each part is kept.
std::pair<std::vector<ImagePair>, std::vector<ImagePair>> split_train_val(const std::vector<ImagePair>& dataset,
                                                                          double fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic bone-overlay pairs

struct SynthOptions {
  std::size_t bumps = 6;
  double min_bone_fraction = 0.15;
  double max_bone_fraction = 0.30;
  double min_bone_intensity = 0.20;
  double max_bone_intensity = 0.35;
};

/// Target: smooth sum of Gaussian bumps. Source: target plus additive rib-like
/// bands and a clavicle-like ellipse covering a bone fraction drawn from
/// [min_bone_fraction, max_bone_fraction], clamped to [0, 1]. Pairs failing the
/// self-check (MAE > 0.02 and PSNR < 30 dB) are redrawn.
std::vector<ImagePair> synth_generate(std::size_t count, std::size_t size, std::uint64_t seed,
                                      const SynthOptions& options = {});

// ---------------------------------------------------------------------------
// On-disk datasets

struct ManifestEntry {
  std::filesystem::path source_path;
  std::filesystem::path target_path;
  std::string source_id;
};

/// CSV with header source_path,target_path,source_id; relative paths resolve
/// against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::vector<ImagePair> load_manifest_pairs(const std::filesystem::path& manifest);

/// Writes <dir>/source/<name>.png, <dir>/target/<name>.png and <dir>/trace.json,
/// with <name> = <source_id>_<variant:04>.
void write_dataset(const std::filesystem::path& dir, const std::vector<ImagePair>& pairs);
/// Reads a directory produced by write_dataset (trace.json optional; without
/// it, the file stem is the source id).
std::vector<ImagePair> read_dataset(const std::filesystem::path& dir);

}  // namespace bsup
