#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bsup/datapipe.hpp"
#include "bsup/errors.hpp"

namespace bsup {

AugmentPolicy AugmentPolicy::identity_only() {
  AugmentPolicy p;
  p.max_rotation_deg = 0.0;
  p.max_shift_px = 0.0;
  p.hflip_probability = 0.0;
  p.min_zoom = 1.0;
  p.max_zoom = 1.0;
  p.filters = {IntensityFilter::none};
  return p;
}

namespace {

AugmentSpec sample_spec(std::mt19937_64& rng, const AugmentPolicy& policy) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto symmetric = [&](double bound) { return bound == 0.0 ? 0.0 : (2.0 * unit(rng) - 1.0) * bound; };
  AugmentSpec s;
  s.rotation_deg = symmetric(policy.max_rotation_deg);
  s.shift_x = std::round(symmetric(policy.max_shift_px));
  s.shift_y = std::round(symmetric(policy.max_shift_px));
  s.hflip = unit(rng) < policy.hflip_probability;
  s.zoom = policy.min_zoom + (policy.max_zoom - policy.min_zoom) * unit(rng);
  if (policy.filters.empty()) {
    s.filter = IntensityFilter::none;
  } else {
    const auto k = static_cast<std::size_t>(unit(rng) * static_cast<double>(policy.filters.size()));
    s.filter = policy.filters[std::min(k, policy.filters.size() - 1)];
  }
  s.filter_target = policy.filter_target;
  s.seed = rng();
  return s;
}

}  // namespace

std::vector<ImagePair> generate_augmented_dataset(const std::vector<ImagePair>& pairs, std::size_t target_count,
                                                  std::uint64_t seed, const AugmentPolicy& policy) {
  if (pairs.empty()) throw UsageError("augmentation needs at least one input pair");
  if (target_count < pairs.size())
    throw UsageError("target count " + std::to_string(target_count) + " is below the input count " +
                     std::to_string(pairs.size()));

  const std::size_t n = pairs.size();
  std::vector<std::vector<ImagePair>> per_source(n);
  for (std::size_t i = 0; i < n; ++i) per_source[i].push_back(pairs[i]);

  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < target_count - n; ++k) {
    const std::size_t src = k % n;
    per_source[src].push_back(augment_pair(pairs[src], sample_spec(rng, policy)));
  }

  std::vector<ImagePair> out;
  out.reserve(target_count);
  for (auto& group : per_source)
    for (auto& p : group) out.push_back(std::move(p));
  return out;
}

std::pair<std::vector<ImagePair>, std::vector<ImagePair>> split_train_val(const std::vector<ImagePair>& dataset,
                                                                          double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& p : dataset)
    if (seen.insert(p.source_id).second) ids.push_back(p.source_id);
  if (ids.size() < 2) throw UsageError("a train/validation split needs at least 2 distinct source ids");

  std::mt19937_64 rng(seed);
  std::vector<std::string> shuffled = ids;
  // Fisher-Yates with an explicit index draw so the permutation is portable.
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(shuffled[i], shuffled[j]);
  }
  auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(ids.size()) - 1e-9));
  n_val = std::clamp<std::size_t>(n_val, 1, ids.size() - 1);
  const std::set<std::string> val_ids(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));

  std::pair<std::vector<ImagePair>, std::vector<ImagePair>> parts;
  for (const auto& p : dataset) (val_ids.count(p.source_id) ? parts.second : parts.first).push_back(p);
  return parts;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

nlohmann::ordered_json spec_to_json(const AugmentSpec& s) {
  nlohmann::ordered_json j;
  j["rotation_deg"] = s.rotation_deg;
  j["shift_x"] = s.shift_x;
  j["shift_y"] = s.shift_y;
  j["hflip"] = s.hflip;
  j["zoom"] = s.zoom;
  j["filter"] = to_string(s.filter);
  j["filter_target"] = s.filter_target;
  j["unsharp_sigma"] = s.unsharp_sigma;
  j["unsharp_amount"] = s.unsharp_amount;
  j["seed"] = s.seed;
  return j;
}

AugmentSpec spec_from_json(const nlohmann::ordered_json& j) {
  AugmentSpec s;
  s.rotation_deg = j.at("rotation_deg").get<double>();
  s.shift_x = j.at("shift_x").get<double>();
  s.shift_y = j.at("shift_y").get<double>();
  s.hflip = j.at("hflip").get<bool>();
  s.zoom = j.at("zoom").get<double>();
  s.filter = parse_intensity_filter(j.at("filter").get<std::string>());
  s.filter_target = j.at("filter_target").get<bool>();
  s.unsharp_sigma = j.at("unsharp_sigma").get<double>();
  s.unsharp_amount = j.at("unsharp_amount").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

std::string sanitize(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out.empty() ? "image" : out;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw UsageError("manifest " + path.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"source_path", "target_path", "source_id"})
    throw FormatError("manifest header must be source_path,target_path,source_id");
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw FormatError("manifest line " + std::to_string(lineno) + " must have 3 fields");
    ManifestEntry e{f[0], f[1], f[2]};
    if (e.source_path.is_relative()) e.source_path = base / e.source_path;
    if (e.target_path.is_relative()) e.target_path = base / e.target_path;
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw UsageError("manifest " + path.string() + " lists no pairs");
  return entries;
}

std::vector<ImagePair> load_manifest_pairs(const std::filesystem::path& manifest) {
  std::vector<ImagePair> pairs;
  for (const auto& e : read_manifest(manifest)) {
    ImagePair p{load_image(e.source_path), load_image(e.target_path), e.source_id, {}};
    if (p.source.width != p.target.width || p.source.height != p.target.height)
      throw ShapeError("pair '" + e.source_id + "' has mismatched dimensions");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<ImagePair>& pairs) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "source");
  fs::create_directories(dir / "target");
  std::map<std::string, std::size_t> variant;
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& p : pairs) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_%04zu", variant[p.source_id]++);
    const std::string name = sanitize(p.source_id) + suffix + ".png";
    save_image(p.source, dir / "source" / name);
    save_image(p.target, dir / "target" / name);
    nlohmann::ordered_json entry;
    entry["file"] = name;
    entry["source_id"] = p.source_id;
    entry["augmentation_trace"] = nlohmann::ordered_json::array();
    for (const auto& s : p.augmentation_trace) entry["augmentation_trace"].push_back(spec_to_json(s));
    trace.push_back(std::move(entry));
  }
  std::ofstream out(dir / "trace.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "trace.json").string());
  out << trace.dump(2) << "\n";
}

std::vector<ImagePair> read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir / "source") || !fs::is_directory(dir / "target"))
    throw IoError(dir.string() + " must contain source/ and target/ directories");

  std::vector<ImagePair> pairs;
  const auto trace_path = dir / "trace.json";
  if (fs::exists(trace_path)) {
    std::ifstream in(trace_path);
    nlohmann::ordered_json trace;
    try {
      trace = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(trace_path.string() + ": " + e.what());
    }
    for (const auto& entry : trace) {
      const auto name = entry.at("file").get<std::string>();
      ImagePair p{load_image(dir / "source" / name), load_image(dir / "target" / name),
                  entry.at("source_id").get<std::string>(), {}};
      for (const auto& s : entry.at("augmentation_trace")) p.augmentation_trace.push_back(spec_from_json(s));
      pairs.push_back(std::move(p));
    }
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "source"))
      if (e.is_regular_file()) files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());
    for (const auto& name : files) {
      if (!fs::exists(dir / "target" / name)) throw IoError("no target image for " + name.string());
      pairs.push_back({load_image(dir / "source" / name), load_image(dir / "target" / name),
                       name.stem().string(), {}});
    }
  }
  for (const auto& p : pairs)
    if (p.source.width != p.target.width || p.source.height != p.target.height)
      throw ShapeError("pair '" + p.source_id + "' has mismatched dimensions");
  return pairs;
}

}  // namespace bsup
