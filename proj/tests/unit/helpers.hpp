#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bsup/datapipe.hpp"
#include "bsup/tensor.hpp"

namespace testing_helpers {

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline bsup::Tensor random_tensor(bsup::Shape s, std::uint64_t seed, bool requires_grad = false, double lo = -1.0,
                                  double hi = 1.0) {
  return bsup::Tensor(s, random_values(s.size(), seed, lo, hi), requires_grad);
}

inline bsup::GrayImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  bsup::GrayImage img(w, h);
  img.pixels = random_values(w * h, seed, 0.0, 1.0);
  return img;
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(BSUP_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_helpers
