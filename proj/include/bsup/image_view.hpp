#pragma once

#include <cstddef>
#include <span>

namespace bsup {

/// Non-owning row-major grayscale image.
struct ImageView {
  std::size_t width = 0;
  std::size_t height = 0;
  std::span<const double> pixels;

  std::size_t size() const { return width * height; }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

}  // namespace bsup
