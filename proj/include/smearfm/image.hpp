#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace smearfm {

// Grayscale image with intensities in [0, 1], row-major.
struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<double> px;

  ImageGray() = default;
  ImageGray(int w, int h, double fill = 0.0)
      : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
};

// 8-bit RGB image, row-major.
struct ImageRgb {
  int width = 0;
  int height = 0;
  std::vector<std::array<std::uint8_t, 3>> px;

  ImageRgb() = default;
  ImageRgb(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0})
      : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}

  std::array<std::uint8_t, 3>& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
  const std::array<std::uint8_t, 3>& at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace smearfm
