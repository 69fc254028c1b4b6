#pragma once

#include <array>
#include <cstdint>

#include "smearfm/image.hpp"
#include "smearfm/types.hpp"

namespace smearfm {

using Rgb = std::array<std::uint8_t, 3>;

// Rasterizes the infinite line a*x + b*y + c = 0 clipped to the image with
// 1-px Bresenham. Returns the number of pixels set (0 if the line misses the
// canvas entirely).
int draw_line(ImageRgb& img, const EpipolarLine& line, Rgb color);

// 3x3 square marker, clipped at the borders.
void draw_point(ImageRgb& img, const ImagePoint& p, Rgb color);

}  // namespace smearfm
