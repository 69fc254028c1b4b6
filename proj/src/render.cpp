#include "smearfm/render.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace smearfm {

namespace {

void put(ImageRgb& img, int x, int y, Rgb color, int* count) {
  if (x < 0 || x >= img.width || y < 0 || y >= img.height) return;
  img.at(x, y) = color;
  if (count) ++(*count);
}

int bresenham(ImageRgb& img, int x0, int y0, int x1, int y1, Rgb color) {
  int count = 0;
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put(img, x0, y0, color, &count);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return count;
}

}  // namespace

int draw_line(ImageRgb& img, const EpipolarLine& line, Rgb color) {
  const double a = line.a, b = line.b, c = line.c;
  const double w = img.width - 1.0, h = img.height - 1.0;

  // Intersections with the canvas border.
  std::vector<std::array<double, 2>> pts;
  const auto try_x = [&](double x) {
    if (std::abs(b) < 1e-12) return;
    const double y = -(a * x + c) / b;
    if (y >= -0.5 && y <= h + 0.5) pts.push_back({x, y});
  };
  const auto try_y = [&](double y) {
    if (std::abs(a) < 1e-12) return;
    const double x = -(b * y + c) / a;
    if (x >= -0.5 && x <= w + 0.5) pts.push_back({x, y});
  };
  try_x(0.0);
  try_x(w);
  try_y(0.0);
  try_y(h);
  if (pts.size() < 2) return 0;

  // Two extreme intersections along the line direction (-b, a).
  const auto along = [&](const std::array<double, 2>& p) {
    return -b * p[0] + a * p[1];
  };
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (along(pts[i]) < along(pts[lo])) lo = i;
    if (along(pts[i]) > along(pts[hi])) hi = i;
  }
  const auto clamp_pt = [&](const std::array<double, 2>& p) {
    return std::array<int, 2>{
        static_cast<int>(std::lround(std::clamp(p[0], 0.0, w))),
        static_cast<int>(std::lround(std::clamp(p[1], 0.0, h)))};
  };
  const auto p0 = clamp_pt(pts[lo]);
  const auto p1 = clamp_pt(pts[hi]);
  return bresenham(img, p0[0], p0[1], p1[0], p1[1], color);
}

void draw_point(ImageRgb& img, const ImagePoint& p, Rgb color) {
  const int cx = static_cast<int>(std::lround(p.x));
  const int cy = static_cast<int>(std::lround(p.y));
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) put(img, cx + dx, cy + dy, color, nullptr);
}

}  // namespace smearfm
