#pragma once

// Pixel kernels behind ingest (resize), preprocess (mask, skeleton) and the
// synthetic backends (redness, motion). Every kernel exists twice:
//   stap::kernels   - OpenMP row-parallel versions used by the pipeline,
//   stap::reference - plain per-pixel loops kept as the test baseline.
// Both must produce bit-identical output for identical input.

#include <array>
#include <cstdint>
#include <span>

#include "stap/core.hpp"

namespace stap {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

// A pixel (x, y) covers the unit square [x, x+1) x [y, y+1); it belongs to a
// box when its center lies in [x_min, x_max) x [y_min, y_max).
inline bool box_covers_pixel(const BoundingBox& box, int x, int y) {
  const double cx = x + 0.5;
  const double cy = y + 0.5;
  return cx >= box.x_min && cx < box.x_max && cy >= box.y_min && cy < box.y_max;
}

// Red-dominance test used by the synthetic spatial rule.
inline bool is_red_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return r >= 128 && g < 96 && b < 96 && r >= g + 64 && r >= b + 64;
}

struct RedRegion {
  std::int64_t count = 0;
  int x_min = 0;
  int y_min = 0;
  int x_max = -1;  // inclusive pixel bounds, empty when count == 0
  int y_max = -1;
};

namespace kernels {

void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h, std::span<std::uint8_t> dst, int dst_w,
                     int dst_h);

// dst = src inside the union of boxes, zero outside.
void mask_outside_boxes(std::span<const std::uint8_t> src, int w, int h, std::span<const BoundingBox> boxes,
                        std::span<std::uint8_t> dst);

// Paints every pixel whose center lies strictly closer than thickness/2 to
// the segment (x0,y0)-(x1,y1).
void draw_segment(std::span<std::uint8_t> canvas, int w, int h, double x0, double y0, double x1, double y1,
                  double thickness, Rgb color);

double mean_abs_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

RedRegion find_red_region(std::span<const std::uint8_t> px, int w, int h);

}  // namespace kernels

namespace reference {

void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h, std::span<std::uint8_t> dst, int dst_w,
                     int dst_h);
void mask_outside_boxes(std::span<const std::uint8_t> src, int w, int h, std::span<const BoundingBox> boxes,
                        std::span<std::uint8_t> dst);
void draw_segment(std::span<std::uint8_t> canvas, int w, int h, double x0, double y0, double x1, double y1,
                  double thickness, Rgb color);
double mean_abs_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
RedRegion find_red_region(std::span<const std::uint8_t> px, int w, int h);

}  // namespace reference

// Squared distance from (px, py) to the segment a-b; shared by both kernel
// sets so that boundary decisions agree bit for bit.
inline double segment_distance_sq(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len_sq = dx * dx + dy * dy;
  double t = 0.0;
  if (len_sq > 0.0) {
    t = ((px - ax) * dx + (py - ay) * dy) / len_sq;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  }
  const double qx = ax + t * dx - px;
  const double qy = ay + t * dy - py;
  return qx * qx + qy * qy;
}

// Bilinear sample weights for one output coordinate (half-pixel centers,
// edge clamped, no prefilter).
struct BilinearTap {
  int i0 = 0;
  int i1 = 0;
  double frac = 0.0;
};

inline BilinearTap bilinear_tap(int dst, int src_len, int dst_len) {
  const double scale = static_cast<double>(src_len) / dst_len;
  double pos = (dst + 0.5) * scale - 0.5;
  if (pos < 0.0) pos = 0.0;
  int i0 = static_cast<int>(pos);
  if (i0 >= src_len - 1) return {src_len - 1, src_len - 1, 0.0};
  return {i0, i0 + 1, pos - i0};
}

inline std::uint8_t round_to_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

}  // namespace stap
