#include <cstdlib>

#include "stap/kernels.hpp"

namespace stap::reference {

void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h, std::span<std::uint8_t> dst, int dst_w,
                     int dst_h) {
  auto at = [&](int x, int y, int c) -> double { return src[(static_cast<std::size_t>(y) * src_w + x) * 3 + c]; };
  for (int y = 0; y < dst_h; ++y) {
    const BilinearTap ty = bilinear_tap(y, src_h, dst_h);
    for (int x = 0; x < dst_w; ++x) {
      const BilinearTap tx = bilinear_tap(x, src_w, dst_w);
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - tx.frac) * at(tx.i0, ty.i0, c) + tx.frac * at(tx.i1, ty.i0, c);
        const double bottom = (1.0 - tx.frac) * at(tx.i0, ty.i1, c) + tx.frac * at(tx.i1, ty.i1, c);
        dst[(static_cast<std::size_t>(y) * dst_w + x) * 3 + c] = round_to_u8((1.0 - ty.frac) * top + ty.frac * bottom);
      }
    }
  }
}

void mask_outside_boxes(std::span<const std::uint8_t> src, int w, int h, std::span<const BoundingBox> boxes,
                        std::span<std::uint8_t> dst) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool keep = false;
      for (const auto& box : boxes) {
        if (box_covers_pixel(box, x, y)) {
          keep = true;
          break;
        }
      }
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) dst[i + c] = keep ? src[i + c] : 0;
    }
  }
}

void draw_segment(std::span<std::uint8_t> canvas, int w, int h, double x0, double y0, double x1, double y1,
                  double thickness, Rgb color) {
  const double r = thickness / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (segment_distance_sq(x + 0.5, y + 0.5, x0, y0, x1, y1) >= r * r) continue;
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
      canvas[i] = color.r;
      canvas[i + 1] = color.g;
      canvas[i + 2] = color.b;
    }
  }
}

double mean_abs_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  if (n == 0) return 0.0;
  long long total = 0;
  for (std::size_t i = 0; i < n; ++i) total += std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i]));
  return static_cast<double>(total) / static_cast<double>(n);
}

RedRegion find_red_region(std::span<const std::uint8_t> px, int w, int h) {
  RedRegion out;
  out.x_min = w;
  out.y_min = h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
      if (!is_red_pixel(px[i], px[i + 1], px[i + 2])) continue;
      ++out.count;
      if (x < out.x_min) out.x_min = x;
      if (x > out.x_max) out.x_max = x;
      if (y < out.y_min) out.y_min = y;
      if (y > out.y_max) out.y_max = y;
    }
  }
  if (out.count == 0) return {};
  return out;
}

}  // namespace stap::reference
