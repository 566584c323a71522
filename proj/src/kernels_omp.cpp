#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "stap/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stap::kernels {

namespace {

// Below this many output pixels the thread fork costs more than the loop.
constexpr std::ptrdiff_t kParallelMinPixels = 4096;

}  // namespace

void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h, std::span<std::uint8_t> dst, int dst_w,
                     int dst_h) {
  std::vector<BilinearTap> xs(static_cast<std::size_t>(dst_w));
  for (int x = 0; x < dst_w; ++x) xs[static_cast<std::size_t>(x)] = bilinear_tap(x, src_w, dst_w);
  const std::ptrdiff_t rows = dst_h;
  const std::size_t src_stride = static_cast<std::size_t>(src_w) * 3;
  const std::size_t dst_stride = static_cast<std::size_t>(dst_w) * 3;

#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(dst_w) * dst_h > kParallelMinPixels)
  for (std::ptrdiff_t y = 0; y < rows; ++y) {
    const BilinearTap ty = bilinear_tap(static_cast<int>(y), src_h, dst_h);
    const std::uint8_t* row0 = src.data() + static_cast<std::size_t>(ty.i0) * src_stride;
    const std::uint8_t* row1 = src.data() + static_cast<std::size_t>(ty.i1) * src_stride;
    std::uint8_t* out = dst.data() + static_cast<std::size_t>(y) * dst_stride;
    for (int x = 0; x < dst_w; ++x) {
      const BilinearTap& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const double p00 = row0[tx.i0 * 3 + c];
        const double p01 = row0[tx.i1 * 3 + c];
        const double p10 = row1[tx.i0 * 3 + c];
        const double p11 = row1[tx.i1 * 3 + c];
        const double top = (1.0 - tx.frac) * p00 + tx.frac * p01;
        const double bottom = (1.0 - tx.frac) * p10 + tx.frac * p11;
        out[x * 3 + c] = round_to_u8((1.0 - ty.frac) * top + ty.frac * bottom);
      }
    }
  }
}

void mask_outside_boxes(std::span<const std::uint8_t> src, int w, int h, std::span<const BoundingBox> boxes,
                        std::span<std::uint8_t> dst) {
  // Per box: the covered column interval, found once; rows are tested per row.
  struct Span {
    int x0, x1;  // half-open, empty when x0 >= x1
    const BoundingBox* box;
  };
  std::vector<Span> spans;
  spans.reserve(boxes.size());
  for (const auto& box : boxes) {
    int x0 = w, x1 = 0;
    for (int x = 0; x < w; ++x) {
      const double cx = x + 0.5;
      if (cx >= box.x_min && cx < box.x_max) {
        x0 = std::min(x0, x);
        x1 = x + 1;
      }
    }
    if (x0 < x1) spans.push_back({x0, x1, &box});
  }

  const std::size_t stride = static_cast<std::size_t>(w) * 3;
  const std::ptrdiff_t rows = h;
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(w) * h > kParallelMinPixels)
  for (std::ptrdiff_t y = 0; y < rows; ++y) {
    std::uint8_t* out = dst.data() + static_cast<std::size_t>(y) * stride;
    const std::uint8_t* in = src.data() + static_cast<std::size_t>(y) * stride;
    std::fill(out, out + stride, std::uint8_t{0});
    const double cy = static_cast<double>(y) + 0.5;
    for (const auto& s : spans) {
      if (!(cy >= s.box->y_min && cy < s.box->y_max)) continue;
      std::copy(in + s.x0 * 3, in + s.x1 * 3, out + s.x0 * 3);
    }
  }
}

void draw_segment(std::span<std::uint8_t> canvas, int w, int h, double x0, double y0, double x1, double y1,
                  double thickness, Rgb color) {
  const double r = thickness / 2.0;
  const double r_sq = r * r;
  const int bx0 = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - r)) - 1);
  const int bx1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(x0, x1) + r)) + 1);
  const int by0 = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - r)) - 1);
  const int by1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(y0, y1) + r)) + 1);
  if (bx0 > bx1 || by0 > by1) return;

  const std::size_t stride = static_cast<std::size_t>(w) * 3;
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(bx1 - bx0 + 1) * (by1 - by0 + 1) > kParallelMinPixels)
  for (int y = by0; y <= by1; ++y) {
    std::uint8_t* row = canvas.data() + static_cast<std::size_t>(y) * stride;
    for (int x = bx0; x <= bx1; ++x) {
      if (segment_distance_sq(x + 0.5, y + 0.5, x0, y0, x1, y1) < r_sq) {
        row[x * 3] = color.r;
        row[x * 3 + 1] = color.g;
        row[x * 3 + 2] = color.b;
      }
    }
  }
}

double mean_abs_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(std::min(a.size(), b.size()));
  if (n == 0) return 0.0;
  long long total = 0;
#pragma omp parallel for reduction(+ : total) schedule(static) if (n > kParallelMinPixels)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    total += std::abs(static_cast<int>(a[static_cast<std::size_t>(i)]) - static_cast<int>(b[static_cast<std::size_t>(i)]));
  }
  return static_cast<double>(total) / static_cast<double>(n);
}

RedRegion find_red_region(std::span<const std::uint8_t> px, int w, int h) {
  std::int64_t count = 0;
  int x_min = w, y_min = h, x_max = -1, y_max = -1;
  const std::ptrdiff_t rows = h;
#pragma omp parallel for schedule(static) reduction(+ : count) reduction(min : x_min, y_min) \
    reduction(max : x_max, y_max) if (static_cast<std::ptrdiff_t>(w) * h > kParallelMinPixels)
  for (std::ptrdiff_t y = 0; y < rows; ++y) {
    const std::uint8_t* row = px.data() + static_cast<std::size_t>(y) * w * 3;
    for (int x = 0; x < w; ++x) {
      if (!is_red_pixel(row[x * 3], row[x * 3 + 1], row[x * 3 + 2])) continue;
      ++count;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, static_cast<int>(y));
      y_max = std::max(y_max, static_cast<int>(y));
    }
  }
  if (count == 0) return {};
  return {count, x_min, y_min, x_max, y_max};
}

}  // namespace stap::kernels
