#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's own geometry or arithmetic helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "stap/core.hpp"

namespace oracle {

using Pixels = std::vector<std::uint8_t>;

inline Pixels bilinear(const Pixels& src, int w, int h, int dw, int dh) {
  Pixels out(static_cast<std::size_t>(dw) * dh * 3);
  auto src_coord = [](int d, int n, int dn, int& lo, int& hi, double& f) {
    double s = (d + 0.5) * (static_cast<double>(n) / dn) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    lo = static_cast<int>(std::floor(s));
    hi = std::min(lo + 1, n - 1);
    f = lo == hi ? 0.0 : s - lo;
  };
  for (int y = 0; y < dh; ++y) {
    int y0, y1;
    double fy;
    src_coord(y, h, dh, y0, y1, fy);
    for (int x = 0; x < dw; ++x) {
      int x0, x1;
      double fx;
      src_coord(x, w, dw, x0, x1, fx);
      for (int c = 0; c < 3; ++c) {
        auto p = [&](int xx, int yy) { return static_cast<double>(src[(static_cast<std::size_t>(yy) * w + xx) * 3 + c]); };
        const double top = (1.0 - fx) * p(x0, y0) + fx * p(x1, y0);
        const double bottom = (1.0 - fx) * p(x0, y1) + fx * p(x1, y1);
        const double v = (1.0 - fy) * top + fy * bottom;
        out[(static_cast<std::size_t>(y) * dw + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

// Pixel (x, y) is kept when its center falls inside some box, half-open on
// the max side.
inline Pixels mask(const Pixels& src, int w, int h, const std::vector<stap::BoundingBox>& boxes) {
  Pixels out(src.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const stap::BoundingBox& b) {
        return b.x_min <= cx && cx < b.x_max && b.y_min <= cy && cy < b.y_max;
      });
      if (!inside) continue;
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(i), 3, out.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  return out;
}

// Euclidean distance from p to segment ab via the clamped projection.
inline double distance_to_segment(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double wx = px - ax, wy = py - ay;
  const double c1 = vx * wx + vy * wy;
  if (c1 <= 0.0) return std::hypot(wx, wy);
  const double c2 = vx * vx + vy * vy;
  if (c2 <= c1) return std::hypot(px - bx, py - by);
  const double t = c1 / c2;
  return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

struct Segment {
  double ax, ay, bx, by;
};

// Limbs a skeleton renderer should draw for one person.
inline std::vector<Segment> drawn_limbs(const stap::Detection& person, double min_conf) {
  std::vector<Segment> out;
  if (person.object_class != stap::KeyObjectClass::Person || !person.keypoints) return out;
  std::map<int, stap::Keypoint> joints;
  for (const auto& k : *person.keypoints) joints[k.joint_id] = k;
  for (const auto& [a, b] : stap::kCocoLimbs) {
    if (!joints.count(a) || !joints.count(b)) continue;
    const auto& ja = joints[a];
    const auto& jb = joints[b];
    if (ja.confidence < min_conf || jb.confidence < min_conf) continue;
    out.push_back({ja.x, ja.y, jb.x, jb.y});
  }
  return out;
}

// Set of pixel offsets within distance < thickness/2 of any segment.
inline std::set<std::pair<int, int>> raster(const std::vector<Segment>& segs, int w, int h, double thickness) {
  std::set<std::pair<int, int>> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const auto& s : segs) {
        if (distance_to_segment(x + 0.5, y + 0.5, s.ax, s.ay, s.bx, s.by) < thickness / 2.0) {
          out.insert({x, y});
          break;
        }
      }
    }
  }
  return out;
}

inline std::set<std::pair<int, int>> nonzero(const stap::Frame& f) {
  std::set<std::pair<int, int>> out;
  const auto px = f.pixels();
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * f.width() + x) * 3;
      if (px[i] || px[i + 1] || px[i + 2]) out.insert({x, y});
    }
  }
  return out;
}

// The fusion rules written out as a brute-force decision list.
struct FusionOut {
  stap::AnomalyClass label;
  stap::PredictionSource source;
};

inline FusionOut fuse(bool flag, stap::AnomalyClass argmax, unsigned subset, bool gate, bool gate_required = true,
                      bool person_triggers_fight = true) {
  using stap::AnomalyClass;
  if (flag) return {argmax, stap::PredictionSource::Temporal};
  const bool person = subset & 1u, firearm = subset & 2u, flame = subset & 4u, smoke = subset & 8u;
  if (firearm && (gate || !gate_required)) return {AnomalyClass::Gunshot, stap::PredictionSource::SpatialOverride};
  if (flame || smoke) return {AnomalyClass::Fire, stap::PredictionSource::SpatialOverride};
  if (person && person_triggers_fight) return {AnomalyClass::Fight, stap::PredictionSource::SpatialOverride};
  return {AnomalyClass::Normal, stap::PredictionSource::Temporal};
}

// Non-overlapping (or strided) windows over n sampled frames, Drop tail.
inline std::size_t window_count(std::size_t frames, std::size_t interval, std::size_t size, std::size_t stride) {
  std::vector<std::size_t> sampled;
  for (std::size_t i = 0; i < frames; ++i) {
    if (i % interval == 0) sampled.push_back(i);
  }
  std::size_t count = 0;
  for (std::size_t start = 0; start + size <= sampled.size(); start += stride) ++count;
  return count;
}

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;  // percent
};

// Support-weighted one-vs-rest metrics over labels 0..k-1.
inline Metrics weighted(const std::vector<int>& truth, const std::vector<int>& pred, int k) {
  Metrics m;
  const double n = static_cast<double>(truth.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  m.accuracy = 100.0 * correct / n;
  for (int c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == c && truth[i] == c) ++tp;
      else if (pred[i] == c) ++fp;
      else if (truth[i] == c) ++fn;
    }
    const double support = tp + fn;
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = support > 0 ? tp / support : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    m.precision += support * p;
    m.recall += support * r;
    m.f1 += support * f;
  }
  m.precision *= 100.0 / n;
  m.recall *= 100.0 / n;
  m.f1 *= 100.0 / n;
  return m;
}

inline stap::BoundingBox random_box(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(0.0, extent);
  double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return stap::BoundingBox::make(x0, y0, x1, y1);
}

inline Pixels random_pixels(std::mt19937_64& rng, int w, int h) {
  Pixels px(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : px) v = static_cast<std::uint8_t>(rng() >> 56);
  return px;
}

}  // namespace oracle
