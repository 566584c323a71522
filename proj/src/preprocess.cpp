#include "stap/preprocess.hpp"

#include <array>
#include <vector>

#include "stap/error.hpp"

namespace stap {

std::string_view to_string(PreprocessVariant v) {
  switch (v) {
    case PreprocessVariant::Identity: return "identity";
    case PreprocessVariant::MaskKeepOriginal: return "mask-keep";
    case PreprocessVariant::MaskBlackFallback: return "mask-black";
    case PreprocessVariant::SkeletonOnBackground: return "skeleton-bg";
    case PreprocessVariant::SkeletonOnBlack: return "skeleton-black";
  }
  return "identity";
}

PreprocessVariant parse_preprocess_variant(std::string_view text) {
  for (auto v : {PreprocessVariant::Identity, PreprocessVariant::MaskKeepOriginal, PreprocessVariant::MaskBlackFallback,
                 PreprocessVariant::SkeletonOnBackground, PreprocessVariant::SkeletonOnBlack}) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown preprocess variant '" + std::string(text) + "'");
}

Frame apply_mask(const Frame& f, std::span<const Detection> dets, MaskFallback fallback) {
  if (dets.empty()) {
    if (fallback == MaskFallback::KeepOriginal) return f;
    return f.with_pixels(f.width(), f.height(), std::vector<std::uint8_t>(f.byte_size(), 0));
  }
  std::vector<BoundingBox> boxes;
  boxes.reserve(dets.size());
  for (const auto& d : dets) boxes.push_back(d.box);
  std::vector<std::uint8_t> out(f.byte_size());
  kernels::mask_outside_boxes(f.pixels(), f.width(), f.height(), boxes, out);
  return f.with_pixels(f.width(), f.height(), std::move(out));
}

Rgb limb_color(std::size_t limb) {
  // Legs, torso, arms, head.
  static constexpr std::array<Rgb, 4> kPalette = {{{255, 128, 0}, {255, 255, 255}, {0, 200, 255}, {0, 255, 0}}};
  if (limb < 5) return kPalette[0];
  if (limb < 8) return kPalette[1];
  if (limb < 12) return kPalette[2];
  return kPalette[3];
}

Frame render_skeleton(const Frame& f, std::span<const Detection> persons, SkeletonMode mode,
                      const SkeletonStyle& style, PreprocessDiagnostics* diag) {
  std::vector<std::uint8_t> canvas;
  if (mode == SkeletonMode::OnBackground) {
    const auto px = f.pixels();
    canvas.assign(px.begin(), px.end());
  } else {
    canvas.assign(f.byte_size(), 0);
  }
  bool drew = false;
  for (const auto& person : persons) {
    if (person.object_class != KeyObjectClass::Person) continue;
    if (!person.keypoints) {
      if (diag) ++diag->persons_without_keypoints;
      continue;
    }
    std::array<const Keypoint*, kNumCocoJoints> joints{};
    for (const auto& kp : *person.keypoints) {
      if (kp.joint_id >= 0 && kp.joint_id < kNumCocoJoints) joints[static_cast<std::size_t>(kp.joint_id)] = &kp;
    }
    for (std::size_t limb = 0; limb < kCocoLimbs.size(); ++limb) {
      const auto* a = joints[static_cast<std::size_t>(kCocoLimbs[limb].first)];
      const auto* b = joints[static_cast<std::size_t>(kCocoLimbs[limb].second)];
      if (!a || !b || a->confidence < style.min_joint_conf || b->confidence < style.min_joint_conf) continue;
      kernels::draw_segment(canvas, f.width(), f.height(), a->x, a->y, b->x, b->y, style.line_thickness_px,
                            limb_color(limb));
      drew = true;
    }
  }
  if (!drew && mode == SkeletonMode::OnBackground) return f;
  return f.with_pixels(f.width(), f.height(), std::move(canvas));
}

SequenceWindow enrich_window(const SequenceWindow& w, const SpatialResult& r, PreprocessVariant v,
                             const SkeletonStyle& style, PreprocessDiagnostics* diag) {
  if (v == PreprocessVariant::Identity) return w;
  SequenceWindow out;
  out.window_index = w.window_index;
  out.padded = w.padded;
  out.frames.reserve(w.frames.size());
  static const std::vector<Detection> kNone;
  const std::vector<Detection>* held = &kNone;
  for (const auto& frame : w.frames) {
    if (const auto it = r.frames.find(frame.index()); it != r.frames.end()) held = &it->second;
    const std::span<const Detection> dets(*held);
    switch (v) {
      case PreprocessVariant::MaskKeepOriginal:
      case PreprocessVariant::MaskBlackFallback: {
        const auto fallback =
            v == PreprocessVariant::MaskKeepOriginal ? MaskFallback::KeepOriginal : MaskFallback::BlackFrame;
        if (dets.empty() && diag) ++diag->fallback_frames;
        out.frames.push_back(apply_mask(frame, dets, fallback));
        break;
      }
      case PreprocessVariant::SkeletonOnBackground:
        out.frames.push_back(render_skeleton(frame, dets, SkeletonMode::OnBackground, style, diag));
        break;
      case PreprocessVariant::SkeletonOnBlack:
        out.frames.push_back(render_skeleton(frame, dets, SkeletonMode::OnBlack, style, diag));
        break;
      case PreprocessVariant::Identity:
        out.frames.push_back(frame);
        break;
    }
  }
  return out;
}

}  // namespace stap
