#pragma once

#include <span>
#include <string_view>

#include "stap/core.hpp"
#include "stap/kernels.hpp"

namespace stap {

enum class PreprocessVariant : std::uint8_t {
  Identity,
  MaskKeepOriginal,
  MaskBlackFallback,
  SkeletonOnBackground,
  SkeletonOnBlack,
};
// CLI spellings: identity, mask-keep, mask-black, skeleton-bg, skeleton-black.
std::string_view to_string(PreprocessVariant v);
PreprocessVariant parse_preprocess_variant(std::string_view text);

enum class MaskFallback : std::uint8_t { KeepOriginal, BlackFrame };
enum class SkeletonMode : std::uint8_t { OnBackground, OnBlack };

struct SkeletonStyle {
  double line_thickness_px = 2.0;
  double min_joint_conf = 0.3;
};

struct PreprocessDiagnostics {
  std::size_t persons_without_keypoints = 0;
  std::size_t fallback_frames = 0;  // mask variants with nothing detected
};

// Keeps pixels inside the union of detection boxes and zeroes the rest.
// With no detections, the fallback decides: unchanged or all black.
Frame apply_mask(const Frame& f, std::span<const Detection> dets, MaskFallback fallback);

// Draws COCO limbs for every person that carries keypoints, in person order
// then limb order. Non-person detections are ignored.
Frame render_skeleton(const Frame& f, std::span<const Detection> persons, SkeletonMode mode,
                      const SkeletonStyle& style = {}, PreprocessDiagnostics* diag = nullptr);

Rgb limb_color(std::size_t limb);

// Applies the variant to every frame. Frames the spatial stage skipped reuse
// the detections of the nearest preceding analyzed frame.
SequenceWindow enrich_window(const SequenceWindow& w, const SpatialResult& r, PreprocessVariant v,
                             const SkeletonStyle& style = {}, PreprocessDiagnostics* diag = nullptr);

}  // namespace stap
