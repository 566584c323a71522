#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stap/core.hpp"

namespace stap {

double iou(const BoundingBox& a, const BoundingBox& b);

enum class FrameSelection : std::uint8_t { EvenlySpaced, First, All };
std::string_view to_string(FrameSelection s);
FrameSelection parse_frame_selection(std::string_view text);

struct SpatialConfig {
  double confidence_threshold = 0.25;
  std::size_t frames_per_window = 3;
  FrameSelection frame_selection = FrameSelection::EvenlySpaced;

  void validate(std::size_t window_size) const;
};

// Window positions the spatial stage analyzes. EvenlySpaced steps by
// ceil(window_len / frames_per_window) starting at position 0.
std::vector<std::size_t> select_frames(std::size_t window_len, const SpatialConfig& cfg);

// Per-frame detector. Implementations must accept concurrent detect() calls.
class SpatialBackend {
 public:
  virtual ~SpatialBackend() = default;
  virtual std::vector<Detection> detect(const Frame& frame) = 0;
  virtual bool has_pose() const { return false; }
  virtual std::string describe() const = 0;
};

// All-or-nothing: any detect() failure becomes a BackendError for the
// window, tagged with the frame index.
SpatialResult analyze_window(const SequenceWindow& w, SpatialBackend& backend, const SpatialConfig& cfg);

// True iff some analyzed frame holds a firearm and a person whose boxes
// overlap with strictly positive IoU.
bool person_gun_gate(const SpatialResult& r);

std::set<KeyObjectClass> key_object_summary(const SpatialResult& r);

// Replays a JSON Lines detection trace keyed by frame index.
class TraceSpatialBackend final : public SpatialBackend {
 public:
  explicit TraceSpatialBackend(const std::filesystem::path& path);
  // Parses trace text directly; `origin` is used in error messages.
  static TraceSpatialBackend from_text(const std::string& text, const std::string& origin = "<memory>");

  std::vector<Detection> detect(const Frame& frame) override;
  bool has_pose() const override { return has_pose_; }
  std::string describe() const override { return "trace:" + origin_; }

  const std::map<std::int64_t, std::vector<Detection>>& entries() const { return entries_; }

 private:
  TraceSpatialBackend() = default;
  void load(std::istream& in);

  std::string origin_;
  std::map<std::int64_t, std::vector<Detection>> entries_;
  bool has_pose_ = false;
};

std::string spatial_trace_line(std::int64_t frame, const std::vector<Detection>& dets);

enum class SpatialRule : std::uint8_t { None, Red };

struct SyntheticSpatialSpec {
  double latency_ms = 0.0;
  SpatialRule rule = SpatialRule::Red;
  double min_red_fraction = 0.01;
  double confidence = 0.9;
  std::set<std::int64_t> fail_frames;
};

// Sleeps latency_ms per call, then applies a content rule. The Red rule
// reports one Flame box around the red-dominant pixels when they cover at
// least min_red_fraction of the frame.
class SyntheticSpatialBackend final : public SpatialBackend {
 public:
  explicit SyntheticSpatialBackend(SyntheticSpatialSpec spec) : spec_(std::move(spec)) {}

  std::vector<Detection> detect(const Frame& frame) override;
  std::string describe() const override;

  const SyntheticSpatialSpec& spec() const { return spec_; }
  std::int64_t calls() const { return calls_.load(); }

 private:
  SyntheticSpatialSpec spec_;
  std::atomic<std::int64_t> calls_{0};
};

SyntheticSpatialSpec parse_synthetic_spatial_spec(std::string_view options);

}  // namespace stap
