#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stap/core.hpp"
#include "stap/kernels.hpp"

namespace stap {

enum class TailPolicy : std::uint8_t { Drop, PadLast };
std::string_view to_string(TailPolicy t);
TailPolicy parse_tail_policy(std::string_view text);

struct SamplingPolicy {
  std::size_t frame_interval = 1;
  std::size_t window_size = kDefaultWindowSize;
  std::size_t window_stride = kDefaultWindowSize;  // in sampled frames
  TailPolicy tail_policy = TailPolicy::Drop;

  void validate() const;
};

struct SourceInfo {
  int width = 0;
  int height = 0;
  double fps = 30.0;
  std::optional<std::int64_t> frame_count;  // nullopt for continuous streams

  bool continuous() const { return !frame_count.has_value(); }
  double duration_ms() const { return frame_count ? static_cast<double>(*frame_count) * 1000.0 / fps : 0.0; }
};

// Pull-based frame stream. next() returns nullopt exactly once at the end of
// a finished video and throws SourceError on a decode failure.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual SourceInfo info() const = 0;
  virtual std::optional<Frame> next() = 0;
};

// Packed raw video: "STAP1", u32 width, u32 height, u64 frame_count,
// u32 fps_milli (all little-endian), then frame_count RGB8 planes.
inline constexpr std::size_t kRawHeaderSize = 25;

class RawVideoSource final : public FrameSource {
 public:
  explicit RawVideoSource(const std::filesystem::path& path);

  SourceInfo info() const override { return info_; }
  std::optional<Frame> next() override;

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  SourceInfo info_;
  std::int64_t position_ = 0;
  bool ended_ = false;
};

class RawVideoWriter {
 public:
  RawVideoWriter(const std::filesystem::path& path, int width, int height, double fps);
  ~RawVideoWriter();
  RawVideoWriter(const RawVideoWriter&) = delete;
  RawVideoWriter& operator=(const RawVideoWriter&) = delete;

  void write(const Frame& frame);
  // Patches the frame count into the header. Called by the destructor too.
  void close();

 private:
  std::ofstream out_;
  int width_;
  int height_;
  std::uint64_t count_ = 0;
  bool closed_ = false;
};

void write_raw_video(const std::filesystem::path& path, const std::vector<Frame>& frames, double fps);

// Directory of "frame_%08d.rgb" files plus a "meta" file holding
// width=, height= and fps= lines.
class FrameDirectorySource final : public FrameSource {
 public:
  explicit FrameDirectorySource(const std::filesystem::path& dir);

  SourceInfo info() const override { return info_; }
  std::optional<Frame> next() override;

 private:
  std::vector<std::pair<std::int64_t, std::filesystem::path>> files_;
  std::size_t cursor_ = 0;
  SourceInfo info_;
};

void write_frame_directory(const std::filesystem::path& dir, const std::vector<Frame>& frames, double fps);

enum class SyntheticPattern : std::uint8_t { Constant, Checkerboard, RedQuadrant, AlternatingMotion, Noise };
SyntheticPattern parse_synthetic_pattern(std::string_view text);
std::string_view to_string(SyntheticPattern p);

struct SyntheticSpec {
  SyntheticPattern pattern = SyntheticPattern::Constant;
  int width = 64;
  int height = 64;
  std::optional<std::int64_t> frame_count = 30;  // nullopt: never ends
  double fps = 30.0;
  std::uint64_t seed = 0;
  bool realtime = false;  // pace frames at fps
  int cell = 8;           // checkerboard square side
  Rgb color{90, 90, 90};  // constant pattern
};

Frame synthetic_frame(const SyntheticSpec& spec, std::int64_t index);

class SyntheticSource final : public FrameSource {
 public:
  explicit SyntheticSource(SyntheticSpec spec);

  SourceInfo info() const override;
  std::optional<Frame> next() override;

 private:
  SyntheticSpec spec_;
  std::int64_t position_ = 0;
  std::optional<std::chrono::steady_clock::time_point> start_;
};

// "synthetic:pattern=checkerboard,frames=30,width=64,height=64,fps=30",
// a directory (frame directory) or a file (packed raw video).
std::unique_ptr<FrameSource> open_source(const std::string& spec);

struct StreamFault {
  std::int64_t position = 0;
  std::string message;
};

using StreamItem = std::variant<Frame, StreamFault>;

// Keeps frames whose source index is a multiple of frame_interval. A source
// failure is surfaced once as a StreamFault, after which the stream ends.
class Sampler {
 public:
  Sampler(FrameSource& source, const SamplingPolicy& policy);

  std::optional<StreamItem> next();

 private:
  FrameSource& source_;
  std::size_t interval_;
  std::int64_t last_index_ = -1;
  bool done_ = false;
};

// Convenience for finished sources; throws SourceError on a fault.
std::vector<Frame> sample_all(FrameSource& source, const SamplingPolicy& policy);

Frame resize_to_model(const Frame& f);
SequenceWindow resize_window(const SequenceWindow& w);

// Incremental window assembly. Window k covers sampled frames
// [k*stride, k*stride + size). Frames may be pushed one at a time or in
// bulk with identical results.
class Windower {
 public:
  explicit Windower(const SamplingPolicy& policy);

  std::vector<SequenceWindow> push(const Frame& frame);
  std::vector<SequenceWindow> finish();

  std::int64_t windows_emitted() const { return next_window_; }

 private:
  SequenceWindow take(std::size_t count);

  SamplingPolicy policy_;
  std::deque<std::pair<std::int64_t, Frame>> buffer_;  // (sampled ordinal, frame)
  std::int64_t received_ = 0;
  std::int64_t next_start_ = 0;
  std::int64_t covered_until_ = -1;  // last sampled ordinal inside an emitted window
  std::int64_t next_window_ = 0;
  bool finished_ = false;
};

std::vector<SequenceWindow> make_windows(const std::vector<Frame>& frames, const SamplingPolicy& policy);

}  // namespace stap
