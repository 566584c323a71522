#include "stap/fixtures.hpp"

#include <fstream>
#include <random>

#include "stap/error.hpp"
#include "stap/ingest.hpp"
#include "stap/spatial.hpp"
#include "stap/temporal.hpp"

namespace stap {

namespace {

constexpr int kVideoSide = 64;
constexpr std::int64_t kVideoFrames = 30;
constexpr double kFps = 30.0;

constexpr std::array<AnomalyClass, 3> kFlaggedCycle = {AnomalyClass::Fight, AnomalyClass::Gunshot,
                                                       AnomalyClass::Fire};

// Dominant class gets the bulk; the rest share the remainder unevenly.
std::array<double, kNumAnomalyClasses> leaning_scores(AnomalyClass top, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> minor(2, 12);  // hundredths
  std::array<double, kNumAnomalyClasses> s{};
  double rest = 0.0;
  for (auto c : kAllAnomalyClasses) {
    if (c == top) continue;
    const double v = minor(rng) / 100.0;
    s[static_cast<std::size_t>(c)] = v;
    rest += v;
  }
  s[static_cast<std::size_t>(top)] = 1.0 - rest;
  return s;
}

Detection det(KeyObjectClass k, double conf, double x0, double y0, double x1, double y1) {
  Detection d;
  d.object_class = k;
  d.confidence = conf;
  d.box = BoundingBox::make(x0, y0, x1, y1);
  return d;
}

std::vector<Detection> cell_detections(const FusionCell& c) {
  std::vector<Detection> out;
  const bool person = c.objects.count(KeyObjectClass::Person);
  if (person) {
    auto p = det(KeyObjectClass::Person, 0.88, 2, 2, 10, 14);
    // Head, shoulders, hips: enough joints for a few limbs.
    p.keypoints = std::vector<Keypoint>{{0, 6, 3, 0.9}, {5, 4, 6, 0.9}, {6, 8, 6, 0.9}, {11, 4.5, 10, 0.8},
                                        {12, 7.5, 10, 0.8}};
    out.push_back(std::move(p));
  }
  if (c.objects.count(KeyObjectClass::Firearm)) {
    // Overlapping the person arms the gate; sharing only the x = 10 edge does not.
    out.push_back(c.gate ? det(KeyObjectClass::Firearm, 0.8, 8, 6, 14, 10)
                         : det(KeyObjectClass::Firearm, 0.8, 10, 6, 14, 10));
  }
  if (c.objects.count(KeyObjectClass::Flame)) out.push_back(det(KeyObjectClass::Flame, 0.7, 0, 0, 4, 4));
  if (c.objects.count(KeyObjectClass::Smoke)) out.push_back(det(KeyObjectClass::Smoke, 0.6, 12, 0, 16, 4));
  return out;
}

// Expected fused label, written out longhand from the rules.
AnomalyClass expected_label(const FusionCell& c) {
  if (c.temporal_flag) return c.temporal_class;
  if (c.objects.count(KeyObjectClass::Firearm) && c.gate) return AnomalyClass::Gunshot;
  if (c.objects.count(KeyObjectClass::Flame) || c.objects.count(KeyObjectClass::Smoke)) return AnomalyClass::Fire;
  if (c.objects.count(KeyObjectClass::Person)) return AnomalyClass::Fight;
  return AnomalyClass::Normal;
}

std::vector<Frame> video_frames(SyntheticPattern pattern, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.pattern = pattern;
  spec.width = kVideoSide;
  spec.height = kVideoSide;
  spec.frame_count = kVideoFrames;
  spec.fps = kFps;
  spec.seed = seed;
  std::vector<Frame> frames;
  for (std::int64_t i = 0; i < kVideoFrames; ++i) frames.push_back(synthetic_frame(spec, i));
  return frames;
}

class FileWriter {
 public:
  explicit FileWriter(std::filesystem::path path) : path_(std::move(path)), out_(path_, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path_.string());
  }
  std::ofstream& stream() { return out_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace

FusionCell fusion_cell(std::int64_t window) {
  if (window < 0 || window >= kFusionCells) throw Error("fusion cell out of range: " + std::to_string(window));
  FusionCell c;
  c.window = window;
  c.temporal_flag = window & 1;
  c.temporal_class = c.temporal_flag ? kFlaggedCycle[(window >> 1) % kFlaggedCycle.size()] : AnomalyClass::Normal;
  for (std::size_t k = 0; k < kNumKeyObjectClasses; ++k) {
    if (window & (std::int64_t{1} << (k + 1))) c.objects.insert(kAllKeyObjectClasses[k]);
  }
  c.gate = (window & 32) && c.objects.count(KeyObjectClass::Person) && c.objects.count(KeyObjectClass::Firearm);
  return c;
}

FixtureSet write_fixtures(const std::filesystem::path& dir, std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create fixture directory " + dir.string());

  FixtureSet set;
  std::mt19937_64 rng(seed);

  const std::pair<const char*, SyntheticPattern> videos[] = {
      {"constant.stap", SyntheticPattern::Constant},
      {"checkerboard.stap", SyntheticPattern::Checkerboard},
      {"red_quadrant.stap", SyntheticPattern::RedQuadrant},
      {"alternating.stap", SyntheticPattern::AlternatingMotion},
  };
  for (const auto& [name, pattern] : videos) {
    write_raw_video(dir / name, video_frames(pattern, seed), kFps);
    set.files.push_back(dir / name);
  }

  // Fusion matrix: one 15-frame window per cell, detections on each
  // window's first frame (always analyzed by every frame selection).
  {
    std::vector<Frame> frames;
    const auto per_window = static_cast<std::int64_t>(kDefaultWindowSize);
    for (std::int64_t i = 0; i < kFusionCells * per_window; ++i) {
      const auto shade = static_cast<std::uint8_t>(40 + (i / per_window) * 3);
      frames.push_back(
          Frame::filled(i, i * 1000.0 / kFps, kFusionFrameSide, kFusionFrameSide, shade, shade, shade));
    }
    write_raw_video(dir / "fusion_matrix.stap", frames, kFps);
    set.files.push_back(dir / "fusion_matrix.stap");

    FileWriter spatial(dir / "spatial_fusion.jsonl");
    FileWriter temporal(dir / "temporal_fusion.jsonl");
    FileWriter truth(dir / "truth_fusion.csv");
    truth.stream() << "video_id,window_index,label\n";
    for (std::int64_t w = 0; w < kFusionCells; ++w) {
      const auto cell = fusion_cell(w);
      const auto dets = cell_detections(cell);
      if (!dets.empty()) spatial.stream() << spatial_trace_line(w * per_window, dets) << '\n';
      const AnomalyClass top = cell.temporal_flag ? cell.temporal_class : AnomalyClass::Normal;
      temporal.stream() << temporal_trace_line(w, leaning_scores(top, rng)) << '\n';
      truth.stream() << "fusion_matrix," << w << ',' << to_string(expected_label(cell)) << '\n';
    }
    set.files.push_back(spatial.path());
    set.files.push_back(temporal.path());
    set.files.push_back(truth.path());
  }

  // The synthetic red rule applied offline to the red-quadrant video.
  {
    SyntheticSpatialBackend red(SyntheticSpatialSpec{});
    FileWriter out(dir / "spatial_red.jsonl");
    for (const auto& f : video_frames(SyntheticPattern::RedQuadrant, seed)) {
      const auto dets = red.detect(f);
      if (!dets.empty()) out.stream() << spatial_trace_line(f.index(), dets) << '\n';
    }
    set.files.push_back(out.path());
  }

  {
    FileWriter out(dir / "spatial_empty.jsonl");
    set.files.push_back(out.path());
  }

  // Two windows for the 30-frame videos: one anomalous, one normal.
  {
    FileWriter out(dir / "temporal_two.jsonl");
    out.stream() << temporal_trace_line(0, leaning_scores(AnomalyClass::Fight, rng)) << '\n';
    out.stream() << temporal_trace_line(1, leaning_scores(AnomalyClass::Normal, rng)) << '\n';
    set.files.push_back(out.path());
  }

  {
    FileWriter out(dir / "fusion.ini");
    out.stream() << "[pipeline]\nmode = parallel\n\n"
                 << "[spatial]\nbackend = trace:spatial_fusion.jsonl\n\n"
                 << "[temporal]\nbackend = trace:temporal_fusion.jsonl\n";
    set.files.push_back(out.path());
  }
  return set;
}

}  // namespace stap
