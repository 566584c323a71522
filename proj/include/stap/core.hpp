#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace stap {

// Order matters: it is the argmax tie-break order and the report column order.
enum class AnomalyClass : std::uint8_t { Fight = 0, Gunshot = 1, Fire = 2, Normal = 3 };
inline constexpr std::size_t kNumAnomalyClasses = 4;
inline constexpr std::array<AnomalyClass, kNumAnomalyClasses> kAllAnomalyClasses = {
    AnomalyClass::Fight, AnomalyClass::Gunshot, AnomalyClass::Fire, AnomalyClass::Normal};

enum class KeyObjectClass : std::uint8_t { Person = 0, Firearm = 1, Flame = 2, Smoke = 3 };
inline constexpr std::size_t kNumKeyObjectClasses = 4;
inline constexpr std::array<KeyObjectClass, kNumKeyObjectClasses> kAllKeyObjectClasses = {
    KeyObjectClass::Person, KeyObjectClass::Firearm, KeyObjectClass::Flame, KeyObjectClass::Smoke};

// Four-class runs use every AnomalyClass; three-class runs drop Fire.
enum class ClassProfile : std::uint8_t { ThreeClass = 3, FourClass = 4 };

std::vector<AnomalyClass> profile_classes(ClassProfile profile);
bool profile_contains(ClassProfile profile, AnomalyClass c);
ClassProfile parse_profile(std::string_view text);

std::string_view to_string(AnomalyClass c);
std::string_view to_string(KeyObjectClass k);
std::string_view display_name(AnomalyClass c);  // "Fight", "Gunshot", ...
AnomalyClass parse_anomaly_class(std::string_view text);
KeyObjectClass parse_key_object_class(std::string_view text);

AnomalyClass associated_anomaly(KeyObjectClass k);

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  // Throws stap::Error when a min exceeds its max.
  static BoundingBox make(double x0, double y0, double x1, double y1);

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool degenerate() const { return width() <= 0.0 || height() <= 0.0; }
  bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// COCO-17 joint ids.
struct Keypoint {
  int joint_id = 0;
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

inline constexpr int kNumCocoJoints = 17;
// Standard 19-limb COCO skeleton, drawing order.
inline constexpr std::array<std::pair<int, int>, 19> kCocoLimbs = {{
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
    {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
    {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6},
}};

struct Detection {
  KeyObjectClass object_class = KeyObjectClass::Person;
  double confidence = 0.0;
  BoundingBox box;
  std::optional<std::vector<Keypoint>> keypoints;

  // Checks confidence range, keypoint ownership and joint id uniqueness.
  void validate() const;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Immutable RGB8 image. Pixel storage is shared between copies.
class Frame {
 public:
  Frame() = default;
  Frame(std::int64_t index, double timestamp_ms, int width, int height, std::vector<std::uint8_t> pixels);

  static Frame filled(std::int64_t index, double timestamp_ms, int width, int height, std::uint8_t r,
                      std::uint8_t g, std::uint8_t b);

  std::int64_t index() const { return index_; }
  double timestamp_ms() const { return timestamp_ms_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const std::uint8_t> pixels() const;
  std::size_t byte_size() const { return static_cast<std::size_t>(width_) * height_ * 3; }

  // Same image, new position in a stream.
  Frame with_position(std::int64_t index, double timestamp_ms) const;
  // Same position, new image.
  Frame with_pixels(int width, int height, std::vector<std::uint8_t> pixels) const;

  bool same_pixels(const Frame& other) const;

 private:
  std::int64_t index_ = 0;
  double timestamp_ms_ = 0.0;
  int width_ = 0;
  int height_ = 0;
  std::shared_ptr<const std::vector<std::uint8_t>> pixels_;
};

inline constexpr int kModelSide = 112;
inline constexpr std::size_t kDefaultWindowSize = 15;

struct SequenceWindow {
  std::int64_t window_index = 0;
  std::vector<Frame> frames;
  std::size_t padded = 0;  // trailing repeats of the last real frame

  std::pair<std::int64_t, std::int64_t> source_span() const;
  bool model_space() const;
  // Throws InvalidWindow unless indices strictly increase over the real
  // frames (and, when required, every frame is kModelSide square).
  void validate(bool require_model_space) const;
};

struct TemporalResult {
  ClassProfile profile = ClassProfile::FourClass;
  std::array<double, kNumAnomalyClasses> scores{};
  AnomalyClass argmax_class = AnomalyClass::Normal;

  double score(AnomalyClass c) const { return scores[static_cast<std::size_t>(c)]; }

  // Renormalizes non-negative raw scores to sum 1 and fixes the argmax.
  // Classes outside the profile are forced to zero.
  static TemporalResult from_scores(std::array<double, kNumAnomalyClasses> raw,
                                    ClassProfile profile = ClassProfile::FourClass);
  static TemporalResult certain(AnomalyClass c, ClassProfile profile = ClassProfile::FourClass);
};

AnomalyClass argmax_with_tiebreak(const std::array<double, kNumAnomalyClasses>& scores);

struct SpatialResult {
  std::int64_t window_index = 0;
  std::pair<std::int64_t, std::int64_t> source_span{0, 0};
  std::map<std::int64_t, std::vector<Detection>> frames;  // analyzed frame index -> detections

  bool empty() const;
};

enum class PredictionSource : std::uint8_t { Temporal, SpatialOverride, TemporalOnSerial };
std::string_view to_string(PredictionSource s);
PredictionSource parse_prediction_source(std::string_view text);

struct StageLatency {
  double spatial_ms = 0.0;
  double preprocess_ms = 0.0;
  double temporal_ms = 0.0;
  double fusion_ms = 0.0;
  double total_ms = 0.0;
};

struct AnomalyPrediction {
  std::int64_t window_index = 0;
  std::pair<std::int64_t, std::int64_t> source_span{0, 0};
  double t_start_ms = 0.0;
  AnomalyClass label = AnomalyClass::Normal;
  PredictionSource source = PredictionSource::Temporal;
  std::array<double, kNumAnomalyClasses> scores{};
  ClassProfile profile = ClassProfile::FourClass;
  StageLatency latency;
};

// Canonical JSON forms used by traces and reports.
nlohmann::ordered_json to_json(const BoundingBox& b);
nlohmann::ordered_json to_json(const Detection& d);
nlohmann::ordered_json to_json(const TemporalResult& t);
nlohmann::ordered_json to_json(const SpatialResult& s);
nlohmann::ordered_json scores_to_json(const std::array<double, kNumAnomalyClasses>& scores, ClassProfile profile);
nlohmann::ordered_json to_json(const StageLatency& l);
nlohmann::ordered_json to_json(const AnomalyPrediction& p, bool include_timing);

BoundingBox box_from_json(const nlohmann::json& j);
Detection detection_from_json(const nlohmann::json& j);

}  // namespace stap
