#include "stap/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "stap/error.hpp"

namespace stap {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

MissingLabel::MissingLabel(std::vector<std::int64_t> windows)
    : Error([&] {
        std::string msg = "no ground-truth label for window(s):";
        for (auto w : windows) msg += " " + std::to_string(w);
        return msg;
      }()),
      windows_(std::move(windows)) {}

std::vector<AnomalyClass> profile_classes(ClassProfile profile) {
  if (profile == ClassProfile::ThreeClass) return {AnomalyClass::Fight, AnomalyClass::Gunshot, AnomalyClass::Normal};
  return {kAllAnomalyClasses.begin(), kAllAnomalyClasses.end()};
}

bool profile_contains(ClassProfile profile, AnomalyClass c) {
  return profile == ClassProfile::FourClass || c != AnomalyClass::Fire;
}

ClassProfile parse_profile(std::string_view text) {
  if (text == "3") return ClassProfile::ThreeClass;
  if (text == "4") return ClassProfile::FourClass;
  throw ConfigError("class profile must be 3 or 4, got '" + std::string(text) + "'");
}

std::string_view to_string(AnomalyClass c) {
  switch (c) {
    case AnomalyClass::Fight: return "fight";
    case AnomalyClass::Gunshot: return "gunshot";
    case AnomalyClass::Fire: return "fire";
    case AnomalyClass::Normal: return "normal";
  }
  return "normal";
}

std::string_view display_name(AnomalyClass c) {
  switch (c) {
    case AnomalyClass::Fight: return "Fight";
    case AnomalyClass::Gunshot: return "Gunshot";
    case AnomalyClass::Fire: return "Fire";
    case AnomalyClass::Normal: return "Normal";
  }
  return "Normal";
}

std::string_view to_string(KeyObjectClass k) {
  switch (k) {
    case KeyObjectClass::Person: return "person";
    case KeyObjectClass::Firearm: return "firearm";
    case KeyObjectClass::Flame: return "flame";
    case KeyObjectClass::Smoke: return "smoke";
  }
  return "person";
}

AnomalyClass parse_anomaly_class(std::string_view text) {
  const auto key = lower(text);
  for (auto c : kAllAnomalyClasses) {
    if (to_string(c) == key) return c;
  }
  throw Error("unknown anomaly class '" + std::string(text) + "'");
}

KeyObjectClass parse_key_object_class(std::string_view text) {
  const auto key = lower(text);
  for (auto k : kAllKeyObjectClasses) {
    if (to_string(k) == key) return k;
  }
  throw Error("unknown key object class '" + std::string(text) + "'");
}

AnomalyClass associated_anomaly(KeyObjectClass k) {
  switch (k) {
    case KeyObjectClass::Person: return AnomalyClass::Fight;
    case KeyObjectClass::Firearm: return AnomalyClass::Gunshot;
    case KeyObjectClass::Flame:
    case KeyObjectClass::Smoke: return AnomalyClass::Fire;
  }
  return AnomalyClass::Fight;
}

BoundingBox BoundingBox::make(double x0, double y0, double x1, double y1) {
  if (!(x0 <= x1) || !(y0 <= y1)) {
    throw Error("invalid bounding box [" + std::to_string(x0) + "," + std::to_string(y0) + "," +
                std::to_string(x1) + "," + std::to_string(y1) + "]");
  }
  return {x0, y0, x1, y1};
}

void Detection::validate() const {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw Error("detection confidence out of [0,1]: " + std::to_string(confidence));
  }
  BoundingBox::make(box.x_min, box.y_min, box.x_max, box.y_max);
  if (!keypoints) return;
  if (object_class != KeyObjectClass::Person) {
    throw Error("keypoints attached to a non-person detection");
  }
  std::set<int> seen;
  for (const auto& kp : *keypoints) {
    if (kp.joint_id < 0 || kp.joint_id >= kNumCocoJoints) {
      throw Error("joint id out of range: " + std::to_string(kp.joint_id));
    }
    if (!seen.insert(kp.joint_id).second) {
      throw Error("duplicate joint id " + std::to_string(kp.joint_id));
    }
  }
}

Frame::Frame(std::int64_t index, double timestamp_ms, int width, int height, std::vector<std::uint8_t> pixels)
    : index_(index), timestamp_ms_(timestamp_ms), width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidFrame("negative frame dimensions");
  if (pixels.size() != byte_size()) {
    throw InvalidFrame("pixel buffer holds " + std::to_string(pixels.size()) + " bytes, expected " +
                       std::to_string(byte_size()));
  }
  pixels_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(pixels));
}

Frame Frame::filled(std::int64_t index, double timestamp_ms, int width, int height, std::uint8_t r, std::uint8_t g,
                    std::uint8_t b) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < px.size(); i += 3) {
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
  return Frame(index, timestamp_ms, width, height, std::move(px));
}

std::span<const std::uint8_t> Frame::pixels() const {
  if (!pixels_) return {};
  return {pixels_->data(), pixels_->size()};
}

Frame Frame::with_position(std::int64_t index, double timestamp_ms) const {
  Frame out = *this;
  out.index_ = index;
  out.timestamp_ms_ = timestamp_ms;
  return out;
}

Frame Frame::with_pixels(int width, int height, std::vector<std::uint8_t> pixels) const {
  return Frame(index_, timestamp_ms_, width, height, std::move(pixels));
}

bool Frame::same_pixels(const Frame& other) const {
  if (width_ != other.width_ || height_ != other.height_) return false;
  const auto a = pixels();
  const auto b = other.pixels();
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

std::pair<std::int64_t, std::int64_t> SequenceWindow::source_span() const {
  if (frames.empty()) return {0, 0};
  return {frames.front().index(), frames.back().index()};
}

bool SequenceWindow::model_space() const {
  return std::all_of(frames.begin(), frames.end(),
                     [](const Frame& f) { return f.width() == kModelSide && f.height() == kModelSide; });
}

void SequenceWindow::validate(bool require_model_space) const {
  if (frames.empty()) throw InvalidWindow("window " + std::to_string(window_index) + " has no frames");
  if (padded >= frames.size()) throw InvalidWindow("window " + std::to_string(window_index) + " is all padding");
  const std::size_t real = frames.size() - padded;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const bool ok = i < real ? frames[i].index() > frames[i - 1].index() : frames[i].index() == frames[real - 1].index();
    if (!ok) {
      throw InvalidWindow("window " + std::to_string(window_index) + ": frame indices not strictly increasing");
    }
  }
  if (require_model_space && !model_space()) {
    throw InvalidWindow("window " + std::to_string(window_index) + " is not " + std::to_string(kModelSide) + "x" +
                        std::to_string(kModelSide));
  }
}

AnomalyClass argmax_with_tiebreak(const std::array<double, kNumAnomalyClasses>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<AnomalyClass>(best);
}

TemporalResult TemporalResult::from_scores(std::array<double, kNumAnomalyClasses> raw, ClassProfile profile) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]) || raw[i] < 0.0) throw Error("temporal score must be finite and non-negative");
    if (!profile_contains(profile, static_cast<AnomalyClass>(i))) raw[i] = 0.0;
  }
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(sum > 0.0)) throw Error("temporal scores sum to zero");
  TemporalResult out;
  out.profile = profile;
  for (std::size_t i = 0; i < raw.size(); ++i) out.scores[i] = raw[i] / sum;
  out.argmax_class = argmax_with_tiebreak(out.scores);
  return out;
}

TemporalResult TemporalResult::certain(AnomalyClass c, ClassProfile profile) {
  std::array<double, kNumAnomalyClasses> raw{};
  raw[static_cast<std::size_t>(c)] = 1.0;
  return from_scores(raw, profile);
}

bool SpatialResult::empty() const {
  return std::all_of(frames.begin(), frames.end(), [](const auto& kv) { return kv.second.empty(); });
}

std::string_view to_string(PredictionSource s) {
  switch (s) {
    case PredictionSource::Temporal: return "temporal";
    case PredictionSource::SpatialOverride: return "spatial-override";
    case PredictionSource::TemporalOnSerial: return "temporal-on-serial";
  }
  return "temporal";
}

PredictionSource parse_prediction_source(std::string_view text) {
  for (auto s : {PredictionSource::Temporal, PredictionSource::SpatialOverride, PredictionSource::TemporalOnSerial}) {
    if (to_string(s) == text) return s;
  }
  throw Error("unknown prediction source '" + std::string(text) + "'");
}

nlohmann::ordered_json to_json(const BoundingBox& b) { return nlohmann::ordered_json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

nlohmann::ordered_json to_json(const Detection& d) {
  nlohmann::ordered_json j;
  j["class"] = to_string(d.object_class);
  j["conf"] = d.confidence;
  j["box"] = to_json(d.box);
  if (d.keypoints) {
    auto kps = nlohmann::ordered_json::array();
    for (const auto& kp : *d.keypoints) kps.push_back({kp.joint_id, kp.x, kp.y, kp.confidence});
    j["keypoints"] = std::move(kps);
  }
  return j;
}

nlohmann::ordered_json scores_to_json(const std::array<double, kNumAnomalyClasses>& scores, ClassProfile profile) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (auto c : profile_classes(profile)) j[std::string(to_string(c))] = scores[static_cast<std::size_t>(c)];
  return j;
}

nlohmann::ordered_json to_json(const TemporalResult& t) {
  nlohmann::ordered_json j;
  j["scores"] = scores_to_json(t.scores, t.profile);
  j["argmax_class"] = to_string(t.argmax_class);
  return j;
}

nlohmann::ordered_json to_json(const SpatialResult& s) {
  nlohmann::ordered_json j;
  j["window_index"] = s.window_index;
  j["source_span"] = {s.source_span.first, s.source_span.second};
  auto frames = nlohmann::ordered_json::array();
  for (const auto& [index, dets] : s.frames) {
    nlohmann::ordered_json f;
    f["frame"] = index;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& d : dets) arr.push_back(to_json(d));
    f["detections"] = std::move(arr);
    frames.push_back(std::move(f));
  }
  j["frames"] = std::move(frames);
  return j;
}

nlohmann::ordered_json to_json(const StageLatency& l) {
  nlohmann::ordered_json j;
  j["spatial_ms"] = l.spatial_ms;
  j["preprocess_ms"] = l.preprocess_ms;
  j["temporal_ms"] = l.temporal_ms;
  j["fusion_ms"] = l.fusion_ms;
  j["total_ms"] = l.total_ms;
  return j;
}

nlohmann::ordered_json to_json(const AnomalyPrediction& p, bool include_timing) {
  nlohmann::ordered_json j;
  j["window_index"] = p.window_index;
  j["source_span"] = {p.source_span.first, p.source_span.second};
  j["t_start_ms"] = p.t_start_ms;
  j["label"] = to_string(p.label);
  j["source"] = to_string(p.source);
  j["scores"] = scores_to_json(p.scores, p.profile);
  if (include_timing) j["latency_ms"] = to_json(p.latency);
  return j;
}

BoundingBox box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("box must be an array of 4 numbers");
  for (const auto& v : j) {
    if (!v.is_number()) throw Error("box must be an array of 4 numbers");
  }
  return BoundingBox::make(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

Detection detection_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("detection must be an object");
  if (!j.contains("class") || !j["class"].is_string()) throw Error("detection needs a string 'class'");
  if (!j.contains("conf") || !j["conf"].is_number()) throw Error("detection needs a numeric 'conf'");
  if (!j.contains("box")) throw Error("detection needs a 'box'");
  Detection d;
  d.object_class = parse_key_object_class(j["class"].get<std::string>());
  d.confidence = j["conf"].get<double>();
  d.box = box_from_json(j["box"]);
  if (j.contains("keypoints") && !j["keypoints"].is_null()) {
    const auto& kps = j["keypoints"];
    if (!kps.is_array()) throw Error("keypoints must be an array");
    std::vector<Keypoint> out;
    for (const auto& kp : kps) {
      if (!kp.is_array() || kp.size() != 4) throw Error("keypoint must be [id,x,y,conf]");
      for (const auto& v : kp) {
        if (!v.is_number()) throw Error("keypoint must be [id,x,y,conf]");
      }
      out.push_back({kp[0].get<int>(), kp[1].get<double>(), kp[2].get<double>(), kp[3].get<double>()});
    }
    d.keypoints = std::move(out);
  }
  d.validate();
  return d;
}

}  // namespace stap
