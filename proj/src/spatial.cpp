#include "stap/spatial.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "stap/error.hpp"
#include "stap/kernels.hpp"
#include "stap/util.hpp"

namespace stap {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::string_view to_string(FrameSelection s) {
  switch (s) {
    case FrameSelection::EvenlySpaced: return "evenly-spaced";
    case FrameSelection::First: return "first";
    case FrameSelection::All: return "all";
  }
  return "evenly-spaced";
}

FrameSelection parse_frame_selection(std::string_view text) {
  for (auto s : {FrameSelection::EvenlySpaced, FrameSelection::First, FrameSelection::All}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("frame selection must be evenly-spaced, first or all, got '" + std::string(text) + "'");
}

void SpatialConfig::validate(std::size_t window_size) const {
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw ConfigError("spatial confidence_threshold must lie in [0,1]");
  }
  if (frames_per_window < 1 || frames_per_window > window_size) {
    throw ConfigError("spatial frames_per_window must lie in 1.." + std::to_string(window_size));
  }
}

std::vector<std::size_t> select_frames(std::size_t window_len, const SpatialConfig& cfg) {
  std::vector<std::size_t> out;
  const std::size_t k = std::min(std::max<std::size_t>(cfg.frames_per_window, 1), window_len);
  switch (cfg.frame_selection) {
    case FrameSelection::All:
      for (std::size_t i = 0; i < window_len; ++i) out.push_back(i);
      break;
    case FrameSelection::First:
      for (std::size_t i = 0; i < k; ++i) out.push_back(i);
      break;
    case FrameSelection::EvenlySpaced: {
      const std::size_t step = (window_len + k - 1) / k;
      for (std::size_t i = 0; i < window_len && out.size() < k; i += step) out.push_back(i);
      break;
    }
  }
  return out;
}

SpatialResult analyze_window(const SequenceWindow& w, SpatialBackend& backend, const SpatialConfig& cfg) {
  SpatialResult result;
  result.window_index = w.window_index;
  result.source_span = w.source_span();
  for (const auto pos : select_frames(w.frames.size(), cfg)) {
    const Frame& frame = w.frames[pos];
    if (result.frames.count(frame.index())) continue;  // padding repeats
    std::vector<Detection> dets;
    try {
      dets = backend.detect(frame);
    } catch (const BackendError& e) {
      throw BackendError(e.what(), e.frame_index() >= 0 ? e.frame_index() : frame.index());
    } catch (const std::exception& e) {
      throw BackendError(std::string("spatial backend failed: ") + e.what(), frame.index());
    }
    std::vector<Detection> kept;
    for (auto& d : dets) {
      if (d.confidence >= cfg.confidence_threshold) kept.push_back(std::move(d));
    }
    result.frames.emplace(frame.index(), std::move(kept));
  }
  return result;
}

bool person_gun_gate(const SpatialResult& r) {
  for (const auto& [index, dets] : r.frames) {
    double best = 0.0;
    for (const auto& gun : dets) {
      if (gun.object_class != KeyObjectClass::Firearm) continue;
      for (const auto& person : dets) {
        if (person.object_class == KeyObjectClass::Person) best = std::max(best, iou(gun.box, person.box));
      }
    }
    if (best > 0.0) return true;
  }
  return false;
}

std::set<KeyObjectClass> key_object_summary(const SpatialResult& r) {
  std::set<KeyObjectClass> out;
  for (const auto& [index, dets] : r.frames) {
    for (const auto& d : dets) out.insert(d.object_class);
  }
  return out;
}

// ---------------------------------------------------------------------------

TraceSpatialBackend::TraceSpatialBackend(const std::filesystem::path& path) : origin_(path.string()) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError(origin_, 0, "cannot open trace file");
  load(in);
}

TraceSpatialBackend TraceSpatialBackend::from_text(const std::string& text, const std::string& origin) {
  TraceSpatialBackend b;
  b.origin_ = origin;
  std::istringstream in(text);
  b.load(in);
  return b;
}

void TraceSpatialBackend::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("frame") || !j["frame"].is_number_integer()) {
        throw Error("record needs an integer 'frame'");
      }
      const auto frame = j["frame"].get<std::int64_t>();
      if (frame < 0) throw Error("negative frame index");
      if (!j.contains("detections") || !j["detections"].is_array()) throw Error("record needs a 'detections' array");
      std::vector<Detection> dets;
      for (const auto& dj : j["detections"]) {
        dets.push_back(detection_from_json(dj));
        if (dets.back().keypoints) has_pose_ = true;
      }
      if (!entries_.emplace(frame, std::move(dets)).second) throw Error("duplicate frame " + std::to_string(frame));
    } catch (const TraceFormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw TraceFormatError(origin_, line_no, e.what());
    }
  }
}

std::vector<Detection> TraceSpatialBackend::detect(const Frame& frame) {
  const auto it = entries_.find(frame.index());
  if (it == entries_.end()) return {};
  return it->second;
}

std::string spatial_trace_line(std::int64_t frame, const std::vector<Detection>& dets) {
  nlohmann::ordered_json j;
  j["frame"] = frame;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& d : dets) arr.push_back(to_json(d));
  j["detections"] = std::move(arr);
  return j.dump();
}

// ---------------------------------------------------------------------------

std::vector<Detection> SyntheticSpatialBackend::detect(const Frame& frame) {
  ++calls_;
  sleep_ms(spec_.latency_ms);
  if (spec_.fail_frames.count(frame.index())) {
    throw BackendError("synthetic spatial failure", frame.index());
  }
  if (spec_.rule == SpatialRule::None) return {};
  const auto region = kernels::find_red_region(frame.pixels(), frame.width(), frame.height());
  const double total = static_cast<double>(frame.width()) * frame.height();
  if (region.count == 0 || region.count < spec_.min_red_fraction * total) return {};
  Detection d;
  d.object_class = KeyObjectClass::Flame;
  d.confidence = spec_.confidence;
  d.box = BoundingBox::make(region.x_min, region.y_min, region.x_max + 1.0, region.y_max + 1.0);
  return {d};
}

std::string SyntheticSpatialBackend::describe() const {
  std::ostringstream s;
  s << "synthetic:latency=" << spec_.latency_ms << ",rule=" << (spec_.rule == SpatialRule::Red ? "red" : "none");
  return s.str();
}

SyntheticSpatialSpec parse_synthetic_spatial_spec(std::string_view options) {
  SyntheticSpatialSpec s;
  for (const auto& [key, value] : parse_option_list(options)) {
    if (key == "latency") s.latency_ms = parse_double(value, key);
    else if (key == "rule") {
      if (value == "red") s.rule = SpatialRule::Red;
      else if (value == "none") s.rule = SpatialRule::None;
      else throw ConfigError("spatial synthetic rule must be red or none");
    } else if (key == "min_red_fraction") s.min_red_fraction = parse_double(value, key);
    else if (key == "conf") s.confidence = parse_double(value, key);
    else if (key == "fail") {
      for (const auto& f : split(value, ';')) s.fail_frames.insert(parse_int(f, key));
    } else throw ConfigError("unknown synthetic spatial option '" + key + "'");
  }
  if (s.latency_ms < 0.0) throw ConfigError("latency must be >= 0");
  return s;
}

}  // namespace stap
