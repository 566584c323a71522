#include "stap/temporal.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "stap/error.hpp"
#include "stap/kernels.hpp"
#include "stap/util.hpp"

namespace stap {

namespace {

constexpr double kNormTolerance = 1e-6;

}  // namespace

bool anomaly_flag(const TemporalResult& r, double anomaly_threshold) {
  if (r.argmax_class == AnomalyClass::Normal) return false;
  if (anomaly_threshold <= 0.0) return true;
  double best = 0.0;
  for (auto c : {AnomalyClass::Fight, AnomalyClass::Gunshot, AnomalyClass::Fire}) best = std::max(best, r.score(c));
  return best >= anomaly_threshold;
}

TemporalVerdict classify_window(const SequenceWindow& w, TemporalBackend& backend, double anomaly_threshold) {
  w.validate(true);
  TemporalVerdict v;
  try {
    v.result = backend.classify(w);
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(std::string("temporal backend failed on window ") + std::to_string(w.window_index) + ": " +
                       e.what());
  }
  v.anomaly = anomaly_flag(v.result, anomaly_threshold);
  return v;
}

// ---------------------------------------------------------------------------

TraceTemporalBackend::TraceTemporalBackend(const std::filesystem::path& path, ClassProfile profile)
    : origin_(path.string()), profile_(profile) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError(origin_, 0, "cannot open trace file");
  load(in);
}

TraceTemporalBackend TraceTemporalBackend::from_text(const std::string& text, ClassProfile profile,
                                                     const std::string& origin) {
  TraceTemporalBackend b(profile, origin);
  std::istringstream in(text);
  b.load(in);
  return b;
}

void TraceTemporalBackend::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("window") || !j["window"].is_number_integer()) {
        throw Error("record needs an integer 'window'");
      }
      const auto window = j["window"].get<std::int64_t>();
      if (!j.contains("scores") || !j["scores"].is_object()) throw Error("record needs a 'scores' object");
      const auto& sj = j["scores"];
      std::array<double, kNumAnomalyClasses> raw{};
      for (auto c : kAllAnomalyClasses) {
        const std::string key(to_string(c));
        if (!sj.contains(key)) {
          if (profile_contains(profile_, c)) throw Error("missing score '" + key + "'");
          continue;
        }
        if (!sj[key].is_number()) throw Error("score '" + key + "' is not a number");
        const double v = sj[key].get<double>();
        if (!std::isfinite(v) || v < 0.0) throw Error("score '" + key + "' must be finite and non-negative");
        if (!profile_contains(profile_, c) && v != 0.0) throw Error("fire score in a 3-class trace");
        raw[static_cast<std::size_t>(c)] = v;
      }
      for (auto it = sj.begin(); it != sj.end(); ++it) parse_anomaly_class(it.key());
      const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
      if (std::abs(sum - 1.0) > kNormTolerance) {
        ++renormalized_;
        spdlog::warn("{}:{}: scores for window {} sum to {}, renormalizing", origin_, line_no, window, sum);
      }
      if (!entries_.emplace(window, TemporalResult::from_scores(raw, profile_)).second) {
        throw Error("duplicate window " + std::to_string(window));
      }
    } catch (const std::exception& e) {
      throw TraceFormatError(origin_, line_no, e.what());
    }
  }
}

TemporalResult TraceTemporalBackend::classify(const SequenceWindow& w) {
  const auto it = entries_.find(w.window_index);
  if (it == entries_.end()) throw MissingTraceEntry(w.window_index);
  return it->second;
}

std::string temporal_trace_line(std::int64_t window, const std::array<double, kNumAnomalyClasses>& scores,
                                ClassProfile profile) {
  nlohmann::ordered_json j;
  j["window"] = window;
  j["scores"] = scores_to_json(scores, profile);
  return j.dump();
}

// ---------------------------------------------------------------------------

double window_motion(const SequenceWindow& w) {
  if (w.frames.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i < w.frames.size(); ++i) {
    total += kernels::mean_abs_diff(w.frames[i - 1].pixels(), w.frames[i].pixels());
  }
  return total / static_cast<double>(w.frames.size() - 1);
}

TemporalResult SyntheticTemporalBackend::classify(const SequenceWindow& w) {
  ++calls_;
  sleep_ms(spec_.latency_ms);
  if (spec_.fail_windows.count(w.window_index)) {
    throw BackendError("synthetic temporal failure on window " + std::to_string(w.window_index));
  }
  if (spec_.rule == TemporalRule::Constant) return TemporalResult::certain(spec_.constant_class, spec_.profile);
  const bool moving = window_motion(w) >= spec_.motion_cutoff;
  return TemporalResult::from_scores(moving ? std::array<double, 4>{0.7, 0.1, 0.1, 0.1}
                                            : std::array<double, 4>{0.1, 0.1, 0.1, 0.7},
                                     spec_.profile);
}

std::string SyntheticTemporalBackend::describe() const {
  std::ostringstream s;
  s << "synthetic:latency=" << spec_.latency_ms << ",rule=";
  if (spec_.rule == TemporalRule::Motion) s << "motion,cutoff=" << spec_.motion_cutoff;
  else s << "constant,class=" << to_string(spec_.constant_class);
  s << ",classes=" << static_cast<int>(spec_.profile);
  return s.str();
}

SyntheticTemporalSpec parse_synthetic_temporal_spec(std::string_view options) {
  SyntheticTemporalSpec s;
  for (const auto& [key, value] : parse_option_list(options)) {
    if (key == "latency") s.latency_ms = parse_double(value, key);
    else if (key == "rule") {
      if (value == "motion") s.rule = TemporalRule::Motion;
      else if (value == "constant") s.rule = TemporalRule::Constant;
      else throw ConfigError("temporal synthetic rule must be motion or constant");
    } else if (key == "cutoff") s.motion_cutoff = parse_double(value, key);
    else if (key == "class") s.constant_class = parse_anomaly_class(value);
    else if (key == "classes") s.profile = parse_profile(value);
    else if (key == "fail") {
      for (const auto& f : split(value, ';')) s.fail_windows.insert(parse_int(f, key));
    } else throw ConfigError("unknown synthetic temporal option '" + key + "'");
  }
  if (s.latency_ms < 0.0) throw ConfigError("latency must be >= 0");
  if (!profile_contains(s.profile, s.constant_class)) throw ConfigError("constant class outside the class profile");
  return s;
}

}  // namespace stap
