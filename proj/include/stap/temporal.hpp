#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "stap/core.hpp"

namespace stap {

// Window classifier. Implementations must accept concurrent classify()
// calls and return scores normalized per TemporalResult.
class TemporalBackend {
 public:
  virtual ~TemporalBackend() = default;
  virtual TemporalResult classify(const SequenceWindow& w) = 0;
  virtual ClassProfile profile() const { return ClassProfile::FourClass; }
  virtual std::string describe() const = 0;
};

struct TemporalVerdict {
  TemporalResult result;
  bool anomaly = false;
};

// threshold 0: anomaly iff argmax is not Normal. Otherwise the best
// anomaly-class score must also reach the threshold.
bool anomaly_flag(const TemporalResult& r, double anomaly_threshold);

// Validates that w is in model space, then classifies it. Backend failures
// surface as BackendError (MissingTraceEntry is wrapped too).
TemporalVerdict classify_window(const SequenceWindow& w, TemporalBackend& backend, double anomaly_threshold = 0.0);

// Replays JSON Lines score vectors keyed by window index.
class TraceTemporalBackend final : public TemporalBackend {
 public:
  explicit TraceTemporalBackend(const std::filesystem::path& path, ClassProfile profile = ClassProfile::FourClass);
  static TraceTemporalBackend from_text(const std::string& text, ClassProfile profile = ClassProfile::FourClass,
                                        const std::string& origin = "<memory>");

  // Throws MissingTraceEntry for windows absent from the trace.
  TemporalResult classify(const SequenceWindow& w) override;
  ClassProfile profile() const override { return profile_; }
  std::string describe() const override { return "trace:" + origin_; }

  const std::map<std::int64_t, TemporalResult>& entries() const { return entries_; }
  std::size_t renormalized() const { return renormalized_; }

 private:
  TraceTemporalBackend(ClassProfile profile, std::string origin) : origin_(std::move(origin)), profile_(profile) {}
  void load(std::istream& in);

  std::string origin_;
  ClassProfile profile_;
  std::map<std::int64_t, TemporalResult> entries_;
  std::size_t renormalized_ = 0;
};

std::string temporal_trace_line(std::int64_t window, const std::array<double, kNumAnomalyClasses>& scores,
                                ClassProfile profile = ClassProfile::FourClass);

enum class TemporalRule : std::uint8_t { Motion, Constant };

struct SyntheticTemporalSpec {
  double latency_ms = 0.0;
  TemporalRule rule = TemporalRule::Motion;
  double motion_cutoff = 30.0;  // mean |delta pixel| between consecutive frames
  AnomalyClass constant_class = AnomalyClass::Normal;
  ClassProfile profile = ClassProfile::FourClass;
  std::set<std::int64_t> fail_windows;
};

// Sleeps latency_ms per call. The Motion rule leans to Fight when the mean
// absolute inter-frame pixel difference reaches motion_cutoff, else Normal.
class SyntheticTemporalBackend final : public TemporalBackend {
 public:
  explicit SyntheticTemporalBackend(SyntheticTemporalSpec spec) : spec_(std::move(spec)) {}

  TemporalResult classify(const SequenceWindow& w) override;
  ClassProfile profile() const override { return spec_.profile; }
  std::string describe() const override;

  const SyntheticTemporalSpec& spec() const { return spec_; }
  std::int64_t calls() const { return calls_.load(); }

 private:
  SyntheticTemporalSpec spec_;
  std::atomic<std::int64_t> calls_{0};
};

// Mean over consecutive frame pairs of the mean absolute byte difference.
double window_motion(const SequenceWindow& w);

SyntheticTemporalSpec parse_synthetic_temporal_spec(std::string_view options);

}  // namespace stap
