#include "stap/fusion.hpp"

#include <algorithm>

#include "stap/error.hpp"
#include "stap/spatial.hpp"

namespace stap {

void FusionPolicy::validate() const {
  std::set<AnomalyClass> seen;
  for (auto c : key_object_priority) {
    if (c == AnomalyClass::Normal) throw ConfigError("fusion priority may not contain normal");
    if (!seen.insert(c).second) throw ConfigError("fusion priority lists " + std::string(to_string(c)) + " twice");
  }
}

FusionDecision fuse_decision(bool temporal_flag, AnomalyClass temporal_argmax, const std::set<KeyObjectClass>& objects,
                             bool gate, const FusionPolicy& policy, ClassProfile profile) {
  if (temporal_flag) return {temporal_argmax, PredictionSource::Temporal};
  if (objects.empty()) return {AnomalyClass::Normal, PredictionSource::Temporal};

  std::set<AnomalyClass> admitted;
  for (auto k : objects) {
    const AnomalyClass c = associated_anomaly(k);
    if (k == KeyObjectClass::Firearm && policy.gate_required_for_gunshot && !gate) continue;
    if (k == KeyObjectClass::Person && !policy.person_triggers_fight) continue;
    if (!profile_contains(profile, c)) continue;
    admitted.insert(c);
  }
  for (auto c : policy.key_object_priority) {
    if (admitted.count(c)) return {c, PredictionSource::SpatialOverride};
  }
  return {AnomalyClass::Normal, PredictionSource::Temporal};
}

AnomalyPrediction fuse(const TemporalVerdict& t, const SpatialResult& s, const FusionPolicy& p) {
  AnomalyPrediction out;
  out.window_index = s.window_index;
  out.source_span = s.source_span;
  out.scores = t.result.scores;
  out.profile = t.result.profile;
  // Skip the spatial summary entirely when the temporal verdict decides.
  const auto decision =
      t.anomaly ? fuse_decision(true, t.result.argmax_class, {}, false, p, t.result.profile)
                : fuse_decision(false, t.result.argmax_class, key_object_summary(s), person_gun_gate(s), p,
                                t.result.profile);
  out.label = decision.label;
  out.source = decision.source;
  return out;
}

}  // namespace stap
