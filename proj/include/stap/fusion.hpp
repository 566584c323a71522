#pragma once

#include <set>
#include <vector>

#include "stap/core.hpp"
#include "stap/temporal.hpp"

namespace stap {

struct FusionPolicy {
  // Spatial override order when several key objects co-occur.
  std::vector<AnomalyClass> key_object_priority{AnomalyClass::Gunshot, AnomalyClass::Fire, AnomalyClass::Fight};
  bool gate_required_for_gunshot = true;
  bool person_triggers_fight = true;

  void validate() const;
};

struct FusionDecision {
  AnomalyClass label = AnomalyClass::Normal;
  PredictionSource source = PredictionSource::Temporal;

  friend bool operator==(const FusionDecision&, const FusionDecision&) = default;
};

// The decision rule on abstract inputs:
//  1. a temporal anomaly wins outright;
//  2. otherwise detected key objects propose their associated anomaly
//     (gunshot only behind the person/firearm gate), highest priority wins;
//  3. otherwise Normal.
// Candidates outside `profile` are never admitted.
FusionDecision fuse_decision(bool temporal_flag, AnomalyClass temporal_argmax, const std::set<KeyObjectClass>& objects,
                             bool gate, const FusionPolicy& policy,
                             ClassProfile profile = ClassProfile::FourClass);

AnomalyPrediction fuse(const TemporalVerdict& t, const SpatialResult& s, const FusionPolicy& p);

}  // namespace stap
