#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "stap/error.hpp"
#include "stap/ingest.hpp"
#include "stap/spatial.hpp"
#include "stap/util.hpp"

using namespace stap;
using testing_util::detection;

namespace {

// Returns a fixed detection list for every frame, or fails on one index.
class ScriptedBackend final : public SpatialBackend {
 public:
  std::vector<Detection> dets;
  std::int64_t fail_on = -1;
  std::vector<std::int64_t> seen;

  std::vector<Detection> detect(const Frame& f) override {
    seen.push_back(f.index());
    if (f.index() == fail_on) throw std::runtime_error("boom");
    return dets;
  }
  std::string describe() const override { return "scripted"; }
};

SpatialResult one_frame(std::vector<Detection> dets, std::int64_t frame = 0) {
  SpatialResult r;
  r.frames[frame] = std::move(dets);
  return r;
}

}  // namespace

TEST_CASE("iou examples") {
  const auto a = BoundingBox::make(0, 0, 10, 10);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BoundingBox::make(20, 20, 30, 30)) == 0.0);
  CHECK(iou(a, BoundingBox::make(5, 5, 15, 15)) == doctest::Approx(25.0 / 175.0).epsilon(1e-12));
  CHECK(iou(a, BoundingBox::make(10, 0, 20, 10)) == 0.0);
  const auto point = BoundingBox::make(3, 3, 3, 3);
  CHECK(iou(point, point) == 0.0);
}

TEST_CASE("iou properties on random boxes") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto a = oracle::random_box(rng, 50), b = oracle::random_box(rng, 50);
    const double v = iou(a, b);
    REQUIRE(v == iou(b, a));
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    if (!a.degenerate()) REQUIRE(iou(a, a) == 1.0);
  }
}

TEST_CASE("frame selection") {
  SpatialConfig cfg;
  CHECK(select_frames(15, cfg) == std::vector<std::size_t>{0, 5, 10});
  cfg.frames_per_window = 15;
  cfg.frame_selection = FrameSelection::All;
  CHECK(select_frames(15, cfg).size() == 15);
  cfg.frame_selection = FrameSelection::First;
  cfg.frames_per_window = 2;
  CHECK(select_frames(15, cfg) == std::vector<std::size_t>{0, 1});
  cfg.frame_selection = FrameSelection::EvenlySpaced;
  cfg.frames_per_window = 4;
  CHECK(select_frames(15, cfg) == std::vector<std::size_t>{0, 4, 8, 12});
  cfg.frames_per_window = 1;
  CHECK(select_frames(15, cfg) == std::vector<std::size_t>{0});

  SpatialConfig bad;
  bad.frames_per_window = 16;
  CHECK_THROWS_AS(bad.validate(15), ConfigError);
  bad.frames_per_window = 3;
  bad.confidence_threshold = 1.5;
  CHECK_THROWS_AS(bad.validate(15), ConfigError);
}

TEST_CASE("analyze_window runs the selected frames and filters by confidence") {
  ScriptedBackend backend;
  backend.dets = {detection(KeyObjectClass::Person, 0, 0, 5, 5, 0.9), detection(KeyObjectClass::Flame, 0, 0, 5, 5, 0.1)};
  const auto w = testing_util::model_window(3, 30);
  const auto r = analyze_window(w, backend, SpatialConfig{});
  CHECK(backend.seen == std::vector<std::int64_t>{30, 35, 40});
  CHECK(r.window_index == 3);
  REQUIRE(r.frames.size() == 3);
  for (const auto& [index, dets] : r.frames) {
    CHECK(index >= r.source_span.first);
    CHECK(index <= r.source_span.second);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].object_class == KeyObjectClass::Person);
  }

  SpatialConfig all;
  all.frame_selection = FrameSelection::All;
  all.frames_per_window = 15;
  backend.seen.clear();
  CHECK(analyze_window(w, backend, all).frames.size() == 15);
  CHECK(backend.seen.size() == 15);
}

TEST_CASE("analyze_window is all-or-nothing on failure") {
  ScriptedBackend backend;
  backend.fail_on = 35;
  try {
    analyze_window(testing_util::model_window(0, 30), backend, SpatialConfig{});
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.frame_index() == 35);
  }
}

TEST_CASE("analyze_window skips padding repeats") {
  ScriptedBackend backend;
  auto w = testing_util::model_window(0, 0, 3);
  for (int i = 0; i < 12; ++i) w.frames.push_back(w.frames.back());
  w.padded = 12;
  SpatialConfig all;
  all.frame_selection = FrameSelection::All;
  all.frames_per_window = 15;
  const auto r = analyze_window(w, backend, all);
  CHECK(backend.seen == std::vector<std::int64_t>{0, 1, 2});
  CHECK(r.frames.size() == 3);
}

TEST_CASE("raising the threshold never adds detections") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> conf(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    ScriptedBackend backend;
    for (int i = 0; i < 6; ++i) backend.dets.push_back(detection(KeyObjectClass::Smoke, 0, 0, 1, 1, conf(rng)));
    const auto w = testing_util::model_window(0, 0);
    std::size_t previous = SIZE_MAX;
    for (double t = 0.0; t <= 1.0; t += 0.1) {
      SpatialConfig cfg;
      cfg.confidence_threshold = t;
      std::size_t total = 0;
      for (const auto& [i, d] : analyze_window(w, backend, cfg).frames) total += d.size();
      CHECK(total <= previous);
      previous = total;
    }
  }
}

TEST_CASE("person/firearm gate") {
  const auto person = detection(KeyObjectClass::Person, 0, 0, 10, 20);
  CHECK(person_gun_gate(one_frame({person, detection(KeyObjectClass::Firearm, 8, 5, 14, 9)})));
  CHECK_FALSE(person_gun_gate(one_frame({detection(KeyObjectClass::Firearm, 8, 5, 14, 9)})));
  CHECK_FALSE(person_gun_gate(one_frame({person, detection(KeyObjectClass::Firearm, 10, 5, 14, 9)})));
  // Person and firearm in different frames never pair up.
  SpatialResult split;
  split.frames[0] = {person};
  split.frames[5] = {detection(KeyObjectClass::Firearm, 8, 5, 14, 9)};
  CHECK_FALSE(person_gun_gate(split));
  // Any overlapping pair arms the gate.
  CHECK(person_gun_gate(one_frame({detection(KeyObjectClass::Person, 50, 50, 60, 60), person,
                                   detection(KeyObjectClass::Firearm, 100, 100, 110, 110),
                                   detection(KeyObjectClass::Firearm, 9, 9, 12, 12)})));
}

TEST_CASE("gate soundness on random results") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    SpatialResult r;
    for (int f = 0; f < 3; ++f) {
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) {
        Detection d;
        d.object_class = kAllKeyObjectClasses[rng() % 4];
        d.confidence = 0.9;
        d.box = oracle::random_box(rng, 20);
        r.frames[f].push_back(d);
      }
    }
    if (person_gun_gate(r)) {
      const auto objects = key_object_summary(r);
      CHECK(objects.count(KeyObjectClass::Firearm));
      CHECK(objects.count(KeyObjectClass::Person));
    }
  }
}

TEST_CASE("key object summary") {
  CHECK(key_object_summary(SpatialResult{}).empty());
  SpatialResult r;
  r.frames[0] = {detection(KeyObjectClass::Flame, 0, 0, 1, 1)};
  r.frames[5] = {detection(KeyObjectClass::Smoke, 0, 0, 1, 1)};
  CHECK(key_object_summary(r) == std::set<KeyObjectClass>{KeyObjectClass::Flame, KeyObjectClass::Smoke});
  SpatialResult people;
  for (int f : {0, 5, 10}) people.frames[f] = {detection(KeyObjectClass::Person, 0, 0, 1, 1)};
  CHECK(key_object_summary(people) == std::set<KeyObjectClass>{KeyObjectClass::Person});
}

TEST_CASE("trace spatial backend") {
  auto backend = TraceSpatialBackend::from_text(
      "{\"frame\": 5, \"detections\": [{\"class\": \"firearm\", \"conf\": 0.8, \"box\": [1,2,3,4]}]}\n"
      "\n"
      "{\"frame\": 7, \"detections\": [{\"class\": \"person\", \"conf\": 0.9, \"box\": [0,0,9,9], "
      "\"keypoints\": [[0, 1, 1, 0.9], [1, 2, 2, 0.5]]}]}\n");
  CHECK(backend.has_pose());
  const auto five = backend.detect(testing_util::gray(5, 4, 0));
  REQUIRE(five.size() == 1);
  CHECK(five[0].object_class == KeyObjectClass::Firearm);
  CHECK(five[0].box == BoundingBox::make(1, 2, 3, 4));
  CHECK(backend.detect(testing_util::gray(6, 4, 0)).empty());
  CHECK(backend.detect(testing_util::gray(7, 4, 0))[0].keypoints->size() == 2);

  CHECK_THROWS_AS(TraceSpatialBackend::from_text("{\"frame\": 1}"), TraceFormatError);
  CHECK_THROWS_AS(TraceSpatialBackend::from_text("not json"), TraceFormatError);
  CHECK_THROWS_AS(
      TraceSpatialBackend::from_text("{\"frame\": 1, \"detections\": [{\"class\": \"cat\", \"conf\": 1, \"box\": [0,0,1,1]}]}"),
      TraceFormatError);
  CHECK_THROWS_AS(
      TraceSpatialBackend::from_text("{\"frame\": 1, \"detections\": [{\"class\": \"smoke\", \"conf\": 1, \"box\": [3,0,1,1]}]}"),
      TraceFormatError);
  CHECK_THROWS_AS(TraceSpatialBackend::from_text("{\"frame\": 1, \"detections\": []}\n{\"frame\": 1, \"detections\": []}"),
                  TraceFormatError);
  try {
    TraceSpatialBackend::from_text("{\"frame\": 0, \"detections\": []}\n{\"frame\": -2, \"detections\": []}");
  } catch (const TraceFormatError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("trace round trip is byte-stable") {
  std::vector<Detection> dets = {detection(KeyObjectClass::Person, 0.5, 1, 7.25, 9, 0.66)};
  dets[0].keypoints = std::vector<Keypoint>{{3, 1.5, 2.5, 0.4}};
  const auto line = spatial_trace_line(12, dets);
  auto backend = TraceSpatialBackend::from_text(line);
  CHECK(spatial_trace_line(12, backend.detect(testing_util::gray(12, 4, 0))) == line);

  const auto w = testing_util::model_window(0, 0);
  SpatialConfig all;
  all.frame_selection = FrameSelection::All;
  all.frames_per_window = 15;
  auto b1 = TraceSpatialBackend::from_text(line), b2 = TraceSpatialBackend::from_text(line);
  CHECK(to_json(analyze_window(w, b1, all)).dump() == to_json(analyze_window(w, b2, all)).dump());
}

TEST_CASE("synthetic spatial backend") {
  SyntheticSpatialBackend black_rule(parse_synthetic_spatial_spec("latency=0"));
  CHECK(black_rule.detect(Frame::filled(0, 0, 32, 32, 0, 0, 0)).empty());

  SyntheticSpec spec;
  spec.pattern = SyntheticPattern::RedQuadrant;
  spec.width = 64;
  spec.height = 48;
  const auto frame = synthetic_frame(spec, 0);
  const auto dets = black_rule.detect(frame);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].object_class == KeyObjectClass::Flame);
  // The red quadrant spans x in [0,32), y in [0,24); its centroid is (16,12).
  CHECK(dets[0].box.contains(16.0, 12.0));
  CHECK(dets[0].box == BoundingBox::make(0, 0, 32, 24));

  SyntheticSpatialBackend slow(parse_synthetic_spatial_spec("latency=50,rule=none"));
  const auto t0 = Clock::now();
  CHECK(slow.detect(frame).empty());
  CHECK(elapsed_ms(t0, Clock::now()) >= 50.0);
  CHECK(slow.calls() == 1);

  SyntheticSpatialBackend failing(parse_synthetic_spatial_spec("fail=3;4"));
  CHECK_NOTHROW(failing.detect(testing_util::gray(2, 8, 0)));
  CHECK_THROWS_AS(failing.detect(testing_util::gray(3, 8, 0)), BackendError);
  CHECK_THROWS_AS(parse_synthetic_spatial_spec("rule=blue"), ConfigError);
}
