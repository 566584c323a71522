#include "doctest.h"

#include <numeric>
#include <random>

#include "helpers.hpp"
#include "stap/error.hpp"
#include "stap/ingest.hpp"
#include "stap/temporal.hpp"
#include "stap/util.hpp"

using namespace stap;

namespace {

TemporalVerdict verdict_for(const std::string& scores, double threshold = 0.0) {
  auto backend = TraceTemporalBackend::from_text("{\"window\": 0, \"scores\": " + scores + "}");
  return classify_window(testing_util::model_window(0, 0), backend, threshold);
}

SequenceWindow alternating_window() {
  SequenceWindow w;
  for (int i = 0; i < 15; ++i) {
    const std::uint8_t v = i % 2 ? 255 : 0;
    w.frames.push_back(Frame::filled(i, 0, kModelSide, kModelSide, v, v, v));
  }
  return w;
}

}  // namespace

TEST_CASE("classify examples") {
  const auto fight = verdict_for(R"({"fight": 0.7, "gunshot": 0.1, "fire": 0.1, "normal": 0.1})");
  CHECK(fight.anomaly);
  CHECK(fight.result.argmax_class == AnomalyClass::Fight);

  const auto normal = verdict_for(R"({"fight": 0, "gunshot": 0, "fire": 0, "normal": 1})");
  CHECK_FALSE(normal.anomaly);

  const auto uniform = verdict_for(R"({"fight": 0.25, "gunshot": 0.25, "fire": 0.25, "normal": 0.25})");
  CHECK(uniform.result.argmax_class == AnomalyClass::Fight);
  CHECK(uniform.anomaly);
  CHECK_FALSE(verdict_for(R"({"fight": 0.25, "gunshot": 0.25, "fire": 0.25, "normal": 0.25})", 0.3).anomaly);
}

TEST_CASE("threshold monotonicity") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto r = TemporalResult::from_scores({u(rng), u(rng), u(rng), u(rng)});
    bool previous = true;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const bool flag = anomaly_flag(r, t);
      CHECK((previous || !flag));
      previous = flag;
    }
  }
}

TEST_CASE("trace temporal backend") {
  auto backend = TraceTemporalBackend::from_text(
      "{\"window\": 0, \"scores\": {\"fight\": 0.1, \"gunshot\": 0.6, \"fire\": 0.1, \"normal\": 0.2}}\n"
      "{\"window\": 1, \"scores\": {\"fight\": 2, \"gunshot\": 1, \"fire\": 1, \"normal\": 0}}\n");
  CHECK(backend.renormalized() == 1);
  const auto r0 = backend.classify(testing_util::model_window(0, 0));
  CHECK(r0.argmax_class == AnomalyClass::Gunshot);
  CHECK(r0.score(AnomalyClass::Gunshot) == doctest::Approx(0.6));
  const auto r1 = backend.classify(testing_util::model_window(1, 15));
  CHECK(r1.score(AnomalyClass::Fight) == doctest::Approx(0.5));
  CHECK(std::accumulate(r1.scores.begin(), r1.scores.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(backend.classify(testing_util::model_window(7, 0)), MissingTraceEntry);
  try {
    classify_window(testing_util::model_window(7, 0), backend);
    FAIL("expected BackendError");
  } catch (const BackendError&) {
  }

  CHECK_THROWS_AS(TraceTemporalBackend::from_text("{\"window\": 0}"), TraceFormatError);
  CHECK_THROWS_AS(TraceTemporalBackend::from_text("{\"window\": 0, \"scores\": {\"fight\": 1}}"), TraceFormatError);
  CHECK_THROWS_AS(TraceTemporalBackend::from_text(
                      "{\"window\": 0, \"scores\": {\"fight\": 1, \"gunshot\": 0, \"fire\": 0, \"normal\": -1}}"),
                  TraceFormatError);
}

TEST_CASE("three-class traces never carry fire") {
  auto three = TraceTemporalBackend::from_text("{\"window\": 0, \"scores\": {\"fight\": 0.2, \"gunshot\": 0.3, \"normal\": 0.5}}",
                                               ClassProfile::ThreeClass);
  const auto r = three.classify(testing_util::model_window(0, 0));
  CHECK(r.score(AnomalyClass::Fire) == 0.0);
  CHECK(r.profile == ClassProfile::ThreeClass);
  CHECK_THROWS_AS(TraceTemporalBackend::from_text(
                      "{\"window\": 0, \"scores\": {\"fight\": 0.2, \"gunshot\": 0.3, \"fire\": 0.1, \"normal\": 0.4}}",
                      ClassProfile::ThreeClass),
                  TraceFormatError);
  const auto line = temporal_trace_line(3, {0.2, 0.3, 0.0, 0.5}, ClassProfile::ThreeClass);
  CHECK(line.find("fire") == std::string::npos);
}

TEST_CASE("classify_window requires model space") {
  SyntheticTemporalBackend backend(parse_synthetic_temporal_spec(""));
  auto w = testing_util::model_window(0, 0);
  w.frames[0] = testing_util::gray(0, 64, 0);
  CHECK_THROWS_AS(classify_window(w, backend), InvalidWindow);
}

TEST_CASE("synthetic temporal backend") {
  SyntheticTemporalBackend motion(parse_synthetic_temporal_spec("rule=motion"));
  CHECK(window_motion(alternating_window()) == 255.0);
  CHECK(motion.classify(alternating_window()).argmax_class == AnomalyClass::Fight);
  CHECK(window_motion(testing_util::model_window(0, 0)) == 0.0);
  CHECK(motion.classify(testing_util::model_window(0, 0)).argmax_class == AnomalyClass::Normal);

  SyntheticTemporalBackend slow(parse_synthetic_temporal_spec("latency=100,rule=constant,class=gunshot"));
  const auto t0 = Clock::now();
  const auto r = slow.classify(testing_util::model_window(0, 0));
  CHECK(elapsed_ms(t0, Clock::now()) >= 100.0);
  CHECK(r.argmax_class == AnomalyClass::Gunshot);

  SyntheticTemporalBackend three(parse_synthetic_temporal_spec("classes=3,rule=constant,class=fight"));
  CHECK(three.classify(testing_util::model_window(0, 0)).score(AnomalyClass::Fire) == 0.0);
  CHECK_THROWS_AS(parse_synthetic_temporal_spec("classes=3,rule=constant,class=fire"), ConfigError);

  SyntheticTemporalBackend failing(parse_synthetic_temporal_spec("fail=2"));
  CHECK_THROWS_AS(failing.classify(testing_util::model_window(2, 30)), BackendError);
  CHECK_NOTHROW(failing.classify(testing_util::model_window(1, 15)));
}
