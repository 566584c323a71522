#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "stap/error.hpp"
#include "stap/evaluation.hpp"

using namespace stap;

namespace {

std::vector<LabeledPair> pairs_of(const std::vector<int>& truth, const std::vector<int>& pred) {
  std::vector<LabeledPair> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out.push_back({static_cast<AnomalyClass>(truth[i]), static_cast<AnomalyClass>(pred[i])});
  }
  return out;
}

AnomalyPrediction pred(std::int64_t window, AnomalyClass label) {
  AnomalyPrediction p;
  p.window_index = window;
  p.label = label;
  return p;
}

}  // namespace

TEST_CASE("two-class toy") {
  const auto f = AnomalyClass::Fight;
  const auto n = AnomalyClass::Normal;
  const std::vector<LabeledPair> pairs = {{f, f}, {f, n}, {n, n}};
  const auto r = score_pairs(pairs);
  CHECK(r.accuracy == doctest::Approx(200.0 / 3));
  CHECK(r.precision[0] == doctest::Approx(1.0));
  CHECK(r.precision[3] == doctest::Approx(0.5));
  CHECK(r.weighted_precision == doctest::Approx(250.0 / 3).epsilon(1e-12));
  CHECK(r.weighted_recall == doctest::Approx(r.accuracy));
  // Never-predicted, never-present classes contribute nothing.
  CHECK(r.precision[1] == 0.0);
  CHECK(r.support[1] == 0);
}

TEST_CASE("perfect predictions score 100 everywhere") {
  std::vector<LabeledPair> pairs;
  for (int i = 0; i < 20; ++i) {
    const auto c = static_cast<AnomalyClass>(i % 4);
    pairs.push_back({c, c});
  }
  const auto r = score_pairs(pairs);
  CHECK(r.accuracy == 100.0);
  CHECK(r.weighted_precision == 100.0);
  CHECK(r.weighted_recall == 100.0);
  CHECK(r.weighted_f1 == 100.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.confusion_row_pct[i][i] == 100.0);
}

TEST_CASE("randomized metrics match the oracle") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = trial % 2 ? 4 : 3;
    const std::size_t n = 1 + rng() % 60;
    // Three-class labels live on Fight, Gunshot and Normal (indices 0, 1, 3).
    auto draw = [&] {
      int c = static_cast<int>(rng() % static_cast<unsigned>(k));
      return k == 3 && c == 2 ? 3 : c;
    };
    std::vector<int> truth(n), predicted(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = draw();
      predicted[i] = draw();
    }
    const auto profile = k == 3 ? ClassProfile::ThreeClass : ClassProfile::FourClass;
    const auto r = score_pairs(pairs_of(truth, predicted), profile);
    const auto want = oracle::weighted(truth, predicted, 4);
    CHECK(r.accuracy == doctest::Approx(want.accuracy).epsilon(1e-12));
    CHECK(r.weighted_precision == doctest::Approx(want.precision).epsilon(1e-12));
    CHECK(r.weighted_recall == doctest::Approx(want.recall).epsilon(1e-12));
    CHECK(r.weighted_f1 == doctest::Approx(want.f1).epsilon(1e-12));
    CHECK(std::abs(r.weighted_recall - r.accuracy) < 1e-9);

    for (double v : {r.accuracy, r.weighted_precision, r.weighted_recall, r.weighted_f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 100.0);
    }
    std::int64_t counted = 0;
    for (std::size_t i = 0; i < r.classes.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < r.classes.size(); ++j) {
        row += r.confusion_row_pct[i][j];
        counted += r.confusion_counts[i][j];
      }
      if (r.support[i] > 0) CHECK(row == doctest::Approx(100.0));
      else CHECK(row == 0.0);
    }
    CHECK(counted == static_cast<std::int64_t>(n));

    // Reordering the pairs changes nothing.
    auto shuffled = pairs_of(truth, predicted);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = score_pairs(shuffled, profile);
    CHECK(again.weighted_f1 == doctest::Approx(r.weighted_f1).epsilon(1e-12));
    CHECK(again.confusion_counts == r.confusion_counts);
  }
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(score_pairs({}), Error);
  const std::vector<LabeledPair> fire = {{AnomalyClass::Fire, AnomalyClass::Normal}};
  CHECK_THROWS_AS(score_pairs(fire, ClassProfile::ThreeClass), ProfileViolation);

  const auto truth = GroundTruthSet::parse_csv("video_id,window_index,label\nv,0,fight\nv,1,normal\nw,1,fire\n");
  CHECK_THROWS_AS(score({pred(5, AnomalyClass::Fight)}, truth, ClassProfile::FourClass, 0, "v"), MissingLabel);
  // Window 1 is ambiguous without a video id.
  CHECK_THROWS_AS(score({pred(1, AnomalyClass::Fight)}, truth), MissingLabel);
  CHECK_NOTHROW(score({pred(0, AnomalyClass::Fight)}, truth));
  CHECK_THROWS_AS(truth.check_profile(ClassProfile::ThreeClass), ProfileViolation);
  try {
    truth.check_profile(ClassProfile::ThreeClass);
  } catch (const ProfileViolation& e) {
    REQUIRE(e.rows().size() == 1);
    CHECK(e.rows()[0] == "w,1,fire");
  }
  CHECK_THROWS_AS(GroundTruthSet::parse_csv("video_id,window_index,label\nv,x,fight\n"), Error);
  CHECK_THROWS_AS(GroundTruthSet::parse_csv("video_id,window_index,label\nv,0,riot\n"), Error);
}

TEST_CASE("join by video id") {
  const auto truth = GroundTruthSet::parse_csv("video_id,window_index,label\na,0,fight\nb,0,normal\n");
  const auto r = score({pred(0, AnomalyClass::Normal)}, truth, ClassProfile::FourClass, 2, "b");
  CHECK(r.accuracy == 100.0);
  CHECK(r.skipped_windows == 2);
}

TEST_CASE("report layout") {
  const auto f = AnomalyClass::Fight;
  const auto n = AnomalyClass::Normal;
  const std::vector<LabeledPair> pairs = {{f, f}, {f, n}, {n, n}};
  const auto r = score_pairs(pairs, ClassProfile::ThreeClass);
  const auto out = class_profile_report(r, ClassProfile::ThreeClass);
  CHECK(out.text.find("Fire") == std::string::npos);
  CHECK(out.text.find("Gunshot") != std::string::npos);
  CHECK(out.text.rfind("Accuracy    Precision   Recall      F1-Score\n66.67%", 0) == 0);
  CHECK(out.csv.rfind("accuracy,precision,recall,f1_score\n66.67,83.33,66.67,", 0) == 0);
  CHECK(out.csv.find("truth\\predicted,fight,gunshot,normal\n") != std::string::npos);
  CHECK_THROWS_AS(class_profile_report(r, ClassProfile::FourClass), Error);

  const auto four = class_profile_report(score_pairs(pairs), ClassProfile::FourClass);
  CHECK(four.text.find("Fire") != std::string::npos);
  const auto j = to_json(r);
  CHECK(j["classes"] == 3);
}

TEST_CASE("prediction loading") {
  const auto dir = testing_util::scratch_dir("eval");
  std::ofstream(dir / "r.json") << R"({"video_id": "clip", "predictions": [
    {"window_index": 0, "label": "fight", "source": "temporal"},
    {"window_index": 2, "label": "fire", "source": "spatial-override"}],
    "stats": {"skipped_windows": 1}})";
  const auto json = load_predictions(dir / "r.json");
  REQUIRE(json.predictions.size() == 2);
  CHECK(json.video_ids[1] == "clip");
  CHECK(json.predictions[1].label == AnomalyClass::Fire);
  CHECK(json.predictions[1].source == PredictionSource::SpatialOverride);
  CHECK(json.skipped_windows == 1);

  std::ofstream(dir / "p.csv") << "video_id,window_index,t_start_ms,label,source,latency_ms\nclip,0,0,fight,temporal,0\n"
                                  "clip,2,1000,normal,temporal,0\n";
  const auto csv = load_predictions(dir / "p.csv");
  REQUIRE(csv.predictions.size() == 2);
  CHECK(csv.video_ids[0] == "clip");
  CHECK(csv.predictions[1].window_index == 2);

  std::ofstream(dir / "bare.csv") << "window_index,t_start_ms,label,source,latency_ms\n3,0,gunshot,temporal,0\n";
  const auto bare = load_predictions(dir / "bare.csv");
  CHECK(bare.video_ids[0].empty());
  CHECK(bare.predictions[0].label == AnomalyClass::Gunshot);

  const auto truth = GroundTruthSet::parse_csv("video_id,window_index,label\nclip,0,fight\nclip,2,fire\n");
  const auto r = score_loaded(json, truth, ClassProfile::FourClass);
  CHECK(r.accuracy == 100.0);
  CHECK(r.skipped_windows == 1);
  std::filesystem::remove_all(dir);
}
