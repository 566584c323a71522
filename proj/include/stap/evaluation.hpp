#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stap/core.hpp"
#include "stap/error.hpp"

namespace stap {

// Labels outside the active class profile; rows name the offending entries
// (video_id,window,label for truth, list positions for pairs).
class ProfileViolation : public Error {
 public:
  ProfileViolation(const std::string& what, std::vector<std::string> rows);
  const std::vector<std::string>& rows() const { return rows_; }

 private:
  std::vector<std::string> rows_;
};

struct TruthKey {
  std::string video_id;
  std::int64_t window_index = 0;

  friend auto operator<=>(const TruthKey&, const TruthKey&) = default;
};

struct GroundTruthSet {
  std::map<TruthKey, AnomalyClass> labels;

  // "video_id,window_index,label" with a header row.
  static GroundTruthSet load_csv(const std::filesystem::path& path);
  static GroundTruthSet parse_csv(const std::string& text, const std::string& origin = "<memory>");

  // Throws ProfileViolation when a label is outside the profile.
  void check_profile(ClassProfile profile) const;
};

struct LabeledPair {
  AnomalyClass truth = AnomalyClass::Normal;
  AnomalyClass predicted = AnomalyClass::Normal;
};

// All rates are fractions internally; display helpers multiply by 100.
struct EvalReport {
  ClassProfile profile = ClassProfile::FourClass;
  std::vector<AnomalyClass> classes;
  std::vector<std::vector<std::int64_t>> confusion_counts;  // [truth][predicted]
  std::vector<std::vector<double>> confusion_row_pct;       // percent; zero rows stay zero
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::int64_t> support;
  std::int64_t total = 0;
  std::int64_t skipped_windows = 0;
  double accuracy = 0.0;  // percent
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
};

// Support-weighted one-vs-rest precision/recall/F1. A class nobody predicted
// has precision 0. Throws ProfileViolation for out-of-profile labels and
// Error for an empty input.
EvalReport score_pairs(std::span<const LabeledPair> pairs, ClassProfile profile = ClassProfile::FourClass);

// Joins predictions to truth by (video_id, window_index); when video_id is
// empty the window index alone must identify one truth row. Throws
// MissingLabel listing every unmatched window.
EvalReport score(const std::vector<AnomalyPrediction>& predictions, const GroundTruthSet& truth,
                 ClassProfile profile = ClassProfile::FourClass, std::int64_t skipped_windows = 0,
                 const std::string& video_id = "");

struct FormattedReport {
  std::string text;
  std::string csv;
};

// Metrics row followed by the row-normalized confusion matrix, in profile
// column order. Throws Error when the report is empty or built for another
// profile.
FormattedReport class_profile_report(const EvalReport& report, ClassProfile profile);
nlohmann::ordered_json to_json(const EvalReport& report);

// Loads predictions from a run report (JSON) or per-window CSV
// ([video_id,]window_index,t_start_ms,label,source,latency_ms).
struct LoadedPredictions {
  std::vector<AnomalyPrediction> predictions;
  std::vector<std::string> video_ids;  // parallel to predictions, may be empty strings
  std::int64_t skipped_windows = 0;
};
LoadedPredictions load_predictions(const std::filesystem::path& path);

EvalReport score_loaded(const LoadedPredictions& loaded, const GroundTruthSet& truth, ClassProfile profile);

}  // namespace stap
