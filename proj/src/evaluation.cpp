#include "stap/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stap/util.hpp"

namespace stap {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v);
  return buf;
}

std::string num2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::size_t class_slot(const std::vector<AnomalyClass>& classes, AnomalyClass c) {
  return static_cast<std::size_t>(std::find(classes.begin(), classes.end(), c) - classes.begin());
}

EvalReport score_joined(const std::vector<AnomalyPrediction>& predictions, const std::vector<std::string>& video_ids,
                        const GroundTruthSet& truth, ClassProfile profile, std::int64_t skipped) {
  // Window index -> truth rows, for predictions that carry no video id.
  std::map<std::int64_t, std::vector<AnomalyClass>> by_window;
  for (const auto& [key, label] : truth.labels) by_window[key.window_index].push_back(label);

  std::vector<LabeledPair> pairs;
  std::vector<std::int64_t> missing;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const std::string& vid = i < video_ids.size() ? video_ids[i] : std::string();
    if (!vid.empty()) {
      const auto it = truth.labels.find({vid, p.window_index});
      if (it == truth.labels.end()) {
        missing.push_back(p.window_index);
        continue;
      }
      pairs.push_back({it->second, p.label});
      continue;
    }
    const auto it = by_window.find(p.window_index);
    if (it == by_window.end() || it->second.size() != 1) {
      missing.push_back(p.window_index);
      continue;
    }
    pairs.push_back({it->second.front(), p.label});
  }
  if (!missing.empty()) throw MissingLabel(std::move(missing));
  auto report = score_pairs(pairs, profile);
  report.skipped_windows = skipped;
  return report;
}

}  // namespace

ProfileViolation::ProfileViolation(const std::string& what, std::vector<std::string> rows)
    : Error([&] {
        std::string msg = what;
        for (const auto& r : rows) msg += "\n  " + r;
        return msg;
      }()),
      rows_(std::move(rows)) {}

GroundTruthSet GroundTruthSet::load_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path), path.string());
}

GroundTruthSet GroundTruthSet::parse_csv(const std::string& text, const std::string& origin) {
  GroundTruthSet out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (cols.size() == 3 && cols[0] == "video_id") continue;
    }
    if (cols.size() != 3) throw Error(origin + ":" + std::to_string(line_no) + ": expected video_id,window_index,label");
    try {
      TruthKey key{cols[0], parse_int(cols[1], "window_index")};
      if (!out.labels.emplace(key, parse_anomaly_class(cols[2])).second) {
        throw Error("duplicate truth row for " + cols[0] + "/" + cols[1]);
      }
    } catch (const std::exception& e) {
      throw Error(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void GroundTruthSet::check_profile(ClassProfile profile) const {
  std::vector<std::string> rows;
  for (const auto& [key, label] : labels) {
    if (!profile_contains(profile, label)) {
      rows.push_back(key.video_id + "," + std::to_string(key.window_index) + "," + std::string(to_string(label)));
    }
  }
  if (!rows.empty()) {
    throw ProfileViolation("truth labels outside the " + std::to_string(static_cast<int>(profile)) + "-class profile:",
                           std::move(rows));
  }
}

EvalReport score_pairs(std::span<const LabeledPair> pairs, ClassProfile profile) {
  if (pairs.empty()) throw Error("nothing to score: no predictions");
  EvalReport r;
  r.profile = profile;
  r.classes = profile_classes(profile);
  const std::size_t k = r.classes.size();

  std::vector<std::string> bad;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!profile_contains(profile, pairs[i].truth) || !profile_contains(profile, pairs[i].predicted)) {
      bad.push_back("#" + std::to_string(i + 1) + " truth=" + std::string(to_string(pairs[i].truth)) +
                    " predicted=" + std::string(to_string(pairs[i].predicted)));
    }
  }
  if (!bad.empty()) {
    throw ProfileViolation("labels outside the " + std::to_string(static_cast<int>(profile)) + "-class profile:",
                           std::move(bad));
  }

  r.confusion_counts.assign(k, std::vector<std::int64_t>(k, 0));
  for (const auto& p : pairs) ++r.confusion_counts[class_slot(r.classes, p.truth)][class_slot(r.classes, p.predicted)];
  r.total = static_cast<std::int64_t>(pairs.size());

  r.support.assign(k, 0);
  std::vector<std::int64_t> predicted(k, 0);
  std::int64_t diagonal = 0;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t p = 0; p < k; ++p) {
      r.support[t] += r.confusion_counts[t][p];
      predicted[p] += r.confusion_counts[t][p];
    }
    diagonal += r.confusion_counts[t][t];
  }

  r.confusion_row_pct.assign(k, std::vector<double>(k, 0.0));
  r.precision.assign(k, 0.0);
  r.recall.assign(k, 0.0);
  r.f1.assign(k, 0.0);
  double wp = 0.0, wr = 0.0, wf = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const auto tp = static_cast<double>(r.confusion_counts[c][c]);
    if (r.support[c] > 0) {
      for (std::size_t p = 0; p < k; ++p) {
        r.confusion_row_pct[c][p] = 100.0 * static_cast<double>(r.confusion_counts[c][p]) / r.support[c];
      }
      r.recall[c] = tp / r.support[c];
    }
    if (predicted[c] > 0) r.precision[c] = tp / predicted[c];
    if (r.precision[c] + r.recall[c] > 0.0) {
      r.f1[c] = 2.0 * r.precision[c] * r.recall[c] / (r.precision[c] + r.recall[c]);
    }
    const double w = static_cast<double>(r.support[c]);
    wp += w * r.precision[c];
    wr += w * r.recall[c];
    wf += w * r.f1[c];
  }
  const double n = static_cast<double>(r.total);
  r.accuracy = 100.0 * static_cast<double>(diagonal) / n;
  r.weighted_precision = 100.0 * wp / n;
  r.weighted_recall = 100.0 * wr / n;
  r.weighted_f1 = 100.0 * wf / n;
  return r;
}

EvalReport score(const std::vector<AnomalyPrediction>& predictions, const GroundTruthSet& truth, ClassProfile profile,
                 std::int64_t skipped_windows, const std::string& video_id) {
  return score_joined(predictions, std::vector<std::string>(predictions.size(), video_id), truth, profile,
                      skipped_windows);
}

EvalReport score_loaded(const LoadedPredictions& loaded, const GroundTruthSet& truth, ClassProfile profile) {
  return score_joined(loaded.predictions, loaded.video_ids, truth, profile, loaded.skipped_windows);
}

FormattedReport class_profile_report(const EvalReport& report, ClassProfile profile) {
  if (report.total == 0) throw Error("cannot format an empty evaluation report");
  if (report.profile != profile) throw Error("evaluation report was built for a different class profile");
  const auto& classes = report.classes;

  std::ostringstream t;
  t << std::left << std::setw(12) << "Accuracy" << std::setw(12) << "Precision" << std::setw(12) << "Recall"
    << "F1-Score\n";
  t << std::setw(12) << pct(report.accuracy) << std::setw(12) << pct(report.weighted_precision) << std::setw(12)
    << pct(report.weighted_recall) << pct(report.weighted_f1) << "\n\n";
  t << "Confusion matrix (in percent)\n";
  t << std::setw(17) << "Truth\\Predicted";
  for (auto c : classes) t << std::right << std::setw(10) << display_name(c);
  t << "\n";
  for (std::size_t i = 0; i < classes.size(); ++i) {
    t << std::left << std::setw(17) << display_name(classes[i]);
    for (std::size_t j = 0; j < classes.size(); ++j) t << std::right << std::setw(10) << pct(report.confusion_row_pct[i][j]);
    t << "\n";
  }

  std::ostringstream c;
  c << "accuracy,precision,recall,f1_score\n";
  c << num2(report.accuracy) << ',' << num2(report.weighted_precision) << ',' << num2(report.weighted_recall) << ','
    << num2(report.weighted_f1) << "\n";
  c << "truth\\predicted";
  for (auto cls : classes) c << ',' << to_string(cls);
  c << "\n";
  for (std::size_t i = 0; i < classes.size(); ++i) {
    c << to_string(classes[i]);
    for (std::size_t j = 0; j < classes.size(); ++j) c << ',' << num2(report.confusion_row_pct[i][j]);
    c << "\n";
  }
  return {t.str(), c.str()};
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["classes"] = static_cast<int>(r.profile);
  auto names = nlohmann::ordered_json::array();
  for (auto c : r.classes) names.push_back(to_string(c));
  j["labels"] = names;
  j["total"] = r.total;
  j["skipped_windows"] = r.skipped_windows;
  j["accuracy"] = r.accuracy;
  j["weighted_precision"] = r.weighted_precision;
  j["weighted_recall"] = r.weighted_recall;
  j["weighted_f1"] = r.weighted_f1;
  j["confusion_counts"] = r.confusion_counts;
  j["confusion_row_pct"] = r.confusion_row_pct;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    per_class[std::string(to_string(r.classes[i]))] = {
        {"support", r.support[i]}, {"precision", r.precision[i]}, {"recall", r.recall[i]}, {"f1", r.f1[i]}};
  }
  j["per_class"] = std::move(per_class);
  return j;
}

LoadedPredictions load_predictions(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  LoadedPredictions out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const auto j = nlohmann::json::parse(text);
    if (!j.contains("predictions") || !j["predictions"].is_array()) throw Error(path.string() + ": no predictions array");
    const std::string vid = j.value("video_id", std::string());
    for (const auto& pj : j["predictions"]) {
      AnomalyPrediction p;
      p.window_index = pj.at("window_index").get<std::int64_t>();
      p.label = parse_anomaly_class(pj.at("label").get<std::string>());
      if (pj.contains("source")) p.source = parse_prediction_source(pj["source"].get<std::string>());
      if (pj.contains("t_start_ms")) p.t_start_ms = pj["t_start_ms"].get<double>();
      out.predictions.push_back(p);
      out.video_ids.push_back(vid);
    }
    if (j.contains("stats") && j["stats"].contains("skipped_windows")) {
      out.skipped_windows = j["stats"]["skipped_windows"].get<std::int64_t>();
    }
    return out;
  }

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool with_video = false;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (!cols.empty() && (cols[0] == "window_index" || cols[0] == "video_id")) {
        with_video = cols[0] == "video_id";
        continue;
      }
    }
    const std::size_t base = with_video ? 1 : 0;
    if (cols.size() < base + 3) throw Error(path.string() + ":" + std::to_string(line_no) + ": too few columns");
    try {
      AnomalyPrediction p;
      p.window_index = parse_int(cols[base], "window_index");
      p.t_start_ms = parse_double(cols[base + 1], "t_start_ms");
      p.label = parse_anomaly_class(cols[base + 2]);
      if (cols.size() > base + 3) p.source = parse_prediction_source(cols[base + 3]);
      out.predictions.push_back(p);
      out.video_ids.push_back(with_video ? cols[0] : std::string());
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace stap
