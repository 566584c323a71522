#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stap/config.hpp"

namespace stap {

struct WindowGap {
  std::int64_t window_index = 0;
  std::string stage;  // "spatial", "temporal", "preprocess"
  std::string message;
  std::int64_t frame_index = -1;
};

struct RunStats {
  std::int64_t windows_formed = 0;
  std::int64_t skipped_windows = 0;
  double video_duration_ms = 0.0;
  // Wall-clock fields below vary run to run.
  double mean_latency_ms = 0.0;
  double median_latency_ms = 0.0;
  double total_processing_ms = 0.0;
  std::size_t peak_inflight_windows = 0;
};

struct RunReport {
  PipelineConfig config;
  std::string source;
  std::vector<AnomalyPrediction> predictions;  // window order
  std::vector<WindowGap> gaps;                 // window order
  RunStats stats;
  std::optional<StreamFault> ingest_fault;
  PreprocessDiagnostics diagnostics;
};

nlohmann::ordered_json to_json(const RunReport& r, bool include_timing = true);
// window_index,t_start_ms,label,source,latency_ms
std::string to_csv(const RunReport& r, bool include_timing = true);

using PredictionSink = std::function<void(const AnomalyPrediction&)>;

// Runs one configured pipeline over a frame source. Windows are processed
// by up to max_inflight_windows workers; in parallel mode the spatial and
// temporal branches of a window run concurrently and join before fusion.
// With threads == 1 everything runs on the calling thread, same outputs.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, Backends backends);

  // Enriched/model-space windows are written here as packed raw video.
  void set_dump_dir(std::filesystem::path dir) { dump_dir_ = std::move(dir); }
  void set_source_name(std::string name) { source_name_ = std::move(name); }

  RunReport run(FrameSource& source, const PredictionSink& sink = {});

  const PipelineConfig& config() const { return cfg_; }

 private:
  struct Outcome;
  Outcome process(const SequenceWindow& raw) const;

  PipelineConfig cfg_;
  Backends backends_;
  std::optional<std::filesystem::path> dump_dir_;
  std::string source_name_;
};

RunReport run_parallel(const PipelineConfig& cfg, const Backends& backends, FrameSource& source);
RunReport run_serial(const PipelineConfig& cfg, const Backends& backends, FrameSource& source);

using SourceFactory = std::function<std::unique_ptr<FrameSource>()>;

struct ModeComparison {
  RunReport first;
  RunReport second;
  double latency_ratio = 0.0;    // first mean latency / second mean latency
  double label_agreement = 0.0;  // fraction of windows predicted by both with equal labels
  std::size_t compared_windows = 0;
};

ModeComparison compare_modes(const PipelineConfig& first, const PipelineConfig& second, const Backends& backends,
                             const SourceFactory& source);

// Per-window latency the composition model predicts for synthetic backends:
// parallel max(k * spatial, temporal), serial n * spatial + temporal.
double modeled_window_latency_ms(const PipelineConfig& cfg, double spatial_ms_per_frame, double temporal_ms);

}  // namespace stap
