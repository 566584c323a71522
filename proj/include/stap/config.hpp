#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "stap/fusion.hpp"
#include "stap/ingest.hpp"
#include "stap/preprocess.hpp"
#include "stap/spatial.hpp"
#include "stap/temporal.hpp"

namespace stap {

enum class PipelineMode : std::uint8_t { Parallel, Serial, TemporalOnly, SpatialOnly };
std::string_view to_string(PipelineMode m);
PipelineMode parse_pipeline_mode(std::string_view text);

// "trace:FILE" or "synthetic:OPTIONS".
struct BackendSpec {
  enum class Kind : std::uint8_t { Trace, Synthetic };
  Kind kind = Kind::Synthetic;
  std::string argument;

  static BackendSpec parse(std::string_view text);
  std::string text() const;
};

struct PipelineConfig {
  PipelineMode mode = PipelineMode::Parallel;
  SamplingPolicy sampling;
  SpatialConfig spatial;
  bool spatial_selection_explicit = false;  // serial mode defaults to All otherwise
  std::optional<PreprocessVariant> preprocess_variant;
  SkeletonStyle skeleton;
  FusionPolicy fusion;
  std::optional<BackendSpec> spatial_backend;
  std::optional<BackendSpec> temporal_backend;
  ClassProfile profile = ClassProfile::FourClass;
  std::size_t max_inflight_windows = 2;
  double anomaly_threshold = 0.0;
  std::size_t threads = 0;                 // 1 runs every stage on the calling thread
  std::optional<std::int64_t> max_windows;  // stop after this many windows (continuous sources)

  bool uses_spatial() const { return mode != PipelineMode::TemporalOnly; }
  bool uses_temporal() const { return mode != PipelineMode::SpatialOnly; }
  SpatialConfig effective_spatial() const;

  // Throws ConfigError.
  void validate() const;
};

// Sectioned key = value text. Keys mirror PipelineConfig field names:
//   [pipeline]   mode, max_inflight_windows, anomaly_threshold, threads, max_windows, classes
//   [sampling]   frame_interval, window_size, window_stride, tail_policy
//   [spatial]    backend, confidence_threshold, frames_per_window, frame_selection
//   [preprocess] variant, line_thickness_px, min_joint_conf
//   [temporal]   backend
//   [fusion]     key_object_priority, gate_required_for_gunshot, person_triggers_fight
void apply_config_text(PipelineConfig& cfg, const std::string& text);
PipelineConfig load_config_file(const std::filesystem::path& path);
std::string to_config_text(const PipelineConfig& cfg);
nlohmann::ordered_json to_json(const PipelineConfig& cfg);

struct Backends {
  std::shared_ptr<SpatialBackend> spatial;
  std::shared_ptr<TemporalBackend> temporal;
};

std::shared_ptr<SpatialBackend> make_spatial_backend(const BackendSpec& spec);
std::shared_ptr<TemporalBackend> make_temporal_backend(const BackendSpec& spec, ClassProfile profile);
// Builds only the backends the mode needs; a needed backend must be configured.
Backends make_backends(const PipelineConfig& cfg);

}  // namespace stap
