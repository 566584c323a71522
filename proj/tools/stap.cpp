// stap: run, benchmark and score the spatio-temporal anomaly pipeline.
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 run completed with
// skipped windows, 4 run failed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stap/config.hpp"
#include "stap/error.hpp"
#include "stap/evaluation.hpp"
#include "stap/fixtures.hpp"
#include "stap/orchestrator.hpp"
#include "stap/util.hpp"

namespace fs = std::filesystem;
using namespace stap;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kPartial = 3;
constexpr int kFailed = 4;

// The echoed config must still resolve when reloaded from another directory.
BackendSpec absolute_trace(BackendSpec spec) {
  if (spec.kind == BackendSpec::Kind::Trace) spec.argument = fs::absolute(spec.argument).lexically_normal().string();
  return spec;
}

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> mode;
  std::optional<std::string> preprocess;
  std::optional<std::size_t> frame_interval;
  std::optional<std::size_t> window_size;
  std::optional<std::size_t> window_stride;
  std::optional<std::string> tail_policy;
  std::optional<std::size_t> spatial_frames;
  std::optional<std::string> frame_selection;
  std::optional<double> confidence;
  std::optional<std::string> spatial_backend;
  std::optional<std::string> temporal_backend;
  std::optional<std::string> classes;
  std::optional<double> threshold;
  std::optional<std::size_t> max_inflight;
  std::optional<std::size_t> threads;
  std::optional<std::int64_t> max_windows;

  void add_to(CLI::App& app, bool with_backends) {
    app.add_option("--config", config, "Config file (INI); flags override it")->check(CLI::ExistingFile);
    app.add_option("--mode", mode, "parallel|serial|temporal-only|spatial-only");
    app.add_option("--preprocess", preprocess, "identity|mask-keep|mask-black|skeleton-bg|skeleton-black");
    app.add_option("--frame-interval", frame_interval, "Keep every Nth source frame");
    app.add_option("--window-size", window_size, "Frames per window");
    app.add_option("--window-stride", window_stride, "Window stride in sampled frames");
    app.add_option("--tail-policy", tail_policy, "drop|pad-last");
    app.add_option("--spatial-frames", spatial_frames, "Frames per window the spatial stage analyzes");
    app.add_option("--frame-selection", frame_selection, "evenly-spaced|first|all");
    app.add_option("--confidence", confidence, "Detection confidence threshold");
    if (with_backends) {
      app.add_option("--spatial-backend", spatial_backend, "trace:FILE or synthetic:SPEC");
      app.add_option("--temporal-backend", temporal_backend, "trace:FILE or synthetic:SPEC");
    }
    app.add_option("--classes", classes, "Class profile, 3 or 4");
    app.add_option("--threshold", threshold, "Anomaly score threshold (0 = argmax)");
    app.add_option("--max-inflight", max_inflight, "Windows in flight at once");
    app.add_option("--threads", threads, "1 runs every stage on one thread");
    app.add_option("--max-windows", max_windows, "Stop after this many windows");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config ? load_config_file(*config) : PipelineConfig{};
    if (mode) cfg.mode = parse_pipeline_mode(*mode);
    if (preprocess) cfg.preprocess_variant = parse_preprocess_variant(*preprocess);
    if (frame_interval) cfg.sampling.frame_interval = *frame_interval;
    if (window_size) {
      // Stride follows the size unless it was set separately.
      if (!window_stride && cfg.sampling.window_stride == cfg.sampling.window_size) {
        cfg.sampling.window_stride = *window_size;
      }
      cfg.sampling.window_size = *window_size;
    }
    if (window_stride) cfg.sampling.window_stride = *window_stride;
    if (tail_policy) cfg.sampling.tail_policy = parse_tail_policy(*tail_policy);
    if (spatial_frames) {
      cfg.spatial.frames_per_window = *spatial_frames;
      cfg.spatial_selection_explicit = true;
    }
    if (frame_selection) {
      cfg.spatial.frame_selection = parse_frame_selection(*frame_selection);
      cfg.spatial_selection_explicit = true;
    }
    if (confidence) cfg.spatial.confidence_threshold = *confidence;
    if (spatial_backend) cfg.spatial_backend = absolute_trace(BackendSpec::parse(*spatial_backend));
    if (temporal_backend) cfg.temporal_backend = absolute_trace(BackendSpec::parse(*temporal_backend));
    if (classes) cfg.profile = parse_profile(*classes);
    if (threshold) cfg.anomaly_threshold = *threshold;
    if (max_inflight) cfg.max_inflight_windows = *max_inflight;
    if (threads) cfg.threads = *threads;
    if (max_windows) cfg.max_windows = *max_windows;
    cfg.validate();
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  Overrides o;
  std::string source;
  std::string out;
  std::string video_id;
  std::optional<std::string> dump;
  bool omit_timing = false;
};

int cmd_run(const RunArgs& a) {
  PipelineConfig cfg;
  Backends backends;
  try {
    cfg = a.o.resolve();
    backends = make_backends(cfg);
    ensure_dir(a.out);
    if (a.dump) ensure_dir(*a.dump);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  std::unique_ptr<FrameSource> source;
  try {
    source = open_source(a.source);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: cannot open source: " << e.what() << "\n";
    return kFailed;
  }

  RunReport report;
  try {
    Pipeline pipeline(cfg, backends);
    pipeline.set_source_name(a.source);
    if (a.dump) pipeline.set_dump_dir(*a.dump);
    report = pipeline.run(*source);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: run failed: " << e.what() << "\n";
    return kFailed;
  }

  const bool timing = !a.omit_timing;
  auto j = to_json(report, timing);
  if (!a.video_id.empty()) j["video_id"] = a.video_id;
  try {
    write_text(fs::path(a.out) / "report.json", j.dump(2) + "\n");
    write_text(fs::path(a.out) / "predictions.csv", to_csv(report, timing));
    write_text(fs::path(a.out) / "effective.ini", to_config_text(report.config));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }

  std::cout << "windows " << report.stats.windows_formed << ", predictions " << report.predictions.size()
            << ", skipped " << report.stats.skipped_windows;
  if (timing) std::cout << ", mean latency " << format_double(report.stats.mean_latency_ms) << " ms";
  std::cout << "\n";

  if (report.ingest_fault) {
    std::cerr << "error: source failed at position " << report.ingest_fault->position << ": "
              << report.ingest_fault->message << "\n";
    return kFailed;
  }
  if (report.stats.windows_formed > 0 && report.predictions.empty()) return kFailed;
  if (report.stats.skipped_windows > 0) return kPartial;
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  Overrides o;
  std::string modes = "parallel,serial";
  double spatial_latency = 50.0;
  double temporal_latency = 100.0;
  std::string source = "synthetic:pattern=noise,width=64,height=64,frames=300";
  std::size_t repeat = 1;
  std::optional<std::string> spatial_options;
  std::optional<std::string> temporal_options;
  std::optional<std::string> out;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

int cmd_bench(const BenchArgs& a) {
  struct ModeRun {
    PipelineConfig cfg;
    double modeled = 0.0;
  };
  std::vector<ModeRun> runs;
  try {
    const auto spatial_extra = a.spatial_options.value_or("");
    const auto temporal_extra = a.temporal_options.value_or("");
    for (const auto* extra : {&spatial_extra, &temporal_extra}) {
      if (extra->rfind("trace", 0) == 0) throw ConfigError("bench needs synthetic backends; trace latency is meaningless");
    }
    auto strip = [](const std::string& s) {
      if (s.rfind("synthetic:", 0) == 0) return s.substr(10);
      return s == "synthetic" ? std::string() : s;
    };
    const auto spatial_spec = "synthetic:latency=" + format_double(a.spatial_latency) +
                              (strip(spatial_extra).empty() ? "" : "," + strip(spatial_extra));
    const auto temporal_spec = "synthetic:latency=" + format_double(a.temporal_latency) +
                               (strip(temporal_extra).empty() ? "" : "," + strip(temporal_extra));
    for (const auto& name : split(a.modes, ',')) {
      Overrides o = a.o;
      o.mode = trim(name);
      o.spatial_backend = spatial_spec;
      o.temporal_backend = temporal_spec;
      const PipelineConfig probe = o.config ? load_config_file(*o.config) : PipelineConfig{};
      if (parse_pipeline_mode(*o.mode) == PipelineMode::Serial && !o.preprocess && !probe.preprocess_variant) {
        o.preprocess = "identity";
      }
      ModeRun run;
      run.cfg = o.resolve();
      run.modeled = modeled_window_latency_ms(run.cfg, a.spatial_latency, a.temporal_latency);
      runs.push_back(std::move(run));
    }
    if (a.repeat == 0) throw ConfigError("--repeat must be at least 1");
    if (a.out) ensure_dir(*a.out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  std::ostringstream table;
  std::ostringstream csv;
  csv << "mode,repeat,video_duration_ms,windows,mean_latency_ms,median_latency_ms,modeled_latency_ms,"
         "processing_ms\n";
  table << "Mode           Rep  Video duration  Windows  Average detections  Median     Modeled    Processing time\n";
  std::map<std::string, std::vector<double>> means;
  int rc = kOk;
  for (std::size_t r = 0; r < a.repeat; ++r) {
    for (const auto& run : runs) {
      RunReport report;
      try {
        auto source = open_source(a.source);
        report = Pipeline(run.cfg, make_backends(run.cfg)).run(*source);
      } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
      }
      if (report.stats.skipped_windows > 0) rc = kPartial;
      const std::string mode(to_string(run.cfg.mode));
      means[mode].push_back(report.stats.mean_latency_ms);
      char line[256];
      std::snprintf(line, sizeof(line), "%-14s %3zu  %11.2f s  %7lld  %15.1f ms  %7.1f ms  %7.1f ms  %12.2f s\n",
                    mode.c_str(), r + 1, report.stats.video_duration_ms / 1000.0,
                    static_cast<long long>(report.stats.windows_formed), report.stats.mean_latency_ms,
                    report.stats.median_latency_ms, run.modeled, report.stats.total_processing_ms / 1000.0);
      table << line;
      csv << mode << ',' << r + 1 << ',' << fixed(report.stats.video_duration_ms, 3) << ','
          << report.stats.windows_formed << ',' << fixed(report.stats.mean_latency_ms, 3) << ','
          << fixed(report.stats.median_latency_ms, 3) << ',' << fixed(run.modeled, 3) << ','
          << fixed(report.stats.total_processing_ms, 3) << '\n';
    }
  }
  if (means.count("parallel") && means.count("serial")) {
    const auto& p = means["parallel"];
    const auto& s = means["serial"];
    std::size_t faster = 0;
    for (std::size_t i = 0; i < p.size(); ++i) faster += p[i] < s[i];
    table << "parallel faster than serial in " << faster << "/" << p.size() << " repeats\n";
  }
  std::cout << table.str();
  if (a.out) {
    try {
      write_text(fs::path(*a.out) / "bench.txt", table.str());
      write_text(fs::path(*a.out) / "bench.csv", csv.str());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kFailed;
    }
  }
  return rc;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string predictions;
  std::string truth;
  std::string profile = "4";
  std::string video_id;
  std::optional<std::string> out;
};

int cmd_eval(const EvalArgs& a) {
  try {
    const auto profile = parse_profile(a.profile);
    const auto truth = GroundTruthSet::load_csv(a.truth);
    truth.check_profile(profile);
    auto loaded = load_predictions(a.predictions);
    if (!a.video_id.empty()) {
      for (auto& v : loaded.video_ids) {
        if (v.empty()) v = a.video_id;
      }
    }
    const auto report = score_loaded(loaded, truth, profile);
    const auto formatted = class_profile_report(report, profile);
    std::cout << formatted.text;
    if (a.out) {
      ensure_dir(*a.out);
      write_text(fs::path(*a.out) / "eval.txt", formatted.text);
      write_text(fs::path(*a.out) / "eval.csv", formatted.csv);
      write_text(fs::path(*a.out) / "eval.json", to_json(report).dump(2) + "\n");
    }
    return kOk;
  } catch (const std::exception& e) {
    // Profile violations and missing labels are input errors too.
    std::cerr << "error: " << e.what() << "\n";
  }
  return kUsage;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectArgs {
  std::string target;
  Overrides o;
};

int cmd_inspect(const InspectArgs& a) {
  try {
    const fs::path path(a.target);
    if (path.extension() == ".jsonl") {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot read " + path.string());
      std::string line;
      std::size_t lines = 0, detections = 0;
      std::map<std::string, std::size_t> classes;
      bool temporal = false;
      while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++lines;
        const auto j = nlohmann::json::parse(line);
        if (j.contains("window")) {
          temporal = true;
          const auto r = TemporalResult::from_scores(
              {j["scores"].value("fight", 0.0), j["scores"].value("gunshot", 0.0), j["scores"].value("fire", 0.0),
               j["scores"].value("normal", 0.0)});
          ++classes[std::string(to_string(r.argmax_class))];
        } else {
          for (const auto& d : j.at("detections")) {
            ++detections;
            ++classes[d.at("class").get<std::string>()];
          }
        }
      }
      std::cout << (temporal ? "temporal trace" : "spatial trace") << ": " << lines << " entries";
      if (!temporal) std::cout << ", " << detections << " detections";
      std::cout << "\n";
      for (const auto& [name, n] : classes) std::cout << "  " << name << ": " << n << "\n";
      return kOk;
    }
    PipelineConfig cfg = a.o.resolve();
    auto source = open_source(a.target);
    const auto info = source->info();
    std::cout << "source: " << a.target << "\n"
              << "size: " << info.width << "x" << info.height << "\n"
              << "fps: " << format_double(info.fps) << "\n";
    if (info.continuous()) {
      std::cout << "frames: continuous\n";
      return kOk;
    }
    std::cout << "frames: " << *info.frame_count << "\n"
              << "duration_ms: " << format_double(info.duration_ms()) << "\n";
    const auto frames = sample_all(*source, cfg.sampling);
    const auto windows = make_windows(frames, cfg.sampling);
    std::cout << "sampled: " << frames.size() << "\n"
              << "windows: " << windows.size() << "\n";
    for (const auto& w : windows) {
      const auto [first, last] = w.source_span();
      std::cout << "  window " << w.window_index << ": frames " << first << ".." << last;
      if (w.padded) std::cout << " (+" << w.padded << " padded)";
      std::cout << "\n";
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
}

// ---------------------------------------------------------------------------

int cmd_gen_fixtures(const std::string& out, std::uint64_t seed) {
  try {
    const auto set = write_fixtures(out, seed);
    for (const auto& f : set.files) std::cout << f.string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();

  CLI::App app{"Spatio-temporal video anomaly pipeline"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the pipeline over one source");
  run.o.add_to(*run_cmd, true);
  run_cmd->add_option("--source", run.source, "Packed raw file, frame directory or synthetic:SPEC")->required();
  run_cmd->add_option("--out", run.out, "Output directory for report.json and predictions.csv")->required();
  run_cmd->add_option("--video-id", run.video_id, "Video id recorded in the report");
  run_cmd->add_option("--dump-enriched", run.dump, "Write each model-space window here as packed raw video");
  run_cmd->add_flag("--omit-timing", run.omit_timing, "Leave wall-clock fields out of the outputs");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Compare per-window latency across modes");
  bench.o.add_to(*bench_cmd, false);
  bench_cmd->add_option("--modes", bench.modes, "Comma-separated modes")->capture_default_str();
  bench_cmd->add_option("--spatial-latency", bench.spatial_latency, "Synthetic spatial ms per frame")
      ->capture_default_str();
  bench_cmd->add_option("--temporal-latency", bench.temporal_latency, "Synthetic temporal ms per window")
      ->capture_default_str();
  bench_cmd->add_option("--source", bench.source, "Frame source")->capture_default_str();
  bench_cmd->add_option("--repeat", bench.repeat, "Repeats per mode")->capture_default_str();
  bench_cmd->add_option("--spatial-backend", bench.spatial_options, "Extra synthetic spatial options");
  bench_cmd->add_option("--temporal-backend", bench.temporal_options, "Extra synthetic temporal options");
  bench_cmd->add_option("--out", bench.out, "Write bench.txt and bench.csv here");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--predictions", eval.predictions, "report.json or predictions CSV")->required();
  eval_cmd->add_option("--truth", eval.truth, "Ground truth CSV (video_id,window_index,label)")->required();
  eval_cmd->add_option("--profile", eval.profile, "3 or 4 classes")->capture_default_str();
  eval_cmd->add_option("--video-id", eval.video_id, "Video id for predictions that carry none");
  eval_cmd->add_option("--out", eval.out, "Write eval.txt, eval.csv and eval.json here");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a source or trace file");
  inspect_cmd->add_option("target", inspect.target, "Source spec or .jsonl trace")->required();
  inspect.o.add_to(*inspect_cmd, false);

  std::string fixtures_out;
  std::uint64_t seed = 0;
  auto* fixtures_cmd = app.add_subcommand("gen-fixtures", "Write the deterministic fixture set");
  fixtures_cmd->add_option("--out", fixtures_out, "Output directory")->required();
  fixtures_cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (run_cmd->parsed()) return cmd_run(run);
  if (bench_cmd->parsed()) return cmd_bench(bench);
  if (eval_cmd->parsed()) return cmd_eval(eval);
  if (inspect_cmd->parsed()) return cmd_inspect(inspect);
  if (fixtures_cmd->parsed()) return cmd_gen_fixtures(fixtures_out, seed);
  return kUsage;
}
