#include "stap/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <future>
#include <map>
#include <mutex>
#include <numeric>
#include <semaphore>
#include <sstream>
#include <thread>
#include <variant>

#include <spdlog/spdlog.h>

#include "stap/error.hpp"
#include "stap/util.hpp"

namespace stap {

namespace {

template <typename T>
class BlockingQueue {
 public:
  void push(T item) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

WindowGap gap_from(std::int64_t window, std::string stage, const std::exception_ptr& err) {
  WindowGap gap{window, std::move(stage), "unknown error", -1};
  try {
    std::rethrow_exception(err);
  } catch (const BackendError& e) {
    gap.message = e.what();
    gap.frame_index = e.frame_index();
  } catch (const std::exception& e) {
    gap.message = e.what();
  } catch (...) {
  }
  return gap;
}

// Runs fn, returning the exception it threw (if any) and its duration.
template <typename Fn>
std::exception_ptr timed(Fn&& fn, double& ms) {
  const auto t0 = Clock::now();
  std::exception_ptr err;
  try {
    fn();
  } catch (...) {
    err = std::current_exception();
  }
  ms = elapsed_ms(t0, Clock::now());
  return err;
}

void note_peak(std::atomic<std::size_t>& peak, std::size_t value) {
  std::size_t seen = peak.load();
  while (value > seen && !peak.compare_exchange_weak(seen, value)) {
  }
}

}  // namespace

struct Pipeline::Outcome {
  std::variant<AnomalyPrediction, WindowGap> result;
  PreprocessDiagnostics diagnostics;
  std::optional<SequenceWindow> model_window;  // what the temporal backend saw
};

Pipeline::Pipeline(PipelineConfig cfg, Backends backends) : cfg_(std::move(cfg)), backends_(std::move(backends)) {
  cfg_.validate();
  if (cfg_.uses_spatial() && !backends_.spatial) throw ConfigError("pipeline needs a spatial backend");
  if (cfg_.uses_temporal() && !backends_.temporal) throw ConfigError("pipeline needs a temporal backend");
}

Pipeline::Outcome Pipeline::process(const SequenceWindow& raw) const {
  Outcome out;
  StageLatency lat;
  const bool concurrent = cfg_.threads != 1;
  const auto spatial_cfg = cfg_.effective_spatial();

  SpatialResult spatial;
  spatial.window_index = raw.window_index;
  spatial.source_span = raw.source_span();
  TemporalVerdict verdict;

  auto run_spatial = [&] { spatial = analyze_window(raw, *backends_.spatial, spatial_cfg); };
  auto run_temporal_on = [&](const SequenceWindow& model) {
    out.model_window = model;
    verdict = classify_window(model, *backends_.temporal, cfg_.anomaly_threshold);
  };

  AnomalyPrediction pred;
  switch (cfg_.mode) {
    case PipelineMode::Parallel: {
      std::exception_ptr spatial_err;
      std::future<void> spatial_done;
      if (concurrent) {
        spatial_done = std::async(std::launch::async, [&] { spatial_err = timed(run_spatial, lat.spatial_ms); });
      } else {
        spatial_err = timed(run_spatial, lat.spatial_ms);
      }
      SequenceWindow model;
      std::exception_ptr temporal_err = timed([&] { model = resize_window(raw); }, lat.preprocess_ms);
      if (!temporal_err) temporal_err = timed([&] { run_temporal_on(model); }, lat.temporal_ms);
      if (spatial_done.valid()) spatial_done.get();
      // Fail together: either branch failing voids the window.
      if (spatial_err) {
        out.result = gap_from(raw.window_index, "spatial", spatial_err);
        return out;
      }
      if (temporal_err) {
        out.result = gap_from(raw.window_index, "temporal", temporal_err);
        return out;
      }
      const auto t0 = Clock::now();
      pred = fuse(verdict, spatial, cfg_.fusion);
      lat.fusion_ms = elapsed_ms(t0, Clock::now());
      break;
    }
    case PipelineMode::Serial: {
      if (auto err = timed(run_spatial, lat.spatial_ms)) {
        out.result = gap_from(raw.window_index, "spatial", err);
        return out;
      }
      SequenceWindow model;
      if (auto err = timed(
              [&] {
                model = resize_window(enrich_window(raw, spatial, *cfg_.preprocess_variant, cfg_.skeleton,
                                                    &out.diagnostics));
              },
              lat.preprocess_ms)) {
        out.result = gap_from(raw.window_index, "preprocess", err);
        return out;
      }
      if (auto err = timed([&] { run_temporal_on(model); }, lat.temporal_ms)) {
        out.result = gap_from(raw.window_index, "temporal", err);
        return out;
      }
      pred.scores = verdict.result.scores;
      pred.profile = verdict.result.profile;
      pred.label = verdict.anomaly ? verdict.result.argmax_class : AnomalyClass::Normal;
      pred.source = PredictionSource::TemporalOnSerial;
      break;
    }
    case PipelineMode::TemporalOnly: {
      SequenceWindow model;
      std::exception_ptr err = timed([&] { model = resize_window(raw); }, lat.preprocess_ms);
      if (!err) err = timed([&] { run_temporal_on(model); }, lat.temporal_ms);
      if (err) {
        out.result = gap_from(raw.window_index, "temporal", err);
        return out;
      }
      pred = fuse(verdict, spatial, cfg_.fusion);
      break;
    }
    case PipelineMode::SpatialOnly: {
      if (auto err = timed(run_spatial, lat.spatial_ms)) {
        out.result = gap_from(raw.window_index, "spatial", err);
        return out;
      }
      TemporalVerdict normal{TemporalResult::certain(AnomalyClass::Normal, cfg_.profile), false};
      const auto t0 = Clock::now();
      pred = fuse(normal, spatial, cfg_.fusion);
      lat.fusion_ms = elapsed_ms(t0, Clock::now());
      break;
    }
  }
  pred.window_index = raw.window_index;
  pred.source_span = raw.source_span();
  pred.t_start_ms = raw.frames.front().timestamp_ms();
  pred.latency = lat;
  out.result = std::move(pred);
  return out;
}

RunReport Pipeline::run(FrameSource& source, const PredictionSink& sink) {
  const auto run_start = Clock::now();
  const SourceInfo info = source.info();
  RunReport report;
  report.config = cfg_;
  report.source = source_name_;

  std::mutex mu;  // guards report, pending, next_emit
  std::map<std::int64_t, Outcome> pending;
  std::int64_t next_emit = 0;
  std::atomic<std::size_t> resident{0};
  std::atomic<std::size_t> peak{0};

  auto finalize = [&](std::int64_t window, Outcome outcome, Clock::time_point ready) {
    const double total = elapsed_ms(ready, Clock::now());
    if (auto* pred = std::get_if<AnomalyPrediction>(&outcome.result)) pred->latency.total_ms = total;
    if (dump_dir_ && outcome.model_window) {
      char name[32];
      std::snprintf(name, sizeof(name), "window_%06lld.stap", static_cast<long long>(window));
      write_raw_video(*dump_dir_ / name, outcome.model_window->frames, info.fps);
    }
    outcome.model_window.reset();
    std::lock_guard lock(mu);
    pending.emplace(window, std::move(outcome));
    for (auto it = pending.find(next_emit); it != pending.end(); it = pending.find(next_emit)) {
      auto& o = it->second;
      report.diagnostics.persons_without_keypoints += o.diagnostics.persons_without_keypoints;
      report.diagnostics.fallback_frames += o.diagnostics.fallback_frames;
      if (auto* pred = std::get_if<AnomalyPrediction>(&o.result)) {
        if (sink) sink(*pred);
        report.predictions.push_back(std::move(*pred));
      } else {
        const auto& gap = std::get<WindowGap>(o.result);
        spdlog::warn("window {} skipped ({}): {}", gap.window_index, gap.stage, gap.message);
        report.gaps.push_back(gap);
      }
      pending.erase(it);
      ++next_emit;
    }
  };

  struct Job {
    SequenceWindow window;
    Clock::time_point ready;
  };
  const bool concurrent = cfg_.threads != 1;
  std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(cfg_.max_inflight_windows));
  BlockingQueue<Job> queue;
  std::vector<std::thread> workers;
  if (concurrent) {
    for (std::size_t i = 0; i < cfg_.max_inflight_windows; ++i) {
      workers.emplace_back([&] {
        while (auto job = queue.pop()) {
          const auto index = job->window.window_index;
          const auto ready = job->ready;
          auto outcome = process(job->window);
          job.reset();
          finalize(index, std::move(outcome), ready);
          --resident;
          slots.release();
        }
      });
    }
  }

  std::int64_t formed = 0;
  auto dispatch = [&](SequenceWindow w) -> bool {
    if (cfg_.max_windows && formed >= *cfg_.max_windows) return false;
    ++formed;
    if (concurrent) slots.acquire();
    note_peak(peak, ++resident);
    const auto ready = Clock::now();
    if (!concurrent) {
      auto outcome = process(w);
      const auto index = w.window_index;
      w.frames.clear();
      finalize(index, std::move(outcome), ready);
      --resident;
      return true;
    }
    queue.push(Job{std::move(w), ready});
    return true;
  };

  Sampler sampler(source, cfg_.sampling);
  Windower windower(cfg_.sampling);
  bool stopped = false;
  double last_frame_end_ms = 0.0;
  while (!stopped) {
    auto item = sampler.next();
    if (!item) break;
    if (auto* fault = std::get_if<StreamFault>(&*item)) {
      spdlog::error("source failed: {}", fault->message);
      report.ingest_fault = *fault;
      break;
    }
    const Frame& frame = std::get<Frame>(*item);
    last_frame_end_ms = frame.timestamp_ms() + 1000.0 / info.fps;
    for (auto& w : windower.push(frame)) {
      if (!dispatch(std::move(w))) {
        stopped = true;
        break;
      }
    }
  }
  if (!stopped) {
    for (auto& w : windower.finish()) dispatch(std::move(w));
  }
  queue.close();
  for (auto& t : workers) t.join();

  report.stats.windows_formed = formed;
  report.stats.skipped_windows = static_cast<std::int64_t>(report.gaps.size());
  report.stats.video_duration_ms = info.continuous() ? last_frame_end_ms : info.duration_ms();
  report.stats.peak_inflight_windows = peak.load();
  std::vector<double> latencies;
  for (const auto& p : report.predictions) latencies.push_back(p.latency.total_ms);
  if (!latencies.empty()) {
    report.stats.mean_latency_ms = std::accumulate(latencies.begin(), latencies.end(), 0.0) / latencies.size();
    std::sort(latencies.begin(), latencies.end());
    const auto n = latencies.size();
    report.stats.median_latency_ms = n % 2 ? latencies[n / 2] : 0.5 * (latencies[n / 2 - 1] + latencies[n / 2]);
  }
  report.stats.total_processing_ms = elapsed_ms(run_start, Clock::now());
  return report;
}

RunReport run_parallel(const PipelineConfig& cfg, const Backends& backends, FrameSource& source) {
  if (cfg.mode != PipelineMode::Parallel) throw ConfigError("run_parallel needs mode = parallel");
  return Pipeline(cfg, backends).run(source);
}

RunReport run_serial(const PipelineConfig& cfg, const Backends& backends, FrameSource& source) {
  if (cfg.mode != PipelineMode::Serial) throw ConfigError("run_serial needs mode = serial");
  return Pipeline(cfg, backends).run(source);
}

ModeComparison compare_modes(const PipelineConfig& first, const PipelineConfig& second, const Backends& backends,
                             const SourceFactory& source) {
  ModeComparison out;
  {
    auto src = source();
    out.first = Pipeline(first, backends).run(*src);
  }
  {
    auto src = source();
    out.second = Pipeline(second, backends).run(*src);
  }
  if (out.second.stats.mean_latency_ms > 0.0) {
    out.latency_ratio = out.first.stats.mean_latency_ms / out.second.stats.mean_latency_ms;
  }
  std::map<std::int64_t, AnomalyClass> second_labels;
  for (const auto& p : out.second.predictions) second_labels[p.window_index] = p.label;
  std::size_t agree = 0;
  for (const auto& p : out.first.predictions) {
    const auto it = second_labels.find(p.window_index);
    if (it == second_labels.end()) continue;
    ++out.compared_windows;
    if (it->second == p.label) ++agree;
  }
  if (out.compared_windows) out.label_agreement = static_cast<double>(agree) / out.compared_windows;
  return out;
}

double modeled_window_latency_ms(const PipelineConfig& cfg, double spatial_ms_per_frame, double temporal_ms) {
  const double analyzed =
      static_cast<double>(select_frames(cfg.sampling.window_size, cfg.effective_spatial()).size());
  switch (cfg.mode) {
    case PipelineMode::Parallel: return std::max(analyzed * spatial_ms_per_frame, temporal_ms);
    case PipelineMode::Serial: return analyzed * spatial_ms_per_frame + temporal_ms;
    case PipelineMode::TemporalOnly: return temporal_ms;
    case PipelineMode::SpatialOnly: return analyzed * spatial_ms_per_frame;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const RunReport& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["source"] = r.source;
  j["config"] = to_json(r.config);
  j["config_text"] = to_config_text(r.config);
  auto preds = nlohmann::ordered_json::array();
  for (const auto& p : r.predictions) preds.push_back(to_json(p, include_timing));
  j["predictions"] = std::move(preds);
  auto gaps = nlohmann::ordered_json::array();
  for (const auto& g : r.gaps) {
    nlohmann::ordered_json gj;
    gj["window_index"] = g.window_index;
    gj["stage"] = g.stage;
    gj["message"] = g.message;
    if (g.frame_index >= 0) gj["frame_index"] = g.frame_index;
    gaps.push_back(std::move(gj));
  }
  j["gaps"] = std::move(gaps);
  nlohmann::ordered_json stats;
  stats["windows_formed"] = r.stats.windows_formed;
  stats["predictions"] = r.predictions.size();
  stats["skipped_windows"] = r.stats.skipped_windows;
  stats["video_duration_ms"] = r.stats.video_duration_ms;
  if (include_timing) {
    stats["mean_latency_ms"] = r.stats.mean_latency_ms;
    stats["median_latency_ms"] = r.stats.median_latency_ms;
    stats["total_processing_ms"] = r.stats.total_processing_ms;
    stats["peak_inflight_windows"] = r.stats.peak_inflight_windows;
  }
  j["stats"] = std::move(stats);
  j["diagnostics"] = {{"persons_without_keypoints", r.diagnostics.persons_without_keypoints},
                      {"fallback_frames", r.diagnostics.fallback_frames}};
  if (r.ingest_fault) {
    j["ingest_fault"] = {{"position", r.ingest_fault->position}, {"message", r.ingest_fault->message}};
  } else {
    j["ingest_fault"] = nullptr;
  }
  return j;
}

std::string to_csv(const RunReport& r, bool include_timing) {
  std::ostringstream o;
  o << "window_index,t_start_ms,label,source,latency_ms\n";
  for (const auto& p : r.predictions) {
    o << p.window_index << ',' << format_double(p.t_start_ms) << ',' << to_string(p.label) << ','
      << to_string(p.source) << ',' << format_double(include_timing ? p.latency.total_ms : 0.0) << '\n';
  }
  return o.str();
}

}  // namespace stap
