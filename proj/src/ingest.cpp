#include "stap/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include "stap/error.hpp"
#include "stap/kernels.hpp"
#include "stap/util.hpp"

namespace stap {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

double timestamp_for(std::int64_t index, double fps) { return static_cast<double>(index) * 1000.0 / fps; }

}  // namespace

std::string_view to_string(TailPolicy t) { return t == TailPolicy::Drop ? "drop" : "pad-last"; }

TailPolicy parse_tail_policy(std::string_view text) {
  if (text == "drop") return TailPolicy::Drop;
  if (text == "pad-last") return TailPolicy::PadLast;
  throw ConfigError("tail policy must be drop or pad-last, got '" + std::string(text) + "'");
}

void SamplingPolicy::validate() const {
  if (frame_interval < 1) throw ConfigError("frame_interval must be >= 1");
  if (window_size < 1) throw ConfigError("window_size must be >= 1");
  if (window_stride < 1) throw ConfigError("window_stride must be >= 1");
}

// ---------------------------------------------------------------------------
// Packed raw video

RawVideoSource::RawVideoSource(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw SourceError("cannot open " + path.string(), 0);
  std::array<unsigned char, kRawHeaderSize> header{};
  in_.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in_.gcount() != static_cast<std::streamsize>(header.size())) {
    throw SourceError(path.string() + ": truncated header", 0);
  }
  if (std::string_view(reinterpret_cast<const char*>(header.data()), 5) != "STAP1") {
    throw SourceError(path.string() + ": bad magic", 0);
  }
  info_.width = static_cast<int>(get_le<std::uint32_t>(header.data() + 5));
  info_.height = static_cast<int>(get_le<std::uint32_t>(header.data() + 9));
  info_.frame_count = static_cast<std::int64_t>(get_le<std::uint64_t>(header.data() + 13));
  const auto fps_milli = get_le<std::uint32_t>(header.data() + 21);
  if (fps_milli == 0) throw SourceError(path.string() + ": fps is zero", 0);
  info_.fps = fps_milli / 1000.0;
}

std::optional<Frame> RawVideoSource::next() {
  if (ended_) return std::nullopt;
  if (position_ >= *info_.frame_count) {
    ended_ = true;
    return std::nullopt;
  }
  std::vector<std::uint8_t> px(static_cast<std::size_t>(info_.width) * info_.height * 3);
  in_.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in_.gcount() != static_cast<std::streamsize>(px.size())) {
    ended_ = true;
    throw SourceError(path_.string() + ": truncated frame data", position_);
  }
  Frame f(position_, timestamp_for(position_, info_.fps), info_.width, info_.height, std::move(px));
  ++position_;
  return f;
}

RawVideoWriter::RawVideoWriter(const std::filesystem::path& path, int width, int height, double fps)
    : out_(path, std::ios::binary | std::ios::trunc), width_(width), height_(height) {
  if (!out_) throw Error("cannot write " + path.string());
  out_.write("STAP1", 5);
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(width));
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(height));
  put_le<std::uint64_t>(out_, 0);
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(std::llround(fps * 1000.0)));
}

RawVideoWriter::~RawVideoWriter() {
  try {
    close();
  } catch (...) {
  }
}

void RawVideoWriter::write(const Frame& frame) {
  if (frame.width() != width_ || frame.height() != height_) {
    throw InvalidFrame("frame size differs from the raw video header");
  }
  const auto px = frame.pixels();
  out_.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  ++count_;
}

void RawVideoWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(13);
  put_le<std::uint64_t>(out_, count_);
  out_.close();
  if (out_.fail()) throw Error("failed writing raw video");
}

void write_raw_video(const std::filesystem::path& path, const std::vector<Frame>& frames, double fps) {
  const int w = frames.empty() ? 0 : frames.front().width();
  const int h = frames.empty() ? 0 : frames.front().height();
  RawVideoWriter writer(path, w, h, fps);
  for (const auto& f : frames) writer.write(f);
  writer.close();
}

// ---------------------------------------------------------------------------
// Frame directory

FrameDirectorySource::FrameDirectorySource(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta";
  std::ifstream meta(meta_path);
  if (!meta) throw SourceError("missing " + meta_path.string(), 0);
  std::string line;
  bool have_w = false, have_h = false;
  while (std::getline(meta, line)) {
    const auto kv = split_key_value(line);
    if (!kv) continue;
    if (kv->first == "width") {
      info_.width = std::stoi(kv->second);
      have_w = true;
    } else if (kv->first == "height") {
      info_.height = std::stoi(kv->second);
      have_h = true;
    } else if (kv->first == "fps") {
      info_.fps = std::stod(kv->second);
    }
  }
  if (!have_w || !have_h || info_.width <= 0 || info_.height <= 0 || info_.fps <= 0.0) {
    throw SourceError(meta_path.string() + ": needs positive width, height and fps", 0);
  }
  static const std::regex name_re(R"(frame_(\d{8})\.rgb)");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, name_re)) files_.emplace_back(std::stoll(m[1].str()), entry.path());
  }
  std::sort(files_.begin(), files_.end());
  info_.frame_count = static_cast<std::int64_t>(files_.size());
}

std::optional<Frame> FrameDirectorySource::next() {
  if (cursor_ >= files_.size()) return std::nullopt;
  const auto& [index, path] = files_[cursor_++];
  std::ifstream in(path, std::ios::binary);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(info_.width) * info_.height * 3);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!in || in.gcount() != static_cast<std::streamsize>(px.size())) {
    cursor_ = files_.size();
    throw SourceError(path.string() + ": short frame file", index);
  }
  return Frame(index, timestamp_for(index, info_.fps), info_.width, info_.height, std::move(px));
}

void write_frame_directory(const std::filesystem::path& dir, const std::vector<Frame>& frames, double fps) {
  std::filesystem::create_directories(dir);
  const int w = frames.empty() ? 0 : frames.front().width();
  const int h = frames.empty() ? 0 : frames.front().height();
  std::ofstream meta(dir / "meta");
  meta << "width=" << w << "\nheight=" << h << "\nfps=" << fps << "\n";
  for (const auto& f : frames) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%08lld.rgb", static_cast<long long>(f.index()));
    std::ofstream out(dir / name, std::ios::binary);
    const auto px = f.pixels();
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  }
}

// ---------------------------------------------------------------------------
// Synthetic

SyntheticPattern parse_synthetic_pattern(std::string_view text) {
  for (auto p : {SyntheticPattern::Constant, SyntheticPattern::Checkerboard, SyntheticPattern::RedQuadrant,
                 SyntheticPattern::AlternatingMotion, SyntheticPattern::Noise}) {
    if (to_string(p) == text) return p;
  }
  throw ConfigError("unknown synthetic pattern '" + std::string(text) + "'");
}

std::string_view to_string(SyntheticPattern p) {
  switch (p) {
    case SyntheticPattern::Constant: return "constant";
    case SyntheticPattern::Checkerboard: return "checkerboard";
    case SyntheticPattern::RedQuadrant: return "red-quadrant";
    case SyntheticPattern::AlternatingMotion: return "alternating";
    case SyntheticPattern::Noise: return "noise";
  }
  return "constant";
}

Frame synthetic_frame(const SyntheticSpec& spec, std::int64_t index) {
  const int w = spec.width;
  const int h = spec.height;
  const double ts = timestamp_for(index, spec.fps);
  switch (spec.pattern) {
    case SyntheticPattern::Constant:
      return Frame::filled(index, ts, w, h, spec.color.r, spec.color.g, spec.color.b);
    case SyntheticPattern::AlternatingMotion: {
      const std::uint8_t v = index % 2 == 0 ? 0 : 255;
      return Frame::filled(index, ts, w, h, v, v, v);
    }
    case SyntheticPattern::Checkerboard: {
      std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
      const int cell = std::max(1, spec.cell);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::uint8_t v = ((x / cell) + (y / cell)) % 2 == 0 ? 255 : 0;
          std::fill_n(px.begin() + (static_cast<std::ptrdiff_t>(y) * w + x) * 3, 3, v);
        }
      }
      return Frame(index, ts, w, h, std::move(px));
    }
    case SyntheticPattern::RedQuadrant: {
      std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const bool red = x < w / 2 && y < h / 2;
          const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
          px[i] = red ? 220 : 60;
          px[i + 1] = red ? 30 : 60;
          px[i + 2] = red ? 30 : 60;
        }
      }
      return Frame(index, ts, w, h, std::move(px));
    }
    case SyntheticPattern::Noise: {
      std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index));
      std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
      for (auto& v : px) v = static_cast<std::uint8_t>(rng() >> 56);
      return Frame(index, ts, w, h, std::move(px));
    }
  }
  throw ConfigError("unknown synthetic pattern");
}

SyntheticSource::SyntheticSource(SyntheticSpec spec) : spec_(spec) {
  if (spec_.width < 1 || spec_.height < 1) throw ConfigError("synthetic source needs positive dimensions");
  if (!(spec_.fps > 0.0)) throw ConfigError("synthetic source needs positive fps");
}

SourceInfo SyntheticSource::info() const { return {spec_.width, spec_.height, spec_.fps, spec_.frame_count}; }

std::optional<Frame> SyntheticSource::next() {
  if (spec_.frame_count && position_ >= *spec_.frame_count) return std::nullopt;
  if (spec_.realtime) {
    if (!start_) start_ = std::chrono::steady_clock::now();
    const auto due = *start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double, std::milli>(timestamp_for(position_, spec_.fps)));
    std::this_thread::sleep_until(due);
  }
  return synthetic_frame(spec_, position_++);
}

std::unique_ptr<FrameSource> open_source(const std::string& spec) {
  constexpr std::string_view kSynthetic = "synthetic:";
  if (spec.rfind(kSynthetic, 0) == 0) {
    SyntheticSpec s;
    for (const auto& [key, value] : parse_option_list(spec.substr(kSynthetic.size()))) {
      if (key == "pattern") s.pattern = parse_synthetic_pattern(value);
      else if (key == "width") s.width = parse_int(value, key);
      else if (key == "height") s.height = parse_int(value, key);
      else if (key == "frames") {
        if (value == "inf") s.frame_count.reset();
        else s.frame_count = parse_int(value, key);
      } else if (key == "fps") s.fps = parse_double(value, key);
      else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(value, key));
      else if (key == "realtime") s.realtime = parse_bool(value, key);
      else if (key == "cell") s.cell = parse_int(value, key);
      else throw ConfigError("unknown synthetic source option '" + key + "'");
    }
    return std::make_unique<SyntheticSource>(s);
  }
  const std::filesystem::path path(spec);
  if (std::filesystem::is_directory(path)) return std::make_unique<FrameDirectorySource>(path);
  return std::make_unique<RawVideoSource>(path);
}

// ---------------------------------------------------------------------------
// Sampling and resizing

Sampler::Sampler(FrameSource& source, const SamplingPolicy& policy) : source_(source), interval_(policy.frame_interval) {
  policy.validate();
}

std::optional<StreamItem> Sampler::next() {
  while (!done_) {
    std::optional<Frame> f;
    try {
      f = source_.next();
    } catch (const SourceError& e) {
      done_ = true;
      return StreamItem{StreamFault{e.position(), e.what()}};
    }
    if (!f) {
      done_ = true;
      return std::nullopt;
    }
    if (f->index() <= last_index_) {
      done_ = true;
      return StreamItem{StreamFault{f->index(), "frame indices must strictly increase"}};
    }
    last_index_ = f->index();
    if (f->index() % static_cast<std::int64_t>(interval_) == 0) return StreamItem{std::move(*f)};
  }
  return std::nullopt;
}

std::vector<Frame> sample_all(FrameSource& source, const SamplingPolicy& policy) {
  Sampler sampler(source, policy);
  std::vector<Frame> out;
  while (auto item = sampler.next()) {
    if (auto* fault = std::get_if<StreamFault>(&*item)) throw SourceError(fault->message, fault->position);
    out.push_back(std::get<Frame>(std::move(*item)));
  }
  return out;
}

Frame resize_to_model(const Frame& f) {
  if (f.width() < 1 || f.height() < 1) throw InvalidFrame("cannot resize a zero-dimension frame");
  if (f.width() == kModelSide && f.height() == kModelSide) return f;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(kModelSide) * kModelSide * 3);
  kernels::resize_bilinear(f.pixels(), f.width(), f.height(), out, kModelSide, kModelSide);
  return f.with_pixels(kModelSide, kModelSide, std::move(out));
}

SequenceWindow resize_window(const SequenceWindow& w) {
  SequenceWindow out;
  out.window_index = w.window_index;
  out.padded = w.padded;
  out.frames.reserve(w.frames.size());
  for (const auto& f : w.frames) out.frames.push_back(resize_to_model(f));
  return out;
}

// ---------------------------------------------------------------------------
// Windowing

Windower::Windower(const SamplingPolicy& policy) : policy_(policy) { policy_.validate(); }

SequenceWindow Windower::take(std::size_t count) {
  SequenceWindow w;
  w.window_index = next_window_++;
  for (std::size_t i = 0; i < count && i < buffer_.size(); ++i) w.frames.push_back(buffer_[i].second);
  covered_until_ = std::max(covered_until_, buffer_[std::min(count, buffer_.size()) - 1].first);
  return w;
}

std::vector<SequenceWindow> Windower::push(const Frame& frame) {
  if (finished_) throw Error("push after finish");
  const std::int64_t ordinal = received_++;
  std::vector<SequenceWindow> out;
  if (ordinal >= next_start_) buffer_.emplace_back(ordinal, frame);
  const auto size = static_cast<std::int64_t>(policy_.window_size);
  const auto stride = static_cast<std::int64_t>(policy_.window_stride);
  while (!buffer_.empty() && buffer_.front().first == next_start_ && static_cast<std::int64_t>(buffer_.size()) >= size) {
    out.push_back(take(policy_.window_size));
    next_start_ += stride;
    while (!buffer_.empty() && buffer_.front().first < next_start_) buffer_.pop_front();
  }
  return out;
}

std::vector<SequenceWindow> Windower::finish() {
  if (finished_) return {};
  finished_ = true;
  std::vector<SequenceWindow> out;
  if (policy_.tail_policy == TailPolicy::PadLast && !buffer_.empty() && buffer_.back().first > covered_until_) {
    SequenceWindow w = take(buffer_.size());
    w.padded = policy_.window_size - w.frames.size();
    const Frame last = w.frames.back();
    w.frames.insert(w.frames.end(), w.padded, last);
    out.push_back(std::move(w));
  }
  buffer_.clear();
  return out;
}

std::vector<SequenceWindow> make_windows(const std::vector<Frame>& frames, const SamplingPolicy& policy) {
  Windower windower(policy);
  std::vector<SequenceWindow> out;
  for (const auto& f : frames) {
    for (auto& w : windower.push(f)) out.push_back(std::move(w));
  }
  for (auto& w : windower.finish()) out.push_back(std::move(w));
  return out;
}

}  // namespace stap
