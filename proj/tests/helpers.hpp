#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "stap/core.hpp"

namespace testing_util {

inline stap::Frame gray(std::int64_t index, int side, std::uint8_t v) {
  return stap::Frame::filled(index, index * 1000.0 / 30.0, side, side, v, v, v);
}

inline stap::Frame random_frame(std::mt19937_64& rng, std::int64_t index, int w, int h) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : px) v = static_cast<std::uint8_t>(rng() >> 56);
  return stap::Frame(index, index * 1000.0 / 30.0, w, h, std::move(px));
}

// Window of `n` model-space frames starting at source index `first`.
inline stap::SequenceWindow model_window(std::int64_t window_index, std::int64_t first, std::size_t n = 15,
                                         std::uint8_t v = 50) {
  stap::SequenceWindow w;
  w.window_index = window_index;
  for (std::size_t i = 0; i < n; ++i) w.frames.push_back(gray(first + static_cast<std::int64_t>(i), stap::kModelSide, v));
  return w;
}

inline stap::Detection detection(stap::KeyObjectClass k, double x0, double y0, double x1, double y1,
                                 double conf = 0.9) {
  stap::Detection d;
  d.object_class = k;
  d.confidence = conf;
  d.box = stap::BoundingBox::make(x0, y0, x1, y1);
  return d;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("stap_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_util
