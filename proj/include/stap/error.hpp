#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidFrame : public Error {
 public:
  using Error::Error;
};

class InvalidWindow : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed detection/score trace. Raised at load time, never mid-run.
class TraceFormatError : public Error {
 public:
  TraceFormatError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingTraceEntry : public Error {
 public:
  explicit MissingTraceEntry(std::int64_t window)
      : Error("no trace entry for window " + std::to_string(window)), window_(window) {}

  std::int64_t window() const { return window_; }

 private:
  std::int64_t window_;
};

// Inference failure; frame_index is -1 when the failure is not tied to one frame.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::int64_t frame_index = -1)
      : Error(what), frame_index_(frame_index) {}

  std::int64_t frame_index() const { return frame_index_; }

 private:
  std::int64_t frame_index_;
};

class SourceError : public Error {
 public:
  SourceError(const std::string& what, std::int64_t position)
      : Error(what + " (source position " + std::to_string(position) + ")"), position_(position) {}

  std::int64_t position() const { return position_; }

 private:
  std::int64_t position_;
};

class MissingLabel : public Error {
 public:
  explicit MissingLabel(std::vector<std::int64_t> windows);

  const std::vector<std::int64_t>& windows() const { return windows_; }

 private:
  std::vector<std::int64_t> windows_;
};

}  // namespace stap
