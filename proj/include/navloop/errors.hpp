// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace navloop {

/// Caller broke an operation's precondition.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed binary or text input; `offset` is the byte position where
/// decoding stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Non-finite values reached a training update.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace navloop
