#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sensprune {

// Malformed model topology, bad configuration values, shape mismatches.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bytes on disk do not match the expected file format.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) +
                           ")"),
        offset_(offset) {}
  // Same error with `context` prepended to the message.
  FormatError(const std::string& context, const FormatError& inner)
      : std::runtime_error(context + inner.what()), offset_(inner.offset_) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Loss became non-finite during training.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}
  TrainingError(const std::string& context, const TrainingError& inner)
      : std::runtime_error(context + inner.what()), epoch_(inner.epoch_) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// A structural edit would violate a topology rule (non-prunable layer,
// broken skip edge, zero surviving filters).
class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller asked for something the current state cannot satisfy.
class InvalidRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed numeric inputs (length mismatch and the like).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace sensprune
