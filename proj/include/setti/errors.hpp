#pragma once

#include <stdexcept>
#include <string>

namespace setti {

/// Invalid configuration: bad layer composition, bad hyperparameters,
/// unsupported setups. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape mismatch between composed layers or between a model and its input.
class ShapeError : public ConfigError {
 public:
  explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

/// Bad input data: unreadable files, unparseable cells, out-of-range labels,
/// size violations. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training produced a non-finite loss. Carries the epoch where it happened.
/// CLI exit code 4.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& msg, int epoch)
      : std::runtime_error(msg + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace setti
