#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thetaskew {

/// Base of every error raised by the library. The CLI maps ConfigError to
/// exit status 2 and every other Error to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented invariant (|theta| >= 1, dx <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Phase requested at a grid point whose amplitude is below the zero threshold.
class ZeroAmplitude : public Error {
 public:
  explicit ZeroAmplitude(std::size_t index)
      : Error("phase undefined at zero-amplitude node " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class Degenerate : public Error {
 public:
  using Error::Error;
};

class NoFringe : public Error {
 public:
  using Error::Error;
};

class NoPeaks : public Error {
 public:
  using Error::Error;
};

class EmptyWindow : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

class Underdetermined : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

class EmptyDistribution : public Error {
 public:
  using Error::Error;
};

/// Field growth exceeded the overflow guard during evolution.
class Instability : public Error {
 public:
  using Error::Error;
};

class PrecisionLoss : public Error {
 public:
  using Error::Error;
};

class Inconclusive : public Error {
 public:
  using Error::Error;
};

/// Configuration problem. Carries the offending key and source line (0 if unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, int line, const std::string& message)
      : Error(format(key, line, message)), key_(key), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, int line, const std::string& message) {
    std::string out = "config error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!key.empty()) out += " [" + key + "]";
    return out + ": " + message;
  }
  std::string key_;
  int line_;
};

}  // namespace thetaskew
