#ifndef WSN_ERROR_HPP
#define WSN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace wsn {

/// Base of every error raised by the pipeline. `module()` names the stage
/// that failed so the CLI can report it.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class EmptyStreamError : public Error {
 public:
  using Error::Error;
};

/// Noise injection on a window whose temperature has zero spread.
class DegenerateWindowError : public Error {
 public:
  using Error::Error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value inside a forward/backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error("nn", what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// A metric whose denominator is zero (e.g. TPR with no abnormal samples).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Model file does not match the requested preset or format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace wsn

#endif  // WSN_ERROR_HPP
