#pragma once

#include <stdexcept>
#include <string>

namespace aae {

// Root of every error the library throws. Subclasses only narrow the
// category so callers (and tests) can tell failure modes apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class EncodeError : public Error { using Error::Error; };
class InjectionError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };
class CompatibilityError : public Error { using Error::Error; };
class EvaluationError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class FitError : public Error { using Error::Error; };
class ValueError : public RowError { using RowError::RowError; };

// Checkpoint failures are distinct so a caller can react differently to a
// stale file, a file for other data, and a damaged file.
class CheckpointError : public Error { using Error::Error; };
class VersionMismatchError : public CheckpointError { using CheckpointError::CheckpointError; };
class DigestMismatchError : public CheckpointError { using CheckpointError::CheckpointError; };
class TruncatedPayloadError : public CheckpointError { using CheckpointError::CheckpointError; };

}  // namespace aae
