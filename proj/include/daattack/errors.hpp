#ifndef DAATTACK_ERRORS_HPP
#define DAATTACK_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace daa {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not compose (tensor ops, layer tables, ensembles).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyper-parameters or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad call arguments that are neither shapes nor configuration.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed model/dataset/artifact file. Carries the byte offset where
/// decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class MagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Run artifacts that cannot be combined (schema or dataset mismatch).
class ArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace daa

#endif  // DAATTACK_ERRORS_HPP
