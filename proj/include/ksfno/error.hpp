#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ksfno {

enum class ErrorCode {
  InvalidArgument,
  OddSize,
  BlowUp,
  SplitTooLarge,
  Io,
  BadMagic,
  VersionMismatch,
  ChecksumMismatch,
  ModesExceedGrid,
  ZeroTarget,
  BinMismatch,
  ShapeMismatch,
  MissingReport,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every typed failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Numerical explosion in the time integrator. `step` is the 1-based step that
/// produced a non-finite or oversized value; `sample` is set when the failure
/// happened while generating a dataset.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& message, std::size_t step, std::optional<std::size_t> sample = {})
      : Error(ErrorCode::BlowUp, message), step_(step), sample_(sample) {}

  std::size_t step() const noexcept { return step_; }
  std::optional<std::size_t> sample() const noexcept { return sample_; }

 private:
  std::size_t step_;
  std::optional<std::size_t> sample_;
};

}  // namespace ksfno
