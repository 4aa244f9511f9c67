#pragma once

#include <stdexcept>
#include <string>

namespace roomenv {

enum class Errc {
  Io,
  MissingFile,
  ShapeMismatch,
  BadChecksum,
  UnsupportedSchema,
  BadSpec,
  InvalidArgument,
  EmptyInput,
  VoxelRange,
  ScaleMismatch,
  EnvelopeViolation,
  Degenerate,
  EmptySet,
  NonUnitInput,
  NoValidRegions,
};

const char* to_string(Errc code);

/// Library-wide exception. The message names the offending file or field.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// True for failures caused by the filesystem rather than by bad data.
  bool is_io() const noexcept { return code_ == Errc::Io || code_ == Errc::MissingFile; }

 private:
  Errc code_;
};

}  // namespace roomenv
