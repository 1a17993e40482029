#pragma once

#include <stdexcept>
#include <string>

namespace adinkra {

// Base for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated an operation's stated precondition (shape mismatch,
// out-of-range argument, odd pooling extent, ...).
struct PreconditionError : Error {
  using Error::Error;
};

// A requested configuration is outside what the implementation supports
// (non-3x3 kernel, unknown layer tag, unknown classifier key, ...).
struct ConfigError : Error {
  using Error::Error;
};

// The API was driven in an unsupported way (backward on a foreign tape,
// missing gradients before an optimizer step, empty split, ...).
struct UsageError : Error {
  using Error::Error;
};

// Bad external input: undecodable image, missing file, malformed catalog.
struct InputError : Error {
  using Error::Error;
};

// Versioned binary files (checkpoints, feature matrices) fail with a
// specific InputError so callers can distinguish an unsupported format
// revision, a short read, and a corrupted payload.
struct VersionError : InputError {
  using InputError::InputError;
};
struct TruncationError : InputError {
  using InputError::InputError;
};
struct ChecksumError : InputError {
  using InputError::InputError;
};

// Filesystem failures while writing artifacts.
struct IoError : Error {
  using Error::Error;
};

}  // namespace adinkra
