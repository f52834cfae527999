#pragma once

#include <stdexcept>
#include <string>

namespace switchq {

/// Model or argument violates a structural requirement (bad distribution,
/// step-size out of range, zero-visit state-action pair, ...).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; message carries the offending field and line.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure (unreadable path, write error).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A requested numerical certificate could not be produced to tolerance.
struct CertificateFailure : std::runtime_error {
  explicit CertificateFailure(const std::string& msg) : std::runtime_error(msg) {}
};

/// A provable invariant failed at runtime; this always signals an
/// implementation bug, never a statistical event.
struct InvariantViolation : std::runtime_error {
  explicit InvariantViolation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace switchq
