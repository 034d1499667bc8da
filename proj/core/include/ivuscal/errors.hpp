#pragma once

#include <stdexcept>
#include <string>

namespace ivuscal {

/// Base class for all ivuscal errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point configuration too degenerate to register (collinear, too few points).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

/// A phantom or acquisition spec violates its invariants.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// A simulated acquisition produced zero observations.
class NoVisibleLandmarks : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  int line() const { return line_; }

 private:
  int line_ = 0;
};

/// Two records share an identifier that must be unique.
class DuplicateId : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A pose rotation is not a proper rotation (reflection or far from orthonormal).
class NonRigidPose : public ParseError {
 public:
  using ParseError::ParseError;
};

/// An observation references a landmark id absent from the phantom.
class UnknownLandmark : public Error {
 public:
  using Error::Error;
};

/// An observation references a frame with no recorded pose.
class MissingPose : public Error {
 public:
  using Error::Error;
};

/// File declares an unsupported format version.
class VersionMismatch : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (open, read, write).
class IoError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs at least one element received none.
class EmptyInput : public Error {
 public:
  using Error::Error;
};

}  // namespace ivuscal
