#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace homcam {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Input stream is not ordered by time of arrival.
class OrderError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure (open, read, write).
class IoError : public Error {
public:
  using Error::Error;
};

/// Event file header is malformed (magic, version, record count).
class FormatError : public Error {
public:
  using Error::Error;
};

/// Event file ended before the declared content.
class TruncationError : public Error {
public:
  TruncationError(const std::string& what, std::uint64_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

/// Pixel coordinates outside the sensor declared in the header.
class BoundsError : public Error {
public:
  using Error::Error;
};

/// Analysis could not produce the requested quantity.
class AnalysisError : public Error {
public:
  using Error::Error;
};

} // namespace homcam
