#pragma once

#include <stdexcept>
#include <string>

namespace mercator {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid event configuration, weights or command-line input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (corpus lines, labels, series).
class DataError : public Error {
public:
    using Error::Error;
};

/// A remote service failed or returned something unusable.
class UpstreamError : public Error {
public:
    using Error::Error;
};

/// The remote service rejected our credentials. Never retried.
class CredentialError : public UpstreamError {
public:
    using UpstreamError::UpstreamError;
};

/// A module has no signal for the event and abstains from the ensemble.
class NoSignal : public Error {
public:
    using Error::Error;
};

}  // namespace mercator
