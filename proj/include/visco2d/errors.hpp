#pragma once

#include <stdexcept>
#include <string>

namespace visco2d {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Run configuration failed to parse or validate (CLI exit code 1).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A field produced by the time stepper contains NaN/Inf (CLI exit code 2).
class StepDiverged : public Error {
  public:
    using Error::Error;
};

/// Stored artifact (checkpoint, report) failed magic/version/integrity checks
/// (CLI exit code 3).
class BadArtifact : public Error {
  public:
    using Error::Error;
};

/// Initial data rejected at construction (e.g. deformation too far from I).
class InitRejected : public Error {
  public:
    using Error::Error;
};

/// Requested dt exceeds the advective stability ceiling.
class CflExceeded : public Error {
  public:
    using Error::Error;
};

/// Diagnostics history has gaps or does not cover the requested interval.
class IncompleteHistory : public Error {
  public:
    using Error::Error;
};

/// Weak-form test function violates its contract (e.g. not divergence-free).
class InvalidTestFunction : public Error {
  public:
    using Error::Error;
};

/// Snapshot cadence too coarse for the requested trajectory step.
class CadenceTooCoarse : public Error {
  public:
    using Error::Error;
};

/// A check's standing assumption fails on the data (e.g. |F-I| > 1/2).
class PrerequisiteViolated : public Error {
  public:
    using Error::Error;
};

/// Two stored runs cannot be compared (grid or cadence mismatch).
class IncompatibleRuns : public Error {
  public:
    using Error::Error;
};

/// Filesystem failure while reading/writing artifacts.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace visco2d
