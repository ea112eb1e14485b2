#pragma once

#include <stdexcept>
#include <string>

namespace vortexscore {

// Every error class maps to a distinct CLI exit status (see tools/cli.cpp).

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coordinate outside the domain of the strain field (r <= 0 in the axisymmetric case).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A precondition on arguments failed (empty input, bad fraction, bad grid, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The network produced a non-finite value, or training diverged.
class ModelDivergenceError : public Error {
public:
    using Error::Error;
};

/// Zero variance or zero displacement where a strictly positive value is needed.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Dataset payload truncated or hash mismatch.
class CorruptionError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV / JSON document.
class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace vortexscore
