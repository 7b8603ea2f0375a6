#pragma once

#include <stdexcept>
#include <string>

namespace risknet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid input data (CSV contents, correlation slices, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration or CLI usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Parameter outside the domain of a distribution or model.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Estimation could not produce a usable result.
class EstimationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace risknet
