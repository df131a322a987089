#pragma once

#include <stdexcept>
#include <string>

namespace modgen {

/// Base of all library errors. exit_code() is the CLI status the error maps to.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

class InvalidRegion : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ConfigMismatch : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// An eigenvalue of the artanh argument reached the spectral margin floor.
class SpectrumOutOfRange : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 3; }
};

class NonConvergence : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 4; }
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 4; }
};

class RootNotBracketed : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 4; }
};

class DomainError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class MissingArtifact : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 5; }
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 6; }
};

} // namespace modgen
