#pragma once

#include <stdexcept>
#include <string>

namespace droste {

// Exit-code classes used by the CLI: 1 internal, 2 user/config, 3 backend.
enum class ErrorKind { internal = 1, config = 2, backend = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Argument outside the mathematical domain of an operation (zero, non-finite, P <= 1).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Bad user input: configuration, parameters, missing files.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Input the algorithm cannot handle (e.g. a hole with no known boundary).
class UnsupportedInput : public Error {
public:
    explicit UnsupportedInput(const std::string& what) : Error(ErrorKind::config, what) {}
};

class BackendError : public Error {
public:
    BackendError(const std::string& what, std::string diagnostics = {})
        : Error(ErrorKind::backend, what), diagnostics_(std::move(diagnostics)) {}

    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

/// A metric has nothing to measure on this image (e.g. no edges for DOM).
class UnscorableError : public Error {
public:
    explicit UnscorableError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::config, what) {}
};

}  // namespace droste
