#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wue {

// Error categories double as process exit codes for the CLI.
enum class ErrorKind : int {
    Config = 2,
    Data = 3,
    Infeasible = 4,
    Network = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

    // Short label printed in front of CLI error messages.
    virtual const char* category() const noexcept {
        switch (kind_) {
        case ErrorKind::Config: return "config error";
        case ErrorKind::Data: return "data error";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::Network: return "network error";
        }
        return "error";
    }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// A value outside the envelope where a model is defined. `field` names the
// offending input so callers can tell e.g. humidity from temperature.
class DomainError : public Error {
public:
    DomainError(std::string field, const std::string& what)
        : Error(ErrorKind::Data, what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }
    const char* category() const noexcept override { return "domain error"; }

private:
    std::string field_;
};

class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what) : Error(ErrorKind::Infeasible, what) {}
};

class NetworkError : public Error {
public:
    explicit NetworkError(const std::string& what) : Error(ErrorKind::Network, what) {}
};

// Credential rejected by the remote API. Reported with the config exit code
// since retrying cannot fix it.
class AuthError : public Error {
public:
    explicit AuthError(const std::string& what) : Error(ErrorKind::Config, what) {}
    const char* category() const noexcept override { return "auth error"; }
};

}  // namespace wue
