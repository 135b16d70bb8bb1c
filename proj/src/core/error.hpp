#pragma once

#include <stdexcept>
#include <string>

namespace pb {

// Status values shared with the C API and the CLI exit codes.
enum class Status : int {
    Ok = 0,
    PropertyFailure = 1,
    ConfigError = 2,
    Divergence = 3,
    Internal = 4,
};

class Error : public std::runtime_error {
public:
    Error(Status status, std::string message)
        : std::runtime_error(std::move(message)), status_(status) {}
    Status status() const { return status_; }

private:
    Status status_;
};

// Bad user input: unknown keys, out-of-range values, unusable data files.
class ConfigError : public Error {
public:
    explicit ConfigError(std::string message) : Error(Status::ConfigError, std::move(message)) {}
};

// A checked mathematical property failed to hold at runtime.
class PropertyError : public Error {
public:
    explicit PropertyError(std::string message) : Error(Status::PropertyFailure, std::move(message)) {}
};

// Training walked out of the trusted numeric range.
class DivergenceError : public Error {
public:
    DivergenceError(long step, double gamma, std::string message)
        : Error(Status::Divergence, std::move(message)), step_(step), gamma_(gamma) {}
    long step() const { return step_; }
    double gamma() const { return gamma_; }

private:
    long step_;
    double gamma_;
};

}  // namespace pb
