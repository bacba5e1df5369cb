#pragma once

#include <stdexcept>
#include <string>

namespace tlsnoise {

/// Coarse failure category; the CLI maps these onto its exit codes.
enum class ErrorKind { invalid_input, numerical, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Curve fit did not converge or the data do not resolve the model.
class FitFailure : public NumericalError {
public:
    explicit FitFailure(const std::string& what) : NumericalError(what) {}
};

/// Two-tone fit cannot separate its tones.
class AmbiguityError : public NumericalError {
public:
    explicit AmbiguityError(const std::string& what) : NumericalError(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

inline const char* error_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::numerical: return "numerical-failure";
    case ErrorKind::io: return "io-failure";
    }
    return "unknown";
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidInput(message);
}

} // namespace tlsnoise
