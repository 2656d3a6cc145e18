#pragma once

#include <stdexcept>
#include <string>

namespace omsim {

// Error taxonomy mirrors the CLI exit codes: validation (1), convergence (2), io (3).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

// Raised when a requested drive pattern falls outside the linearized sideband ansatz.
class AnsatzError : public Error {
public:
    explicit AnsatzError(const std::string& what) : Error("ansatz", what) {}
};

// A denominator too small to invert; carries the offending parameters in the message.
class SingularityError : public Error {
public:
    explicit SingularityError(const std::string& what) : Error("singularity", what) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& what) : Error("convergence", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

} // namespace omsim
