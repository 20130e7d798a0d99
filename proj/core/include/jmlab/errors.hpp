#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace jmlab {

/// Base of every error raised by the library. `category()` is the stable
/// machine-readable tag written into CLI error artifacts.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* category() const noexcept { return "error"; }
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }
    const char* category() const noexcept override { return "parse"; }

private:
    std::size_t offset_;
};

/// log/sqrt of a negative number, division by zero, and similar.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::string node)
        : Error(what + " in '" + node + "'"), node_(std::move(node)) {}
    const std::string& node() const noexcept { return node_; }
    const char* category() const noexcept override { return "domain"; }

private:
    std::string node_;
};

/// The kinetic model is invalid at a queried point (not positive definite,
/// not homogeneous, not reversible, singular).
class ModelError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "model"; }
};

class InversionError : public Error {
public:
    InversionError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }
    const char* category() const noexcept override { return "inversion"; }

private:
    double residual_;
};

/// Query at or beyond the boundary of the Hill region, where the
/// Jacobi metric degenerates.
class DegeneracyError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "degeneracy"; }
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t, std::vector<double> last_state)
        : Error(what + " at t=" + std::to_string(t)), t_(t), state_(std::move(last_state)) {}
    double time() const noexcept { return t_; }
    const std::vector<double>& last_state() const noexcept { return state_; }
    const char* category() const noexcept override { return "integration"; }

private:
    double t_;
    std::vector<double> state_;
};

/// Violated precondition of a numerical routine (bad seed, bad parameters).
class PreconditionError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "precondition"; }
};

/// Newton/shooting failure: divergence, no turning event, singular Jacobian.
class ShootingError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "shooting"; }
};

class PerturbationError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "perturbation"; }
};

}  // namespace jmlab
