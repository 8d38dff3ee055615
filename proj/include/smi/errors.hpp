// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace smi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (e.g. an indefinite
/// matrix handed to a PSD-only routine, N_S < N_T).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A numerical kernel failed (eigensolver non-convergence, singular system).
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// An iterative solver hit its iteration cap before reaching tolerance.
class ConvergenceError : public NumericalError {
  public:
    ConvergenceError(const std::string& what, double residual)
        : NumericalError(what + " (last residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

/// Finite differences disagree with an analytic gradient under every
/// admissible scale factor.
class ConventionError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// The optimization problem has no feasible point.
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

/// Malformed or invalid experiment configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace smi
