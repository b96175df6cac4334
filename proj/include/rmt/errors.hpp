#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmt {

// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// Linear solve hit a pivot below the singularity threshold.
class SingularMatrix : public Error {
public:
    SingularMatrix(const std::string& msg, std::size_t pivot_index)
        : Error(msg + " (pivot index " + std::to_string(pivot_index) + ")"),
          pivot(pivot_index) {}
    std::size_t pivot;
};

// Eigenvalue iteration failed; carries whatever was deflated before the stall.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<std::complex<double>> partial)
        : Error(msg), deflated(std::move(partial)) {}
    std::vector<std::complex<double>> deflated;
};

// Eigenvalue gap below tolerance where distinct eigenvalues are required.
class DegenerateSpectrum : public Error {
public:
    explicit DegenerateSpectrum(const std::string& msg) : Error(msg) {}
};

// Importance-sampled estimate with effective sample size too small to trust.
class UnreliableEstimate : public Error {
public:
    UnreliableEstimate(const std::string& msg, double ess_value)
        : Error(msg + " (ESS " + std::to_string(ess_value) + ")"), ess(ess_value) {}
    double ess;
};

class QuadratureError : public Error {
public:
    explicit QuadratureError(const std::string& msg) : Error(msg) {}
};

// Fixed-point or root search found no admissible solution.
class NoSolution : public Error {
public:
    explicit NoSolution(const std::string& msg) : Error(msg) {}
};

} // namespace rmt
