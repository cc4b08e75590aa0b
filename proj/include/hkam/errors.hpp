#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hkam {

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Quadrature or integrator could not reach the requested accuracy.
struct NumericalResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct BasisMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A matrix lacks a structure it is required to have (symmetry, block shape).
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class SmallDivisorError : public std::runtime_error {
public:
    SmallDivisorError(std::vector<int> k, int wa, int wb, double value, double bound);

    const std::vector<int>& k() const noexcept { return k_; }
    int wa() const noexcept { return wa_; }
    int wb() const noexcept { return wb_; }
    double value() const noexcept { return value_; }
    double bound() const noexcept { return bound_; }

private:
    std::vector<int> k_;
    int wa_, wb_;
    double value_, bound_;
};

}  // namespace hkam
