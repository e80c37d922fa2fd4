#pragma once

#include <stdexcept>
#include <string>

namespace ssmfrc {

/// Invalid model data (non-SPD mass, wrong dimensions, bad nonlinearity).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Spectrum violates a hypothesis of the reduction (instability, defective A).
class SpectralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact resonance: a vanishing denominator off the removed slots.
class ResonanceError : public std::runtime_error {
public:
    ResonanceError(const std::string& what, int row, int k1, int k2, int sign = 0)
        : std::runtime_error(what), row(row), k1(k1), k2(k2), sign(sign) {}

    int row;
    int k1;
    int k2;
    int sign;
};

}  // namespace ssmfrc
