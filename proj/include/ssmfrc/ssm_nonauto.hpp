#pragma once

#include <Eigen/Dense>

#include <vector>

#include "ssmfrc/ssm_auto.hpp"

namespace ssmfrc {

/// O(eps) part W1_i(s, phi) = A_i(s) e^{i phi} + B_i(s) e^{-i phi} for one forcing frequency,
/// with R1_j(s, phi) = c_j(s) e^{i phi} + d_j(s) e^{-i phi}.
struct NonAutonomousSSM {
    double Omega = 0.0;
    int M = 1;
    int order = 2;  // 2M
    std::vector<MultiIndexPolynomial> A;
    std::vector<MultiIndexPolynomial> B;
    MultiIndexPolynomial c[2];
    MultiIndexPolynomial d[2];

    Complex c10;
    std::vector<Complex> c_ii;     // c_{1,(i,i)}, i = 1..M
    std::vector<Complex> d_iplus;  // d_{1,(i+1,i-1)}, i = 1..M

    int dimension() const { return static_cast<int>(A.size()); }

    /// W1(s, phi) for every row.
    Eigen::VectorXcd evaluate(Complex s1, Complex s2, double phi) const;
    Eigen::Vector2cd reduced(Complex s1, Complex s2, double phi) const;
};

/// F_tilde = B_tilde f (modal image of the forcing shape).
Eigen::VectorXcd modal_forcing(const SpectralDecomposition& dec, const Eigen::VectorXd& forcing_shape);

/// Harmonic components (alpha, beta) of P_{i,k}; lower orders of `partial` must be complete.
std::pair<Complex, Complex> assemble_P(int i, MultiIndex k, const AutonomousSSM& ssm, const NonAutonomousSSM& partial,
                                       const Eigen::VectorXcd& F_tilde);

/// Solves orders 0..2M for one Omega. Throws ResonanceError (sign = +1 for e^{i phi},
/// -1 for e^{-i phi}) on a vanishing divisor outside the removed slots.
NonAutonomousSSM build_nonautonomous(const AutonomousSSM& ssm, const Eigen::VectorXcd& F_tilde, double Omega);

/// max over samples of |Lambda W + G_m(W) + eps F_m(phi) - D_s W R - Omega d_phi W|_inf with
/// W = W0 + eps W1, R = R0 + eps R1, s2 = conj s1.
struct InvarianceSample {
    Complex s1;
    double phi = 0.0;
};
double full_invariance_residual(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec,
                                const MechanicalSystem& sys, const Eigen::VectorXcd& F_tilde, double epsilon,
                                const std::vector<InvarianceSample>& samples);

/// Largest violation of the conjugacy relations between rows of W1 and of R1.
double nonautonomous_conjugacy_defect(const NonAutonomousSSM& na, const SpectralDecomposition& dec);

}  // namespace ssmfrc
