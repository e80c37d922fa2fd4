#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "ssmfrc/mpoly.hpp"
#include "ssmfrc/spectral.hpp"
#include "ssmfrc/system.hpp"

namespace ssmfrc {

/// d g_dof / d x_variable composed with the physical image of W0.
struct JacobianSeries {
    int dof = 0;
    int variable = 0;
    MultiIndexPolynomial series;
};

/// Autonomous SSM x = T W0(s) with reduced dynamics s' = R0(s).
struct AutonomousSSM {
    int M = 1;
    int order = 3;   // 2M + 1
    int master = 0;  // rows (master, master + 1) carry the reduced coordinates
    Eigen::VectorXcd lambdas;

    std::vector<MultiIndexPolynomial> W0;  // one per modal row
    MultiIndexPolynomial R0[2];
    std::vector<Complex> gammas;  // gamma_1 .. gamma_M

    // Data reused by the non-autonomous solve.
    std::vector<int> variables;  // physical variables the nonlinearity reads
    Eigen::MatrixXcd T_rows;     // rows of T for `variables`
    std::vector<int> force_dofs; // DOFs carrying a nonlinear force
    Eigen::MatrixXcd B_cols;     // columns of B_tilde for `force_dofs`
    std::vector<JacobianSeries> jacobian;

    int dimension() const { return static_cast<int>(W0.size()); }

    /// W0(s1, s2) for every row.
    Eigen::VectorXcd evaluate(Complex s1, Complex s2) const;
    /// Reduced vector field R0(s1, s2).
    Eigen::Vector2cd reduced(Complex s1, Complex s2) const;
};

/// Order-by-order solution of the autonomous invariance equation up to 2M+1.
/// Throws ResonanceError on a vanishing divisor outside the reduced slots.
AutonomousSSM build_autonomous(const MechanicalSystem& sys, const SpectralDecomposition& dec, int M);

/// G_m(q) = -B_tilde g(T q) evaluated for complex modal coordinates.
Eigen::VectorXcd modal_nonlinearity(const MechanicalSystem& sys, const SpectralDecomposition& dec,
                                    const Eigen::VectorXcd& q);

/// max_s |Lambda W0 + G_m(W0) - D W0 R0|_inf over s1 in `samples`, s2 = conj s1.
double autonomous_invariance_residual(const AutonomousSSM& ssm, const SpectralDecomposition& dec,
                                      const MechanicalSystem& sys, const std::vector<Complex>& samples);

/// Largest |s| on a log grid (1e-6 .. 1e3, 8 points per decade) up to which the autonomous
/// residual stays below tolerance * |lambda_1| * |s|, i.e. small against the linear term.
double validated_radius(const AutonomousSSM& ssm, const SpectralDecomposition& dec, const MechanicalSystem& sys,
                        double tolerance = 1e-3);

/// Largest violation of W0_{conj i}(k1, k2) = conj W0_i(k2, k1), relative to the largest coefficient.
double conjugate_symmetry_defect(const AutonomousSSM& ssm, const SpectralDecomposition& dec);

/// Versioned JSON cache of the autonomous coefficients.
std::string serialize_autonomous(const AutonomousSSM& ssm, const std::string& model_hash);
/// Restores a cached SSM; the model-dependent tables are rebuilt from `sys` and `dec`.
/// Returns false if the text is not a cache for `model_hash` in the current format.
bool deserialize_autonomous(const std::string& text, const std::string& model_hash,
                            const MechanicalSystem& sys, const SpectralDecomposition& dec, AutonomousSSM& out);

}  // namespace ssmfrc
