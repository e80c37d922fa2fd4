#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

#include "ssmfrc/system.hpp"

namespace ssmfrc {

/// Diagonalization x = T q of the linear part, with the master mode pair
/// (lambda_1, lambda_2 = conj lambda_1) at positions (master, master + 1).
struct SpectralDecomposition {
    Eigen::VectorXcd lambdas;  // sorted by decreasing real part, conjugate pairs adjacent
    Eigen::MatrixXcd T;
    Eigen::MatrixXcd T_inv;
    /// T_inv restricted to the velocity block and multiplied by M^{-1} (2n x n).
    Eigen::MatrixXcd B_tilde;
    int master = 0;
    std::int64_t sigma_E = 1;

    bool structural = false;     // built from the real mass-normalized modal basis
    double rayleigh_alpha = 0.0; // fitted C = alpha M + beta K (structural path only)
    double rayleigh_beta = 0.0;
    Eigen::VectorXd undamped_frequencies;  // structural path only, ascending

    int dimension() const { return static_cast<int>(lambdas.size()); }
    Complex lambda1() const { return lambdas(master); }
    Complex lambda2() const { return lambdas(master + 1); }
    /// Index of the conjugate partner of row i (i itself for real eigenvalues).
    int conjugate_of(int i) const;
};

struct DecomposeOptions {
    /// Which complex-conjugate pair (0 = slowest decaying) is the master pair.
    int master_mode = 0;
    /// Skip structural-damping detection and use the general eigensolver.
    bool force_general = false;
};

/// Least-squares fit of C = alpha M + beta K. Returns (alpha, beta) when the
/// relative residual is within 1e-12.
std::optional<std::pair<double, double>> detect_rayleigh_damping(const MechanicalSystem& sys);

SpectralDecomposition decompose(const FirstOrderSystem& first_order, const DecomposeOptions& options = {});

/// Int[min Re lambda / Re lambda_1].
std::int64_t spectral_quotient(const Eigen::VectorXcd& lambdas, int master);

struct NonresonanceReport {
    bool passed = true;
    /// Smallest gap |p Re l1 - Re l_l| / |Re l1| over admissible p.
    double min_margin = 0.0;
    int offending_a = 0;
    int offending_b = 0;
    int offending_mode = -1;
    /// |Re lambda_1| * 2M, which should be small.
    double small_damping_ratio = 0.0;
    std::int64_t sigma_E = 1;
};

/// Outer-mode non-resonance a Re l1 + b Re l2 != Re l_l, 2 <= a + b <= sigma_E.
/// Throws SpectralError when some eigenvalue has Re >= 0.
NonresonanceReport check_nonresonance(const SpectralDecomposition& dec, int order_M);

/// Throws ResonanceError (row = offending mode, k = (a, b)) if the report failed.
void require_nonresonant(const NonresonanceReport& report);

}  // namespace ssmfrc
