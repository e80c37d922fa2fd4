#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <vector>

#include "ssmfrc/mpoly.hpp"

namespace ssmfrc {

/// One scalar nonlinear force g_dof(x) with x = (y, ydot) in R^{2n}.
struct NonlinearForce {
    int dof = 0;
    ScalarPolynomial polynomial;
};

/// M y'' + C y' + K y + g(y, y') = eps * f * cos(Omega t).
struct MechanicalSystem {
    Eigen::MatrixXd M;
    Eigen::MatrixXd C;
    Eigen::MatrixXd K;
    std::vector<NonlinearForce> nonlinearity;
    Eigen::VectorXd forcing_shape;
    double epsilon = 0.0;

    int n() const { return static_cast<int>(M.rows()); }

    /// Throws ModelError on shape, symmetry, definiteness or nonlinearity violations.
    void validate() const;

    /// g(x) as a length-n vector.
    Eigen::VectorXd nonlinear_force(const Eigen::VectorXd& x) const;
    /// dg/dx as an n x 2n matrix.
    Eigen::MatrixXd nonlinear_jacobian(const Eigen::VectorXd& x) const;
};

/// x' = A x + G_p(x) + eps F_p cos(Omega t) with x = (y, y').
class FirstOrderSystem {
public:
    explicit FirstOrderSystem(const MechanicalSystem& sys);

    const Eigen::MatrixXd& A() const { return A_; }
    int dimension() const { return static_cast<int>(A_.rows()); }
    const MechanicalSystem& mechanical() const { return sys_; }

    /// (0, M^{-1} f).
    Eigen::VectorXd forcing_image() const;
    /// (0, -M^{-1} g(x)).
    Eigen::VectorXd nonlinearity_image(const Eigen::VectorXd& x) const;
    /// Full right-hand side at time t.
    Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x, double epsilon, double omega) const;
    /// d rhs / dx.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

    Eigen::MatrixXd solve_mass(const Eigen::MatrixXd& b) const { return mass_.solve(b); }

private:
    MechanicalSystem sys_;
    Eigen::LLT<Eigen::MatrixXd> mass_;
    Eigen::MatrixXd A_;
};

inline FirstOrderSystem to_first_order(const MechanicalSystem& sys) { return FirstOrderSystem(sys); }

}  // namespace ssmfrc
