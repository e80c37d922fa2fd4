#include "ssmfrc/system.hpp"

#include <sstream>

#include "ssmfrc/errors.hpp"

namespace ssmfrc {

namespace {

bool is_symmetric(const Eigen::MatrixXd& a) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

void MechanicalSystem::validate() const {
    const auto dim = M.rows();
    if (dim == 0) throw ModelError("mass matrix is empty");
    if (M.cols() != dim || C.rows() != dim || C.cols() != dim || K.rows() != dim || K.cols() != dim)
        throw ModelError("M, C and K must be square matrices of equal size");
    if (forcing_shape.size() != dim) throw ModelError("forcing shape length does not match the DOF count");
    if (!is_symmetric(M)) throw ModelError("mass matrix is not symmetric");
    if (!is_symmetric(C)) throw ModelError("damping matrix is not symmetric");
    if (!is_symmetric(K)) throw ModelError("stiffness matrix is not symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(M).info() != Eigen::Success)
        throw ModelError("mass matrix is not positive definite");
    for (const auto& force : nonlinearity) {
        if (force.dof < 0 || force.dof >= dim) throw ModelError("nonlinear force acts on a DOF outside the model");
        for (const auto& term : force.polynomial.terms) {
            if (term.degree() < 2) {
                std::ostringstream msg;
                msg << "nonlinear force on DOF " << force.dof << " has a term of degree " << term.degree()
                    << "; only quadratic and higher terms are allowed";
                throw ModelError(msg.str());
            }
            for (const auto& [v, e] : term.powers) {
                if (v < 0 || v >= 2 * dim) throw ModelError("nonlinear term references a variable outside (y, ydot)");
                if (e < 1) throw ModelError("nonlinear term exponents must be positive");
            }
            if (std::abs(term.coefficient.imag()) > 0.0) throw ModelError("nonlinear coefficients must be real");
        }
    }
}

Eigen::VectorXd MechanicalSystem::nonlinear_force(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n());
    for (const auto& force : nonlinearity) {
        double sum = 0.0;
        for (const auto& term : force.polynomial.terms) {
            double p = term.coefficient.real();
            for (const auto& [v, e] : term.powers) p *= std::pow(x(v), e);
            sum += p;
        }
        g(force.dof) += sum;
    }
    return g;
}

Eigen::MatrixXd MechanicalSystem::nonlinear_jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n(), 2 * n());
    for (const auto& force : nonlinearity) {
        for (const auto& term : force.polynomial.terms) {
            for (std::size_t f = 0; f < term.powers.size(); ++f) {
                const auto [var, exp] = term.powers[f];
                double p = term.coefficient.real() * exp * std::pow(x(var), exp - 1);
                for (std::size_t o = 0; o < term.powers.size(); ++o)
                    if (o != f) p *= std::pow(x(term.powers[o].first), term.powers[o].second);
                J(force.dof, var) += p;
            }
        }
    }
    return J;
}

FirstOrderSystem::FirstOrderSystem(const MechanicalSystem& sys) : sys_(sys) {
    const int n = sys.n();
    if (n == 0 || sys.M.cols() != n) throw ModelError("mass matrix must be square and nonempty");
    mass_.compute(sys.M);
    if (mass_.info() != Eigen::Success) throw ModelError("mass matrix is singular or not positive definite");
    A_ = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A_.topRightCorner(n, n).setIdentity();
    A_.bottomLeftCorner(n, n) = -mass_.solve(sys.K);
    A_.bottomRightCorner(n, n) = -mass_.solve(sys.C);
}

Eigen::VectorXd FirstOrderSystem::forcing_image() const {
    const int n = sys_.n();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
    out.tail(n) = mass_.solve(sys_.forcing_shape);
    return out;
}

Eigen::VectorXd FirstOrderSystem::nonlinearity_image(const Eigen::VectorXd& x) const {
    const int n = sys_.n();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
    if (!sys_.nonlinearity.empty()) out.tail(n) = -mass_.solve(sys_.nonlinear_force(x));
    return out;
}

Eigen::VectorXd FirstOrderSystem::rhs(double t, const Eigen::VectorXd& x, double epsilon, double omega) const {
    Eigen::VectorXd out = A_ * x + nonlinearity_image(x);
    if (epsilon != 0.0) out += epsilon * std::cos(omega * t) * forcing_image();
    return out;
}

Eigen::MatrixXd FirstOrderSystem::jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd J = A_;
    if (!sys_.nonlinearity.empty()) {
        const int n = sys_.n();
        J.bottomRows(n) -= mass_.solve(sys_.nonlinear_jacobian(x));
    }
    return J;
}

}  // namespace ssmfrc
