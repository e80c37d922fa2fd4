#include "ssmfrc/beam.hpp"

#include <cmath>

#include "ssmfrc/errors.hpp"

namespace ssmfrc {

namespace {
constexpr double kBeta1L = 1.875104;
}

void BeamConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ModelError(std::string("beam parameter '") + name + "' must be positive");
    };
    positive(L, "L");
    positive(h, "h");
    positive(b, "b");
    positive(rho, "rho");
    positive(E_mod, "E");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ModelError("beam damping parameters must be non-negative");
    if (!std::isfinite(kappa) || !std::isfinite(P)) throw ModelError("beam kappa and P must be finite");
    if (elements < 2) throw ModelError("beam needs at least two elements");
}

double continuum_first_frequency(const BeamConfig& cfg) {
    return kBeta1L * kBeta1L * std::sqrt(cfg.E_mod * cfg.inertia() / (cfg.rho * cfg.area() * std::pow(cfg.L, 4)));
}

Eigen::Matrix4d hermite_stiffness(double EI, double le) {
    const double l2 = le * le;
    Eigen::Matrix4d k;
    k << 12, 6 * le, -12, 6 * le,
         6 * le, 4 * l2, -6 * le, 2 * l2,
         -12, -6 * le, 12, -6 * le,
         6 * le, 2 * l2, -6 * le, 4 * l2;
    return k * (EI / (l2 * le));
}

Eigen::Matrix4d hermite_mass(double rhoA, double le) {
    const double l2 = le * le;
    Eigen::Matrix4d m;
    m << 156, 22 * le, 54, -13 * le,
         22 * le, 4 * l2, 13 * le, -3 * l2,
         54, 13 * le, 156, -22 * le,
         -13 * le, -3 * l2, -22 * le, 4 * l2;
    return m * (rhoA * le / 420.0);
}

MechanicalSystem build_beam(const BeamConfig& cfg, double epsilon) {
    cfg.validate();
    const int m = cfg.elements;
    const int total = 2 * (m + 1);
    const double le = cfg.L / m;
    // rotation DOF stored as -dw/dx
    const Eigen::Vector4d flip(1.0, -1.0, 1.0, -1.0);
    const Eigen::Matrix4d ke = flip.asDiagonal() * hermite_stiffness(cfg.E_mod * cfg.inertia(), le) * flip.asDiagonal();
    const Eigen::Matrix4d me = flip.asDiagonal() * hermite_mass(cfg.rho * cfg.area(), le) * flip.asDiagonal();

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(total, total);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(total, total);
    for (int e = 0; e < m; ++e) {
        K.block<4, 4>(2 * e, 2 * e) += ke;
        M.block<4, 4>(2 * e, 2 * e) += me;
    }

    MechanicalSystem sys;
    const int n = 2 * m;
    sys.K = K.bottomRightCorner(n, n);
    sys.M = M.bottomRightCorner(n, n);
    sys.K = 0.5 * (sys.K + sys.K.transpose()).eval();
    sys.M = 0.5 * (sys.M + sys.M.transpose()).eval();
    sys.C = cfg.alpha * sys.M + cfg.beta * sys.K;
    const int tip = beam_tip_dof(cfg);
    if (cfg.kappa != 0.0) {
        NonlinearForce f;
        f.dof = tip;
        f.polynomial.terms.push_back({Complex{cfg.kappa, 0.0}, {{tip, 3}}});
        sys.nonlinearity.push_back(std::move(f));
    }
    sys.forcing_shape = Eigen::VectorXd::Zero(n);
    sys.forcing_shape(tip) = cfg.P;
    sys.epsilon = epsilon;
    return sys;
}

BeamCoefficients analytic_ssm_coefficients(const BeamConfig& cfg, const SpectralDecomposition& dec, double Omega) {
    const int tip = beam_tip_dof(cfg);
    const int p1 = dec.master;
    const int p2 = dec.master + 1;
    const Complex I{0.0, 1.0};
    const Complex B1 = dec.B_tilde(p1, tip);
    const Complex T1 = dec.T(tip, p1);
    const Complex T2 = dec.T(tip, p2);
    const double kappa = cfg.kappa;
    const double P = cfg.P;

    Complex sum_c{0.0, 0.0};
    Complex sum_d{0.0, 0.0};
    for (int j = 0; j < dec.dimension(); ++j) {
        const Complex term = dec.T(tip, j) * dec.B_tilde(j, tip) * P;
        if (j != p1) sum_c += term / (2.0 * (dec.lambdas(j) - I * Omega));
        if (j != p2) sum_d += term / (2.0 * (dec.lambdas(j) + I * Omega));
    }
    BeamCoefficients out;
    out.gamma1 = -3.0 * kappa * B1 * T1 * T1 * T2;
    out.c10 = B1 * P / 2.0;
    out.c11 = 6.0 * kappa * B1 * T1 * T2 * sum_c;
    out.d20 = 3.0 * kappa * B1 * T1 * T1 * sum_d;
    return out;
}

}  // namespace ssmfrc
