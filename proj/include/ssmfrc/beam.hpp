#pragma once

#include <Eigen/Dense>

#include "ssmfrc/spectral.hpp"
#include "ssmfrc/system.hpp"

namespace ssmfrc {

/// Clamped-free beam in mm, kg, s (stress in kPa = mN/mm^2, force in mN).
struct BeamConfig {
    double L = 2700.0;
    double h = 10.0;
    double b = 10.0;
    double rho = 1780e-9;
    double E_mod = 45e6;
    double kappa = 4.0;
    double alpha = 1.25e-4;
    double beta = 2.5e-4;
    double P = 0.1;
    int elements = 5;

    double area() const { return b * h; }
    double inertia() const { return b * h * h * h / 12.0; }
    /// Throws ModelError for non-positive sizes or fewer than two elements.
    void validate() const;
};

/// Continuum first bending frequency (beta_1 L)^2 sqrt(EI / (rho A L^4)).
double continuum_first_frequency(const BeamConfig& cfg);

/// Hermite element stiffness and consistent mass for DOFs (w1, t1, w2, t2) with t = dw/dx.
Eigen::Matrix4d hermite_stiffness(double EI, double le);
Eigen::Matrix4d hermite_mass(double rhoA, double le);

/// Node-major DOFs (w, -dw/dx), clamped node removed; the tip deflection is DOF n-2.
MechanicalSystem build_beam(const BeamConfig& cfg, double epsilon = 0.0);

inline int beam_tip_dof(const BeamConfig& cfg) { return 2 * cfg.elements - 2; }

struct BeamCoefficients {
    Complex gamma1;
    Complex c10;
    Complex c11;
    Complex d20;
};

/// Closed-form third-order coefficients for the cubic tip spring.
BeamCoefficients analytic_ssm_coefficients(const BeamConfig& cfg, const SpectralDecomposition& dec, double Omega);

}  // namespace ssmfrc
