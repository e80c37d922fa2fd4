#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "ssmfrc/reduced.hpp"
#include "ssmfrc/ssm_auto.hpp"
#include "ssmfrc/ssm_nonauto.hpp"

namespace ssmfrc {

/// One physical coordinate of x = T (W0(s) + eps W1(s, phi)) as series in s.
class CoordinateMap {
public:
    CoordinateMap(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec, int coord);

    /// x_coord at phase phi for s1 = rho e^{i(phi + psi)}, s2 = conj s1.
    Complex value(double rho, double psi, double phi, double epsilon) const;

private:
    MultiIndexPolynomial x0_;
    MultiIndexPolynomial x1a_;
    MultiIndexPolynomial x1b_;
};

struct OrbitSample {
    std::vector<double> t;
    std::vector<double> values;
    double amplitude = 0.0;  // max |x| over one period
    double max_imag = 0.0;   // largest discarded imaginary part
};

/// Samples one forcing period of the back-mapped orbit of coordinate `coord`, both ends included.
OrbitSample backmap_orbit(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec,
                          double rho, double psi, double epsilon, int coord, int samples_per_period);

/// Full real state x(t) of the back-mapped orbit.
Eigen::VectorXd backmap_state(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec,
                              double rho, double psi, double epsilon, double t);

/// Max |v| over a periodic sample sequence with parabolic refinement of the peak.
double periodic_peak(const std::vector<double>& values);

struct OracleOptions {
    int steps_per_period = 160;
    double rtol = 1e-8;
    double atol = 1e-12;
    long max_periods = 100000;
    long min_periods = 3;
};

struct OracleResult {
    bool converged = false;
    long periods = 0;
    double amplitude = 0.0;
    double period_defect = 0.0;  // final |x(t + T) - x(t)|_inf
    Eigen::VectorXd state;       // state at a period boundary (forcing phase 0)
    std::vector<double> samples; // coord over the final period
    std::string message;
};

/// Integrates the full system with a fixed-step 3-stage Radau IIA scheme aligned
/// to the forcing period until the period map settles.
OracleResult steady_state_oracle(const FirstOrderSystem& fo, double Omega, double epsilon, int coord,
                                 const Eigen::VectorXd& initial_condition, const OracleOptions& options = {});

/// |e_coord^T (K - Omega^2 M + i Omega C)^{-1} f| * epsilon: linear steady-state amplitude.
double linear_response_amplitude(const MechanicalSystem& sys, double Omega, double epsilon, int coord);

struct BranchComparison {
    double Omega = 0.0;
    double rho = 0.0;
    double psi = 0.0;
    double ssm_amplitude = 0.0;
    double oracle_amplitude = 0.0;
    double relative_error = 0.0;
    long periods = 0;
    bool converged = false;
    std::string message;
};

/// For every stable fixed point at each Omega, seeds the oracle with the back-mapped SSM
/// state (so each coexisting attractor is reached from its own basin) and compares amplitudes.
std::vector<BranchComparison> compare_stable_branches(const FirstOrderSystem& fo, const SpectralDecomposition& dec,
                                                      const AutonomousSSM& ssm, const Eigen::VectorXcd& F_tilde,
                                                      double epsilon, const std::vector<double>& omegas, int coord,
                                                      const RootSearchOptions& roots, const OracleOptions& options = {});

}  // namespace ssmfrc
