#pragma once

#include <Eigen/Dense>

#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssmfrc/ssm_auto.hpp"
#include "ssmfrc/ssm_nonauto.hpp"

namespace ssmfrc {

enum class Stability { StableNode, StableSpiral, Saddle, Unstable, Marginal };

const char* to_string(Stability s);
inline bool is_stable(Stability s) { return s == Stability::StableNode || s == Stability::StableSpiral; }

/// Values of the six scalar functions and their rho-derivatives.
struct PolarFunctions {
    double a = 0, b = 0, f1 = 0, f2 = 0, g1 = 0, g2 = 0;
    double da = 0, db = 0, df1 = 0, df2 = 0, dg1 = 0, dg2 = 0;
};

/// rho' = a + eps (f1 cos psi + f2 sin psi),
/// psi' = (b - Omega) + (eps / rho) (g1 cos psi - g2 sin psi).
struct PolarReducedModel {
    Complex lambda1;
    std::vector<Complex> gammas;
    Complex c10;
    std::vector<Complex> c_ii;
    std::vector<Complex> d_iplus;
    double epsilon = 0.0;
    double Omega = 0.0;

    static PolarReducedModel from_ssm(const AutonomousSSM& ssm, const NonAutonomousSSM& na, double epsilon);

    int M() const { return static_cast<int>(gammas.size()); }
    PolarFunctions functions(double rho) const;
    /// Same model with every forcing coefficient beyond c10 set to zero.
    PolarReducedModel zeroth_order() const;
};

/// (rho', psi'); rho must be positive.
Eigen::Vector2d evaluate_polar_rhs(const PolarReducedModel& model, double rho, double psi);
/// F(u) of the fixed-point problem (phase equation multiplied by rho).
Eigen::Vector2d zero_problem(const PolarReducedModel& model, double rho, double psi);
/// s1' from the complex form with s1 = rho e^{i(psi + Omega t)}, rotated back by e^{-i theta}.
Complex complex_reduced_rhs(const PolarReducedModel& model, double rho, double psi);

struct RootSearchOptions {
    double rho_min = 1e-8;
    double rho_max = 1.0;
    int log_points = 1500;
    int linear_points = 1500;
};

struct FixedPoint {
    double rho = 0.0;
    double psi = 0.0;  // in [0, 2 pi)
};

/// All fixed points with rho in [rho_min, rho_max], ascending in rho.
std::vector<FixedPoint> solve_fixed_points(const PolarReducedModel& model, const RootSearchOptions& options = {});

/// Eliminated scalar residual whose zeros are the fixed-point amplitudes.
double elimination_residual(const PolarReducedModel& model, double rho);

/// d(rho', psi') / d(rho, psi), analytic.
Eigen::Matrix2d polar_jacobian(const PolarReducedModel& model, double rho, double psi);
Stability classify_stability(const PolarReducedModel& model, double rho, double psi);

struct FrcPoint {
    double Omega = 0.0;
    double rho = 0.0;
    double psi = 0.0;
    Stability stability = Stability::StableNode;
    double amplitude = 0.0;
    int branch_id = -1;
    int sample = 0;
};

/// Change of the solution count between two neighbouring samples.
struct SaddleNodeEvent {
    double Omega_before = 0.0;
    double Omega_after = 0.0;
    int count_before = 0;
    int count_after = 0;
    std::vector<int> branches;  // branches that end (count drops) or start (count grows)
};

/// A sample whose solve threw (only collected with SweepOptions::keep_going).
struct SweepFailure {
    int sample = 0;
    double Omega = 0.0;
    std::string message;
    std::exception_ptr error;
};

struct FrcResult {
    std::vector<FrcPoint> points;  // sorted by sample, then rho
    std::vector<SaddleNodeEvent> events;
    std::vector<PolarReducedModel> models;  // one per sample
    std::vector<SweepFailure> failures;
};

using AmplitudeFunction = std::function<double(const NonAutonomousSSM&, const FixedPoint&)>;

struct SweepOptions {
    int workers = 1;
    RootSearchOptions roots;
    AmplitudeFunction amplitude;  // optional
    /// Record failing samples and stitch the rest instead of rethrowing the first error.
    bool keep_going = false;
};

/// Solves every Omega sample independently (in parallel), then stitches branches
/// by nearest neighbours in (log rho, psi).
FrcResult sweep_frc(const AutonomousSSM& ssm, const Eigen::VectorXcd& F_tilde, const std::vector<double>& omegas,
                    double epsilon, const SweepOptions& options);

/// Branch labelling and fold detection for per-sample solution sets. `omegas`, if given,
/// holds the frequency of each set (needed for events next to an empty set).
void stitch_branches(std::vector<std::vector<FrcPoint>>& per_sample, std::vector<SaddleNodeEvent>& events,
                     const std::vector<double>* omegas = nullptr);

struct EllipseDiagnostics {
    bool valid = false;
    std::string reason;
    Eigen::Vector2d v1 = Eigen::Vector2d::Zero();
    Eigen::Vector2d v2 = Eigen::Vector2d::Zero();
    Eigen::Vector2d v3 = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> samples;  // s(rho, Omega, psi) on a uniform psi grid
    std::optional<double> intersection_residual;
};

/// s(psi) = R(psi) v1 + v2 cos(psi) against v3; requires g1 != 0 and f2 != 0.
EllipseDiagnostics ellipse_diagnostics(const PolarReducedModel& model, double rho, int samples = 64,
                                       std::optional<double> psi = std::nullopt);
Eigen::Vector2d ellipse_point(const PolarReducedModel& model, double rho, double psi);

/// Zeroth-order form: R(psi) (Re c10, Im c10) against -(1/eps)(a, (b - Omega) rho).
std::vector<Eigen::Vector2d> zeroth_order_circle(const PolarReducedModel& model, int samples);
Eigen::Vector2d zeroth_order_target(const PolarReducedModel& model, double rho);

struct BackboneCrossing {
    double rho = 0.0;
    double Omega = 0.0;
    double psi = 0.0;
};
/// Crossing of the zeroth-order response curve with the backbone b(rho) = Omega: rho* solves
/// a(rho*) = -eps |c10|, Omega = b(rho*), and psi comes from the fixed-point equations there.
std::optional<BackboneCrossing> backbone_crossing(const PolarReducedModel& model, double rho_max);

}  // namespace ssmfrc
