#include <gtest/gtest.h>

#include <numbers>

#include "models.hpp"
#include "ssmfrc/backmap_oracle.hpp"
#include "ssmfrc/cli.hpp"
#include "ssmfrc/errors.hpp"
#include "ssmfrc/reduced.hpp"
#include "ssmfrc/ssm_nonauto.hpp"

using namespace ssmfrc;

namespace {

struct Built {
    MechanicalSystem sys;
    SpectralDecomposition dec;
    AutonomousSSM ssm;
    Eigen::VectorXcd F;
};

Built build(MechanicalSystem sys, int M, DecomposeOptions opts = {}) {
    Built b{sys, decompose(FirstOrderSystem(sys), opts), {}, {}};
    b.ssm = build_autonomous(b.sys, b.dec, M);
    b.F = modal_forcing(b.dec, b.sys.forcing_shape);
    return b;
}

}  // namespace

TEST(NonAutonomousSSM, LinearSystemReproducesTransferFunction) {
    auto sys = testmodels::two_dof();
    sys.nonlinearity.clear();
    const auto b = build(sys, 1);
    const double eps = 0.01;
    for (double Omega : {0.6, 0.95, 1.0, 1.05, 1.7, 2.5}) {
        const auto na = build_nonautonomous(b.ssm, b.F, Omega);
        const auto model = PolarReducedModel::from_ssm(b.ssm, na, eps);
        const auto roots = solve_fixed_points(model, {.rho_min = 1e-10, .rho_max = 10.0});
        ASSERT_EQ(roots.size(), 1u) << "Omega = " << Omega;
        for (int dof = 0; dof < 2; ++dof) {
            const auto orbit = backmap_orbit(b.ssm, na, b.dec, roots[0].rho, roots[0].psi, eps, dof, 256);
            const double expect = linear_response_amplitude(sys, Omega, eps, dof);
            EXPECT_NEAR(orbit.amplitude, expect, 1e-7 * expect) << "Omega = " << Omega << " dof " << dof;
            EXPECT_LT(orbit.max_imag, 1e-12 * expect);
        }
    }
}

TEST(NonAutonomousSSM, LeadingForcingCoefficient) {
    const auto b = build(testmodels::two_dof(), 2);
    const auto na = build_nonautonomous(b.ssm, b.F, 1.0);
    EXPECT_LT(std::abs(na.c10 - 0.5 * b.F(b.dec.master)), 1e-15);
    EXPECT_EQ(na.c_ii.size(), 2u);
    EXPECT_EQ(na.d_iplus.size(), 2u);
    EXPECT_EQ(na.order, 4);
    // the e^{-i phi} reduced forcing has no zeroth-order part in row 1
    EXPECT_EQ(na.d[0].coeff({0, 0}), Complex{});
    // only the removed slots appear in R1
    for (const auto& k : na.c[0].nonzero_index()) EXPECT_EQ(k.k1, k.k2);
    for (const auto& k : na.d[0].nonzero_index()) EXPECT_EQ(k.k1, k.k2 + 2);
}

TEST(NonAutonomousSSM, ResidualIsSecondOrderInEpsilon) {
    for (bool general : {false, true}) {
        auto sys = testmodels::two_dof();
        if (!general) sys.C = 0.01 * sys.M + 0.004 * sys.K;
        const auto b = build(sys, 2, {.master_mode = 0, .force_general = general});
        const auto m = cli::epsilon_residual_slope(b.ssm, b.dec, b.sys, 1.1, 1e-4, 1e-4, 1e-2);
        EXPECT_GE(m.slope, 1.8) << (general ? "general" : "structural");
    }
}

TEST(NonAutonomousSSM, ResidualDropsWithAmplitudeAtFixedEpsilon) {
    const auto b = build(testmodels::two_dof(), 2);
    const auto na = build_nonautonomous(b.ssm, b.F, 1.1);
    auto res = [&](double r, double eps) {
        std::vector<InvarianceSample> s;
        for (int a = 0; a < 6; ++a) s.push_back({std::polar(r, a * 1.1), a * 0.7});
        return full_invariance_residual(b.ssm, na, b.dec, b.sys, b.F, eps, s);
    };
    // eps = 0 reduces to the autonomous residual
    std::vector<Complex> pts;
    for (int a = 0; a < 6; ++a) pts.push_back(std::polar(0.05, a * 1.1));
    EXPECT_NEAR(res(0.05, 0.0), autonomous_invariance_residual(b.ssm, b.dec, b.sys, pts), 1e-15);
    EXPECT_LT(res(1e-3, 1e-6), res(1e-2, 1e-6));
}

TEST(NonAutonomousSSM, ConjugacyHolds) {
    const auto b = build(testmodels::two_dof(), 3);
    for (double Omega : {0.8, 1.0, 1.3}) {
        const auto na = build_nonautonomous(b.ssm, b.F, Omega);
        EXPECT_LT(nonautonomous_conjugacy_defect(na, b.dec), 1e-12);
        const Complex s1(0.02, 0.01);
        const Eigen::VectorXcd x = b.dec.T * na.evaluate(s1, std::conj(s1), 0.3);
        EXPECT_LT(x.imag().norm(), 1e-13 * x.norm());
    }
}

TEST(NonAutonomousSSM, RejectsNonConjugateForcing) {
    const auto b = build(testmodels::two_dof(), 1);
    Eigen::VectorXcd F = b.F;
    F(b.dec.master + 1) += Complex(0.0, 1e-3) * std::abs(F(b.dec.master));
    EXPECT_THROW(build_nonautonomous(b.ssm, F, 1.0), ModelError);
    EXPECT_THROW(build_nonautonomous(b.ssm, F.head(2), 1.0), std::invalid_argument);
}

TEST(NonAutonomousSSM, ForcedResonanceIsReported) {
    // equal decay rates: lambda_3 - lambda_1 - i Omega vanishes at Omega = Im lambda_3 - Im lambda_1
    MechanicalSystem sys;
    sys.M = Eigen::Matrix2d::Identity();
    sys.K = Eigen::Vector2d{1.0, 4.0}.asDiagonal();
    sys.C = 0.02 * Eigen::Matrix2d::Identity();
    sys.forcing_shape = Eigen::Vector2d{1.0, 0.5};
    NonlinearForce g;
    g.dof = 1;
    g.polynomial.terms.push_back(testmodels::term(1.0, {{0, 2}}));
    sys.nonlinearity.push_back(g);
    const auto b = build(sys, 1);
    const double Omega = b.dec.lambdas(2).imag() - b.dec.lambda1().imag();
    try {
        build_nonautonomous(b.ssm, b.F, Omega);
        FAIL() << "expected ResonanceError";
    } catch (const ResonanceError& e) {
        EXPECT_EQ(e.row, 2);
        EXPECT_EQ(e.k1, 1);
        EXPECT_EQ(e.k2, 0);
        EXPECT_EQ(e.sign, 1);
    }
    EXPECT_NO_THROW(build_nonautonomous(b.ssm, b.F, Omega * 1.01));
}

TEST(NonAutonomousSSM, AssembledRightHandSideAtOrderZeroIsMinusHalfTheForcing) {
    const auto b = build(testmodels::two_dof(), 1);
    NonAutonomousSSM empty;
    empty.A.assign(4, MultiIndexPolynomial(2));
    empty.B.assign(4, MultiIndexPolynomial(2));
    for (int i = 0; i < 4; ++i) {
        const auto [alpha, beta] = assemble_P(i, {0, 0}, b.ssm, empty, b.F);
        EXPECT_LT(std::abs(alpha + 0.5 * b.F(i)), 1e-15);
        EXPECT_LT(std::abs(beta + 0.5 * b.F(i)), 1e-15);
    }
}
