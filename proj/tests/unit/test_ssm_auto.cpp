#include <gtest/gtest.h>

#include <numbers>

#include "models.hpp"
#include "ssmfrc/cli.hpp"
#include "ssmfrc/errors.hpp"
#include "ssmfrc/ssm_auto.hpp"

using namespace ssmfrc;

TEST(AutonomousSSM, DuffingGammaMatchesHandCalculation) {
    const double m = 2.0, c = 0.04, k = 8.0, kappa = 0.7;
    const auto sys = testmodels::duffing(m, c, k, kappa);
    const FirstOrderSystem fo(sys);

    // structural path: y = (s1 + s2) / sqrt(m)
    const auto ds = decompose(fo);
    ASSERT_TRUE(ds.structural);
    const auto ss = build_autonomous(sys, ds, 1);
    const Complex dl = ds.lambda2() - ds.lambda1();
    EXPECT_LT(std::abs(ss.gammas[0] - 3.0 * kappa / (m * m * dl)), 1e-13);

    // general path: position entry of the eigenvector normalized to one
    const auto dg = decompose(fo, {.master_mode = 0, .force_general = true});
    const auto sg = build_autonomous(sys, dg, 1);
    EXPECT_LT(std::abs(sg.gammas[0] - 3.0 * kappa / (m * dl)), 1e-13);

    // the backbone b(rho) does not depend on the eigenvector scaling once rho is mapped to |y|
    const double ys = 0.1;
    const double rs = ys * std::sqrt(m) / 2.0, rg = ys / 2.0;
    EXPECT_NEAR(ss.gammas[0].imag() * rs * rs, sg.gammas[0].imag() * rg * rg, 1e-15);
    // classical Duffing backbone: omega(A) ~ omega0 + 3 kappa A^2 / (8 m omega0) for small damping
    const double w0 = std::sqrt(k / m);
    EXPECT_NEAR(sg.gammas[0].imag() * rg * rg, 3.0 * kappa * ys * ys / (8.0 * m * w0), 1e-4 * 3.0 * kappa * ys * ys / (8.0 * m * w0));
}

TEST(AutonomousSSM, ReducedDynamicsHaveOnlyNormalFormTerms) {
    const auto sys = testmodels::two_dof();
    const auto dec = decompose(FirstOrderSystem(sys));
    const auto ssm = build_autonomous(sys, dec, 2);
    EXPECT_EQ(ssm.order, 5);
    EXPECT_EQ(ssm.gammas.size(), 2u);
    for (const auto& k : ssm.R0[0].nonzero_index()) {
        if (k == MultiIndex{1, 0}) continue;
        EXPECT_EQ(k.k1, k.k2 + 1);
    }
    EXPECT_EQ(ssm.R0[0].coeff({1, 0}), dec.lambda1());
    EXPECT_EQ(ssm.R0[0].coeff({2, 1}), ssm.gammas[0]);
    EXPECT_EQ(ssm.R0[0].coeff({3, 2}), ssm.gammas[1]);
    // master rows: identity at linear order, nothing in the slots that went into R0
    for (int j = 0; j < 2; ++j) {
        const auto& w = ssm.W0[static_cast<std::size_t>(dec.master + j)];
        EXPECT_EQ(w.coeff(MultiIndex::unit(j)), Complex(1.0, 0.0));
        EXPECT_EQ(w.coeff(MultiIndex::unit(1 - j)), Complex{});
        for (int i = 1; i <= 2; ++i) {
            const MultiIndex slot = j == 0 ? MultiIndex{i + 1, i} : MultiIndex{i, i + 1};
            EXPECT_EQ(w.coeff(slot), Complex{});
        }
    }
}

TEST(AutonomousSSM, ResidualScalesWithTheTruncationOrder) {
    const auto sys = testmodels::two_dof();
    const auto dec = decompose(FirstOrderSystem(sys));
    for (int M = 1; M <= 3; ++M) {
        const auto ssm = build_autonomous(sys, dec, M);
        const auto slope = cli::autonomous_residual_slope(ssm, dec, sys, 1e-2, 1e-1);
        EXPECT_GE(slope.slope, 0.95 * (2 * M + 2)) << "M = " << M;
    }
}

TEST(AutonomousSSM, ConjugateSymmetry) {
    const auto sys = testmodels::two_dof();
    for (bool general : {false, true}) {
        auto s = sys;
        if (!general) s.C = 0.01 * s.M + 0.004 * s.K;
        const auto dec = decompose(FirstOrderSystem(s), {.master_mode = 0, .force_general = general});
        const auto ssm = build_autonomous(s, dec, 3);
        EXPECT_LT(conjugate_symmetry_defect(ssm, dec), 1e-12);
        // real physical state for conjugate inputs
        const Complex s1(0.03, -0.02);
        const Eigen::VectorXcd x = dec.T * ssm.evaluate(s1, std::conj(s1));
        EXPECT_LT(x.imag().norm(), 1e-14 * x.norm());
    }
}

TEST(AutonomousSSM, SecondModeAsMaster) {
    const auto sys = testmodels::two_dof();
    const auto dec = decompose(FirstOrderSystem(sys), {.master_mode = 1});
    const auto report = check_nonresonance(dec, 1);
    EXPECT_EQ(report.sigma_E, 1);  // the slow mode is an outer mode with slower decay
    const auto ssm = build_autonomous(sys, dec, 1);
    std::vector<Complex> samples{{1e-3, 0.0}, {0.0, 1e-3}};
    const double small = autonomous_invariance_residual(ssm, dec, sys, samples);
    for (auto& s : samples) s *= 10.0;
    const double large = autonomous_invariance_residual(ssm, dec, sys, samples);
    EXPECT_GT(std::log10(large / small), 3.5);
}

TEST(AutonomousSSM, InnerResonanceIsReported) {
    // lambda_3 = 3 lambda_1 exactly: M = I, K = diag(1, 9), C = diag(c, 3c)
    MechanicalSystem sys;
    sys.M = Eigen::Matrix2d::Identity();
    sys.K = Eigen::Vector2d{1.0, 9.0}.asDiagonal();
    sys.C = Eigen::Vector2d{0.02, 0.06}.asDiagonal();
    sys.forcing_shape = Eigen::Vector2d::UnitX();
    NonlinearForce g;
    g.dof = 1;
    g.polynomial.terms.push_back(testmodels::term(1.0, {{0, 3}}));
    sys.nonlinearity.push_back(g);
    const auto dec = decompose(FirstOrderSystem(sys));
    try {
        build_autonomous(sys, dec, 1);
        FAIL() << "expected ResonanceError";
    } catch (const ResonanceError& e) {
        EXPECT_TRUE(e.row == 2 || e.row == 3);
        EXPECT_EQ(e.k1 + e.k2, 3);
        EXPECT_TRUE(e.k1 == 0 || e.k2 == 0);
    }
}

TEST(AutonomousSSM, RejectsZeroOrder) {
    const auto sys = testmodels::two_dof();
    const auto dec = decompose(FirstOrderSystem(sys));
    EXPECT_THROW(build_autonomous(sys, dec, 0), std::invalid_argument);
}

TEST(AutonomousSSM, LinearSystemHasFlatManifold) {
    auto sys = testmodels::two_dof();
    sys.nonlinearity.clear();
    const auto dec = decompose(FirstOrderSystem(sys));
    const auto ssm = build_autonomous(sys, dec, 2);
    for (const auto& g : ssm.gammas) EXPECT_EQ(g, Complex{});
    for (int i = 0; i < ssm.dimension(); ++i)
        for (const auto& k : ssm.W0[static_cast<std::size_t>(i)].nonzero_index()) EXPECT_EQ(k.order(), 1);
}

TEST(AutonomousSSM, ValidatedRadiusBoundsTheResidual) {
    const auto sys = testmodels::two_dof();
    const auto dec = decompose(FirstOrderSystem(sys));
    const auto ssm = build_autonomous(sys, dec, 2);
    const double r = validated_radius(ssm, dec, sys);
    EXPECT_GT(r, 1e-3);
    EXPECT_LT(r, 1e3);
    std::vector<Complex> samples;
    for (int a = 0; a < 8; ++a) samples.push_back(std::polar(r, a * std::numbers::pi / 4.0));
    EXPECT_LE(autonomous_invariance_residual(ssm, dec, sys, samples), 1e-3 * std::abs(dec.lambda1()) * r * (1.0 + 1e-9));
}

TEST(AutonomousCache, RoundTripAndRejection) {
    const auto sys = testmodels::two_dof();
    const auto dec = decompose(FirstOrderSystem(sys));
    const auto ssm = build_autonomous(sys, dec, 2);
    const std::string text = serialize_autonomous(ssm, "abc123");

    AutonomousSSM back;
    ASSERT_TRUE(deserialize_autonomous(text, "abc123", sys, dec, back));
    EXPECT_EQ(back.M, ssm.M);
    EXPECT_EQ(back.master, ssm.master);
    ASSERT_EQ(back.gammas.size(), ssm.gammas.size());
    for (std::size_t i = 0; i < ssm.gammas.size(); ++i) EXPECT_EQ(back.gammas[i], ssm.gammas[i]);
    for (int i = 0; i < ssm.dimension(); ++i)
        for (int p = 0; p <= ssm.order; ++p)
            for (const auto& k : indices_of_order(p))
                EXPECT_EQ(back.W0[static_cast<std::size_t>(i)].coeff(k), ssm.W0[static_cast<std::size_t>(i)].coeff(k));
    const Complex s1(0.05, 0.01);
    EXPECT_EQ((back.evaluate(s1, std::conj(s1)) - ssm.evaluate(s1, std::conj(s1))).norm(), 0.0);
    EXPECT_EQ(back.jacobian.size(), ssm.jacobian.size());

    AutonomousSSM junk;
    EXPECT_FALSE(deserialize_autonomous(text, "other", sys, dec, junk));
    EXPECT_FALSE(deserialize_autonomous("{not json", "abc123", sys, dec, junk));
    EXPECT_FALSE(deserialize_autonomous("{\"format\": \"ssmfrc-autonomous\"}", "abc123", sys, dec, junk));
    std::string truncated = text.substr(0, text.size() / 2);
    EXPECT_FALSE(deserialize_autonomous(truncated, "abc123", sys, dec, junk));
}
