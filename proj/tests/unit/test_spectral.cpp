#include <gtest/gtest.h>

#include "models.hpp"
#include "ssmfrc/errors.hpp"
#include "ssmfrc/spectral.hpp"

using namespace ssmfrc;

namespace {

Complex quadratic_det(const MechanicalSystem& sys, Complex l) {
    const Eigen::MatrixXcd Q = (l * l) * sys.M.cast<Complex>() + l * sys.C.cast<Complex>() + sys.K.cast<Complex>();
    return Q.determinant();
}

void expect_valid_decomposition(const SpectralDecomposition& dec, const FirstOrderSystem& fo) {
    const int dim = dec.dimension();
    const Eigen::MatrixXcd A = fo.A().cast<Complex>();
    EXPECT_LT((A * dec.T - dec.T * dec.lambdas.asDiagonal()).norm(), 1e-10 * A.norm() * dec.T.norm());
    EXPECT_LT((dec.T * dec.T_inv - Eigen::MatrixXcd::Identity(dim, dim)).norm(), 1e-10);
    for (int i = 1; i < dim; ++i) EXPECT_LE(dec.lambdas(i).real(), dec.lambdas(i - 1).real() + 1e-12);
    for (int i = 0; i < dim; ++i) {
        const int c = dec.conjugate_of(i);
        EXPECT_EQ(dec.lambdas(c), std::conj(dec.lambdas(i)));
        EXPECT_LT((dec.T.col(c) - dec.T.col(i).conjugate()).norm(), 1e-12 * dec.T.col(i).norm());
        EXPECT_LT((dec.T_inv.row(c) - dec.T_inv.row(i).conjugate()).norm(), 1e-12 * dec.T_inv.row(i).norm());
    }
    EXPECT_GT(dec.lambda1().imag(), 0.0);
    EXPECT_EQ(dec.lambda2(), std::conj(dec.lambda1()));
    const int n = dim / 2;
    const Eigen::MatrixXd Minv = fo.solve_mass(Eigen::MatrixXd::Identity(n, n));
    EXPECT_LT((dec.B_tilde - dec.T_inv.rightCols(n) * Minv.cast<Complex>()).norm(), 1e-12 * dec.B_tilde.norm());
}

}  // namespace

TEST(Spectral, GeneralPathMatchesQuadraticEigenproblem) {
    const auto sys = testmodels::two_dof();
    ASSERT_FALSE(detect_rayleigh_damping(sys).has_value());
    const FirstOrderSystem fo(sys);
    const auto dec = decompose(fo);
    EXPECT_FALSE(dec.structural);
    expect_valid_decomposition(dec, fo);
    for (int i = 0; i < dec.dimension(); ++i) {
        const Complex l = dec.lambdas(i);
        // relative to the size of the leading term of the determinant
        EXPECT_LT(std::abs(quadratic_det(sys, l)), 1e-10 * std::pow(std::abs(l), 4) * sys.M.determinant());
    }
}

TEST(Spectral, StructuralPathAgreesWithGeneralPath) {
    auto sys = testmodels::two_dof();
    sys.C = 0.01 * sys.M + 0.004 * sys.K;
    const auto ab = detect_rayleigh_damping(sys);
    ASSERT_TRUE(ab.has_value());
    EXPECT_NEAR(ab->first, 0.01, 1e-12);
    EXPECT_NEAR(ab->second, 0.004, 1e-12);
    const FirstOrderSystem fo(sys);
    const auto s = decompose(fo);
    const auto g = decompose(fo, {.master_mode = 0, .force_general = true});
    EXPECT_TRUE(s.structural);
    EXPECT_FALSE(g.structural);
    expect_valid_decomposition(s, fo);
    expect_valid_decomposition(g, fo);
    for (int i = 0; i < s.dimension(); ++i) EXPECT_LT(std::abs(s.lambdas(i) - g.lambdas(i)), 1e-12);
    ASSERT_EQ(s.undamped_frequencies.size(), 2);
    // undamped frequencies of (K, M)
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(sys.K, sys.M);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(s.undamped_frequencies(i), std::sqrt(ges.eigenvalues()(i)), 1e-12);
}

TEST(Spectral, MasterModeSelection) {
    const FirstOrderSystem fo(testmodels::two_dof());
    const auto d0 = decompose(fo, {.master_mode = 0});
    const auto d1 = decompose(fo, {.master_mode = 1});
    EXPECT_EQ(d0.master, 0);
    EXPECT_EQ(d1.master, 2);
    EXPECT_GT(d0.lambda1().real(), d1.lambda1().real());
    EXPECT_THROW(decompose(fo, {.master_mode = 2}), SpectralError);
}

TEST(Spectral, SpectralQuotient) {
    Eigen::VectorXcd l(4);
    l << Complex(-0.1, 1), Complex(-0.1, -1), Complex(-0.35, 3), Complex(-0.35, -3);
    EXPECT_EQ(spectral_quotient(l, 0), 3);
    l(2) = l(3) = Complex(-0.0999, 0.0);
    EXPECT_EQ(spectral_quotient(l, 0), 1);
}

TEST(Spectral, RejectsUnstableAndUndampedSystems) {
    auto sys = testmodels::two_dof();
    sys.C(1, 1) = -0.5;
    EXPECT_THROW(decompose(FirstOrderSystem(sys)), SpectralError);

    auto undamped = testmodels::two_dof();
    undamped.C.setZero();
    EXPECT_THROW(decompose(FirstOrderSystem(undamped)), SpectralError);

    auto rigid = testmodels::two_dof();
    rigid.K = Eigen::Matrix2d{{1.0, -1.0}, {-1.0, 1.0}};
    EXPECT_THROW(decompose(FirstOrderSystem(rigid)), SpectralError);
}

TEST(Spectral, RejectsInvalidModels) {
    auto sys = testmodels::two_dof();
    sys.K(0, 1) = 0.0;
    EXPECT_THROW(sys.validate(), ModelError);
    auto linear = testmodels::two_dof();
    linear.nonlinearity[0].polynomial.terms.push_back(testmodels::term(1.0, {{1, 1}}));
    EXPECT_THROW(linear.validate(), ModelError);
    auto out = testmodels::two_dof();
    out.nonlinearity[0].polynomial.terms.push_back(testmodels::term(1.0, {{4, 2}}));
    EXPECT_THROW(out.validate(), ModelError);
    auto mass = testmodels::two_dof();
    mass.M(1, 1) = -1.0;
    EXPECT_THROW(mass.validate(), ModelError);
}

TEST(Nonresonance, PassesWithMargin) {
    MechanicalSystem sys = testmodels::two_dof();
    sys.M = Eigen::Matrix2d::Identity();
    sys.K = Eigen::Vector2d{1.0, 9.0}.asDiagonal();
    sys.C = Eigen::Vector2d{0.02, 0.046}.asDiagonal();
    const auto dec = decompose(FirstOrderSystem(sys));
    const auto report = check_nonresonance(dec, 1);
    EXPECT_TRUE(report.passed);
    EXPECT_EQ(report.sigma_E, 2);
    EXPECT_NEAR(report.min_margin, 0.3, 1e-9);
    EXPECT_NO_THROW(require_nonresonant(report));
}

TEST(Nonresonance, DetectsOuterResonance) {
    MechanicalSystem sys = testmodels::two_dof();
    sys.M = Eigen::Matrix2d::Identity();
    sys.K = Eigen::Vector2d{1.0, 9.0}.asDiagonal();
    sys.C = Eigen::Vector2d{0.02, 0.06 * (1.0 + 1e-12)}.asDiagonal();
    const auto dec = decompose(FirstOrderSystem(sys));
    const auto report = check_nonresonance(dec, 1);
    EXPECT_FALSE(report.passed);
    EXPECT_EQ(report.sigma_E, 3);
    EXPECT_EQ(report.offending_a + report.offending_b, 3);
    EXPECT_TRUE(report.offending_mode == 2 || report.offending_mode == 3);
    try {
        require_nonresonant(report);
        FAIL() << "expected ResonanceError";
    } catch (const ResonanceError& e) {
        EXPECT_EQ(e.row, report.offending_mode);
        EXPECT_EQ(e.k1 + e.k2, 3);
    }
}

TEST(Nonresonance, MarginUsesAllOuterModes) {
    // decay ratios 2.02 and 4.99
    MechanicalSystem sys;
    sys.M = Eigen::Matrix3d::Identity();
    sys.K = Eigen::Vector3d{1.0, 4.0, 25.0}.asDiagonal();
    sys.C = Eigen::Vector3d{0.01, 0.0202, 0.0499}.asDiagonal();
    sys.forcing_shape = Eigen::Vector3d::UnitX();
    const auto dec = decompose(FirstOrderSystem(sys));
    const auto report = check_nonresonance(dec, 2);
    EXPECT_EQ(report.sigma_E, 4);
    EXPECT_NEAR(report.min_margin, 0.02, 1e-9);  // ratio 4.99 rounds to 5 > sigma_E and is skipped
    EXPECT_TRUE(report.passed);
}
