#include "ssmfrc/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ssmfrc/errors.hpp"

namespace ssmfrc {

namespace {

constexpr double kRayleighTolerance = 1e-12;
constexpr double kPairTolerance = 1e-9;
constexpr double kMinReciprocalCondition = 1e-10;
constexpr double kResonanceMargin = 1e-10;
constexpr double kZeroEigenvalue = 1e-13;

/// A conjugate pair (two columns) or a single real eigenvalue.
struct ModeUnit {
    Complex lambda;                 // Im >= 0 representative
    Eigen::VectorXcd vector;        // eigenvector for `lambda`
    bool pair = false;
    Eigen::RowVectorXcd inv_row;    // structural path: row of T^{-1} for `lambda`
    Eigen::RowVectorXcd inv_row_conj;
};

bool unit_before(const ModeUnit& a, const ModeUnit& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
    return std::abs(a.lambda.imag()) < std::abs(b.lambda.imag());
}

/// Mass-normalized modes oriented so that each has a non-positive projection on
/// the forcing shape; modes orthogonal to the forcing get their largest entry positive.
void orient_modes(Eigen::MatrixXd& E, const Eigen::VectorXd& f) {
    const double fnorm = f.norm();
    for (Eigen::Index i = 0; i < E.cols(); ++i) {
        const double proj = f.dot(E.col(i));
        double sign;
        if (fnorm > 0.0 && std::abs(proj) > 1e-12 * fnorm * E.col(i).norm()) {
            sign = proj > 0.0 ? -1.0 : 1.0;
        } else {
            Eigen::Index imax = 0;
            E.col(i).cwiseAbs().maxCoeff(&imax);
            sign = E(imax, i) < 0.0 ? -1.0 : 1.0;
        }
        E.col(i) *= sign;
    }
}

SpectralDecomposition assemble(std::vector<ModeUnit> units, int dim, int master_mode) {
    std::stable_sort(units.begin(), units.end(), unit_before);

    SpectralDecomposition dec;
    dec.lambdas.resize(dim);
    dec.T.resize(dim, dim);
    const bool have_rows = units.front().inv_row.size() > 0;
    if (have_rows) dec.T_inv.resize(dim, dim);

    int col = 0;
    int pair_count = 0;
    dec.master = -1;
    for (const auto& u : units) {
        dec.lambdas(col) = u.lambda;
        dec.T.col(col) = u.vector;
        if (have_rows) dec.T_inv.row(col) = u.inv_row;
        if (u.pair) {
            if (pair_count == master_mode) dec.master = col;
            ++pair_count;
            dec.lambdas(col + 1) = std::conj(u.lambda);
            dec.T.col(col + 1) = u.vector.conjugate();
            if (have_rows) dec.T_inv.row(col + 1) = u.inv_row_conj;
            col += 2;
        } else {
            col += 1;
        }
    }
    if (dec.master < 0) {
        std::ostringstream msg;
        msg << "master mode " << master_mode << " requested but the spectrum has only " << pair_count
            << " complex-conjugate pairs";
        throw SpectralError(msg.str());
    }
    return dec;
}

void finish(SpectralDecomposition& dec, const FirstOrderSystem& fo) {
    const int dim = dec.dimension();
    const int n = dim / 2;

    const double lmax = dec.lambdas.cwiseAbs().maxCoeff();
    for (int i = 0; i < dim; ++i)
        if (!(dec.lambdas(i).real() < -kZeroEigenvalue * lmax)) {
            std::ostringstream msg;
            msg << "eigenvalue " << dec.lambdas(i) << " has non-negative real part; the origin must be asymptotically stable";
            throw SpectralError(msg.str());
        }

    Eigen::MatrixXcd Tn = dec.T;
    for (int i = 0; i < dim; ++i) Tn.col(i) /= Tn.col(i).norm();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Tn);
    const double rcond = lu.rcond();
    if (!(rcond >= kMinReciprocalCondition)) {
        std::ostringstream msg;
        msg << "eigenvector matrix is (nearly) singular, reciprocal condition " << rcond
            << "; the linear part must be semisimple";
        throw SpectralError(msg.str());
    }
    if (dec.T_inv.size() == 0) dec.T_inv = dec.T.partialPivLu().inverse();

    const Eigen::MatrixXcd Ac = fo.A().cast<Complex>();
    const double residual = (Ac * dec.T - dec.T * dec.lambdas.asDiagonal()).cwiseAbs().colwise().sum().maxCoeff();
    const double scale = fo.A().cwiseAbs().colwise().sum().maxCoeff() *
                         std::max(1.0, dec.T.cwiseAbs().colwise().sum().maxCoeff());
    if (residual > 1e-8 * scale) throw SpectralError("diagonalization residual exceeds tolerance");

    const Eigen::MatrixXd Minv = fo.solve_mass(Eigen::MatrixXd::Identity(n, n));
    dec.B_tilde = dec.T_inv.rightCols(n) * Minv.cast<Complex>();
    dec.sigma_E = spectral_quotient(dec.lambdas, dec.master);
}

SpectralDecomposition structural_path(const FirstOrderSystem& fo, double alpha, double beta, int master_mode) {
    const auto& sys = fo.mechanical();
    const int n = sys.n();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(sys.K, sys.M);
    if (ges.info() != Eigen::Success) throw SpectralError("generalized eigensolver failed on (K, M)");
    Eigen::MatrixXd E = ges.eigenvectors();
    const Eigen::VectorXd w2 = ges.eigenvalues();
    orient_modes(E, sys.forcing_shape);
    const Eigen::MatrixXd Einv = E.transpose() * sys.M;
    const Eigen::VectorXd modal_damping = (E.transpose() * sys.C * E).diagonal();

    std::vector<ModeUnit> units;
    for (int i = 0; i < n; ++i) {
        if (w2(i) <= 0.0) throw SpectralError("stiffness matrix is not positive definite (rigid-body or unstable mode)");
        const double damp = modal_damping(i);
        const double disc = 0.25 * damp * damp - w2(i);
        const Eigen::VectorXcd e = E.col(i).cast<Complex>();
        const Eigen::RowVectorXcd einv = Einv.row(i).cast<Complex>();
        auto make_rows = [&](Complex la, Complex lb, ModeUnit& u, bool first) {
            const Complex d = lb - la;  // (Lambda_2 - Lambda_1) entry
            Eigen::RowVectorXcd row(2 * n);
            if (first) {
                row.head(n) = (lb / d) * einv;
                row.tail(n) = (-1.0 / d) * einv;
                u.inv_row = row;
            } else {
                row.head(n) = (-la / d) * einv;
                row.tail(n) = (1.0 / d) * einv;
                u.inv_row_conj = row;
            }
        };
        if (disc < 0.0) {
            const Complex la{-0.5 * damp, std::sqrt(-disc)};
            const Complex lb = std::conj(la);
            ModeUnit u;
            u.lambda = la;
            u.pair = true;
            u.vector.resize(2 * n);
            u.vector << e, la * e;
            make_rows(la, lb, u, true);
            make_rows(la, lb, u, false);
            units.push_back(std::move(u));
        } else if (disc > 0.0) {
            const double root = std::sqrt(disc);
            const Complex la{-0.5 * damp + root, 0.0};
            const Complex lb{-0.5 * damp - root, 0.0};
            ModeUnit ua, ub;
            ua.lambda = la;
            ua.vector.resize(2 * n);
            ua.vector << e, la * e;
            ub.lambda = lb;
            ub.vector.resize(2 * n);
            ub.vector << e, lb * e;
            ModeUnit tmp;
            make_rows(la, lb, tmp, true);
            make_rows(la, lb, tmp, false);
            ua.inv_row = tmp.inv_row;
            ub.inv_row = tmp.inv_row_conj;
            units.push_back(std::move(ua));
            units.push_back(std::move(ub));
        } else {
            throw SpectralError("critically damped mode: the linear part is defective");
        }
    }

    SpectralDecomposition dec = assemble(std::move(units), 2 * n, master_mode);
    dec.structural = true;
    dec.rayleigh_alpha = alpha;
    dec.rayleigh_beta = beta;
    dec.undamped_frequencies = w2.cwiseSqrt();
    finish(dec, fo);
    return dec;
}

SpectralDecomposition general_path(const FirstOrderSystem& fo, int master_mode) {
    const int dim = fo.dimension();
    const int n = dim / 2;
    Eigen::EigenSolver<Eigen::MatrixXd> es(fo.A());
    if (es.info() != Eigen::Success) throw SpectralError("eigensolver failed on the first-order system matrix");
    const Eigen::VectorXcd vals = es.eigenvalues();
    const Eigen::MatrixXcd vecs = es.eigenvectors();

    std::vector<bool> used(static_cast<std::size_t>(dim), false);
    std::vector<ModeUnit> units;
    for (int i = 0; i < dim; ++i) {
        if (used[static_cast<std::size_t>(i)]) continue;
        const Complex li = vals(i);
        used[static_cast<std::size_t>(i)] = true;
        const double tol = kPairTolerance * (1.0 + std::abs(li));
        ModeUnit u;
        if (std::abs(li.imag()) <= tol) {
            u.lambda = {li.real(), 0.0};
            u.vector = vecs.col(i);
        } else {
            int partner = -1;
            for (int j = i + 1; j < dim; ++j)
                if (!used[static_cast<std::size_t>(j)] && std::abs(vals(j) - std::conj(li)) <= tol) {
                    partner = j;
                    break;
                }
            if (partner < 0) throw SpectralError("complex eigenvalue without a conjugate partner");
            used[static_cast<std::size_t>(partner)] = true;
            const int rep = li.imag() > 0.0 ? i : partner;
            u.lambda = vals(rep);
            u.vector = vecs.col(rep);
            u.pair = true;
        }
        // Position block to unit norm, largest position entry real positive.
        Eigen::Index imax = 0;
        u.vector.head(n).cwiseAbs().maxCoeff(&imax);
        const Complex pivot = u.vector(imax);
        const double pnorm = u.vector.head(n).norm();
        if (pnorm == 0.0 || pivot == Complex{0.0, 0.0}) throw SpectralError("eigenvector with vanishing position block");
        u.vector *= (std::abs(pivot) / pivot) / pnorm;
        if (!u.pair) u.vector = u.vector.real().cast<Complex>();
        units.push_back(std::move(u));
    }

    SpectralDecomposition dec = assemble(std::move(units), dim, master_mode);
    finish(dec, fo);
    return dec;
}

}  // namespace

int SpectralDecomposition::conjugate_of(int i) const {
    const Complex li = lambdas(i);
    if (li.imag() == 0.0) return i;
    if (li.imag() > 0.0 && i + 1 < dimension() && lambdas(i + 1) == std::conj(li)) return i + 1;
    if (li.imag() < 0.0 && i > 0 && lambdas(i - 1) == std::conj(li)) return i - 1;
    return i;
}

std::optional<std::pair<double, double>> detect_rayleigh_damping(const MechanicalSystem& sys) {
    const double cnorm = sys.C.norm();
    if (cnorm == 0.0) return std::make_pair(0.0, 0.0);
    const Eigen::Index nn = sys.M.size();
    Eigen::MatrixXd basis(nn, 2);
    basis.col(0) = sys.M.reshaped();
    basis.col(1) = sys.K.reshaped();
    const Eigen::Vector2d col_scale(basis.col(0).norm(), basis.col(1).norm());
    if (col_scale(0) == 0.0 || col_scale(1) == 0.0) return std::nullopt;
    basis.col(0) /= col_scale(0);
    basis.col(1) /= col_scale(1);
    const Eigen::Vector2d ab = basis.colPivHouseholderQr().solve(sys.C.reshaped()).cwiseQuotient(col_scale);
    if (!ab.allFinite()) return std::nullopt;
    const double residual = (sys.C - ab(0) * sys.M - ab(1) * sys.K).norm() / cnorm;
    if (residual > kRayleighTolerance) return std::nullopt;
    return std::make_pair(ab(0), ab(1));
}

SpectralDecomposition decompose(const FirstOrderSystem& first_order, const DecomposeOptions& options) {
    if (!options.force_general)
        if (auto ab = detect_rayleigh_damping(first_order.mechanical()))
            return structural_path(first_order, ab->first, ab->second, options.master_mode);
    return general_path(first_order, options.master_mode);
}

std::int64_t spectral_quotient(const Eigen::VectorXcd& lambdas, int master) {
    const double re1 = lambdas(master).real();
    if (!(re1 < 0.0)) throw SpectralError("master eigenvalue must have negative real part");
    const double ratio = lambdas.real().minCoeff() / re1;
    const double capped = std::min(ratio, 4.0e18);
    return static_cast<std::int64_t>(std::floor(capped));
}

NonresonanceReport check_nonresonance(const SpectralDecomposition& dec, int order_M) {
    NonresonanceReport report;
    const double re1 = dec.lambda1().real();
    for (int i = 0; i < dec.dimension(); ++i)
        if (!(dec.lambdas(i).real() < 0.0)) {
            std::ostringstream msg;
            msg << "eigenvalue " << dec.lambdas(i) << " violates the stability assumption Re(lambda) < 0";
            throw SpectralError(msg.str());
        }
    report.sigma_E = spectral_quotient(dec.lambdas, dec.master);
    report.small_damping_ratio = std::abs(re1) * 2.0 * order_M;
    report.min_margin = std::numeric_limits<double>::infinity();

    for (int l = 0; l < dec.dimension(); ++l) {
        if (l == dec.master || l == dec.master + 1) continue;
        const double rel = dec.lambdas(l).real();
        const double ratio = rel / re1;
        const double p = std::round(ratio);
        if (p < 2.0 || p > static_cast<double>(report.sigma_E)) continue;
        const double margin = std::abs(p * re1 - rel) / std::abs(re1);
        if (margin < report.min_margin) {
            report.min_margin = margin;
            const auto pi = static_cast<int>(std::min(p, 2.0e9));
            report.offending_a = (pi + 1) / 2;
            report.offending_b = pi / 2;
            report.offending_mode = l;
        }
    }
    report.passed = report.min_margin >= kResonanceMargin;
    return report;
}

void require_nonresonant(const NonresonanceReport& report) {
    if (report.passed) return;
    std::ostringstream msg;
    msg << "outer resonance " << report.offending_a << " Re(lambda_1) + " << report.offending_b
        << " Re(lambda_2) = Re(lambda_" << report.offending_mode << ") (relative margin " << report.min_margin << ")";
    throw ResonanceError(msg.str(), report.offending_mode, report.offending_a, report.offending_b);
}

}  // namespace ssmfrc
