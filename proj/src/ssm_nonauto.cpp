#include "ssmfrc/ssm_nonauto.hpp"

#include <algorithm>
#include <sstream>

#include "ssmfrc/errors.hpp"

namespace ssmfrc {

namespace {

constexpr double kDivisorTolerance = 1e-12;
constexpr double kConjugateForcingTolerance = 1e-10;

const Complex kI{0.0, 1.0};

int variable_slot(const AutonomousSSM& ssm, int variable) {
    const auto it = std::lower_bound(ssm.variables.begin(), ssm.variables.end(), variable);
    if (it == ssm.variables.end() || *it != variable) throw std::logic_error("jacobian variable not tracked");
    return static_cast<int>(it - ssm.variables.begin());
}

int force_column(const AutonomousSSM& ssm, int dof) {
    const auto it = std::find(ssm.force_dofs.begin(), ssm.force_dofs.end(), dof);
    if (it == ssm.force_dofs.end()) throw std::logic_error("jacobian dof not tracked");
    return static_cast<int>(it - ssm.force_dofs.begin());
}

/// k-th coefficient of the physical series T_v . W1 (one harmonic).
Complex physical_coeff(const AutonomousSSM& ssm, const std::vector<MultiIndexPolynomial>& rows, int slot, MultiIndex k) {
    Complex v{0.0, 0.0};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Complex c = rows[i].coeff(k);
        if (c != Complex{0.0, 0.0}) v += ssm.T_rows(slot, static_cast<Eigen::Index>(i)) * c;
    }
    return v;
}

/// [sum_r B_{i,r} sum_v d_v g_r(X0) X1_v]_k for one harmonic.
Complex jacobian_term(int i, MultiIndex k, const AutonomousSSM& ssm, const std::vector<MultiIndexPolynomial>& rows) {
    Complex total{0.0, 0.0};
    for (const auto& js : ssm.jacobian) {
        const int slot = variable_slot(ssm, js.variable);
        const Complex b = ssm.B_cols(i, force_column(ssm, js.dof));
        if (b == Complex{0.0, 0.0}) continue;
        Complex sum{0.0, 0.0};
        for (const auto& m : js.series.nonzero_index()) {
            if (!m.dominated_by(k)) continue;
            sum += js.series.coeff(m) * physical_coeff(ssm, rows, slot, k - m);
        }
        total += b * sum;
    }
    return total;
}

}  // namespace

Eigen::VectorXcd NonAutonomousSSM::evaluate(Complex s1, Complex s2, double phi) const {
    const Complex ep = std::exp(kI * phi);
    const Complex em = std::conj(ep);
    Eigen::VectorXcd out(dimension());
    for (int i = 0; i < dimension(); ++i)
        out(i) = A[static_cast<std::size_t>(i)].evaluate(s1, s2) * ep + B[static_cast<std::size_t>(i)].evaluate(s1, s2) * em;
    return out;
}

Eigen::Vector2cd NonAutonomousSSM::reduced(Complex s1, Complex s2, double phi) const {
    const Complex ep = std::exp(kI * phi);
    const Complex em = std::conj(ep);
    return {c[0].evaluate(s1, s2) * ep + d[0].evaluate(s1, s2) * em, c[1].evaluate(s1, s2) * ep + d[1].evaluate(s1, s2) * em};
}

Eigen::VectorXcd modal_forcing(const SpectralDecomposition& dec, const Eigen::VectorXd& forcing_shape) {
    return dec.B_tilde * forcing_shape.cast<Complex>();
}

std::pair<Complex, Complex> assemble_P(int i, MultiIndex k, const AutonomousSSM& ssm, const NonAutonomousSSM& partial,
                                       const Eigen::VectorXcd& F_tilde) {
    const auto& w0 = ssm.W0[static_cast<std::size_t>(i)];
    const auto skip_linear = [](int j, MultiIndex m) { return m == MultiIndex::unit(j); };
    const auto skip_k = [k](int, MultiIndex m) { return m == k; };

    Complex alpha = derivative_product_coefficient(w0, partial.c[0], partial.c[1], k, skip_linear);
    Complex beta = derivative_product_coefficient(w0, partial.d[0], partial.d[1], k, skip_linear);
    alpha += derivative_product_coefficient(partial.A[static_cast<std::size_t>(i)], ssm.R0[0], ssm.R0[1], k, skip_k);
    beta += derivative_product_coefficient(partial.B[static_cast<std::size_t>(i)], ssm.R0[0], ssm.R0[1], k, skip_k);
    if (k.order() == 0) {
        alpha -= 0.5 * F_tilde(i);
        beta -= 0.5 * F_tilde(i);
    }
    alpha += jacobian_term(i, k, ssm, partial.A);
    beta += jacobian_term(i, k, ssm, partial.B);
    return {alpha, beta};
}

NonAutonomousSSM build_nonautonomous(const AutonomousSSM& ssm, const Eigen::VectorXcd& F_tilde, double Omega) {
    const int dim = ssm.dimension();
    if (F_tilde.size() != dim) throw std::invalid_argument("modal forcing has the wrong dimension");
    const int p1 = ssm.master;
    const int p2 = ssm.master + 1;
    const double fscale = std::max(F_tilde.cwiseAbs().maxCoeff(), 1e-300);
    if (std::abs(F_tilde(p2) - std::conj(F_tilde(p1))) > kConjugateForcingTolerance * fscale)
        throw ModelError("modal forcing of the master pair is not complex-conjugate; the forcing must be real");

    NonAutonomousSSM na;
    na.Omega = Omega;
    na.M = ssm.M;
    na.order = 2 * ssm.M;
    const int N = na.order;
    na.A.assign(static_cast<std::size_t>(dim), MultiIndexPolynomial(N));
    na.B.assign(static_cast<std::size_t>(dim), MultiIndexPolynomial(N));
    for (auto& p : na.c) p = MultiIndexPolynomial(N);
    for (auto& p : na.d) p = MultiIndexPolynomial(N);

    const Complex l1 = ssm.lambdas(p1);
    const Complex l2 = ssm.lambdas(p2);
    const double lscale = ssm.lambdas.cwiseAbs().maxCoeff() + std::abs(Omega);
    auto divide = [&](Complex num, Complex denom, int i, MultiIndex k, int sign) {
        if (std::abs(denom) <= kDivisorTolerance * (std::abs(ssm.lambdas(i)) + (k.order() + 1) * lscale)) {
            std::ostringstream msg;
            msg << "forced resonance in row " << i << " at (" << k.k1 << "," << k.k2 << ") for the "
                << (sign > 0 ? "e^{+i phi}" : "e^{-i phi}") << " harmonic (divisor " << std::abs(denom) << ")";
            throw ResonanceError(msg.str(), i, k.k1, k.k2, sign);
        }
        return num / denom;
    };

    for (int p = 0; p <= N; ++p) {
        for (const auto& k : indices_of_order(p)) {
            const Complex base = static_cast<double>(k.k1) * l1 + static_cast<double>(k.k2) * l2;
            for (int i = 0; i < dim; ++i) {
                const auto [alpha, beta] = assemble_P(i, k, ssm, na, F_tilde);
                const Complex da = ssm.lambdas(i) - base - kI * Omega;
                const Complex db = ssm.lambdas(i) - base + kI * Omega;
                Complex a{0.0, 0.0};
                Complex b{0.0, 0.0};
                bool a_removed = false;
                bool b_removed = false;
                if (i == p1) {
                    if (k.k1 == k.k2) {
                        na.c[0].set(k, -alpha);
                        a_removed = true;
                    }
                    if (k.k1 == k.k2 + 2) {
                        na.d[0].set(k, -beta);
                        b_removed = true;
                    }
                } else if (i == p2) {
                    if (k.k1 == k.k2) {
                        na.d[1].set(k, -beta);
                        b_removed = true;
                    }
                    if (k.k2 == k.k1 + 2) {
                        na.c[1].set(k, -alpha);
                        a_removed = true;
                    }
                }
                if (!a_removed) a = divide(alpha, da, i, k, +1);
                if (!b_removed) b = divide(beta, db, i, k, -1);
                na.A[static_cast<std::size_t>(i)].set(k, a);
                na.B[static_cast<std::size_t>(i)].set(k, b);
            }
        }
    }

    na.c10 = na.c[0].coeff({0, 0});
    for (int q = 1; q <= ssm.M; ++q) {
        na.c_ii.push_back(na.c[0].coeff({q, q}));
        na.d_iplus.push_back(na.d[0].coeff({q + 1, q - 1}));
    }
    return na;
}

double full_invariance_residual(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec,
                                const MechanicalSystem& sys, const Eigen::VectorXcd& F_tilde, double epsilon,
                                const std::vector<InvarianceSample>& samples) {
    double worst = 0.0;
    const int dim = ssm.dimension();
    for (const auto& smp : samples) {
        const Complex s1 = smp.s1;
        const Complex s2 = std::conj(s1);
        const Complex ep = std::exp(kI * smp.phi);
        const Complex em = std::conj(ep);
        const Eigen::VectorXcd w = ssm.evaluate(s1, s2) + epsilon * na.evaluate(s1, s2, smp.phi);
        const Eigen::Vector2cd r = ssm.reduced(s1, s2) + epsilon * na.reduced(s1, s2, smp.phi);
        Eigen::VectorXcd res = ssm.lambdas.cwiseProduct(w) + modal_nonlinearity(sys, dec, w) +
                               epsilon * std::cos(smp.phi) * F_tilde;
        for (int i = 0; i < dim; ++i) {
            const auto& w0 = ssm.W0[static_cast<std::size_t>(i)];
            const auto& A = na.A[static_cast<std::size_t>(i)];
            const auto& B = na.B[static_cast<std::size_t>(i)];
            for (int j = 0; j < 2; ++j) {
                const Complex dw = w0.evaluate_partial(j, s1, s2) +
                                   epsilon * (A.evaluate_partial(j, s1, s2) * ep + B.evaluate_partial(j, s1, s2) * em);
                res(i) -= dw * r(j);
            }
            res(i) -= na.Omega * epsilon * kI * (A.evaluate(s1, s2) * ep - B.evaluate(s1, s2) * em);
        }
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
    return worst;
}

double nonautonomous_conjugacy_defect(const NonAutonomousSSM& na, const SpectralDecomposition& dec) {
    double scale = 0.0;
    for (const auto* set : {&na.A, &na.B})
        for (const auto& w : *set)
            for (const auto& k : w.nonzero_index()) scale = std::max(scale, std::abs(w.coeff(k)));
    for (const auto* p : {&na.c[0], &na.c[1], &na.d[0], &na.d[1]})
        for (const auto& k : p->nonzero_index()) scale = std::max(scale, std::abs(p->coeff(k)));
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (int p = 0; p <= na.order; ++p)
        for (const auto& k : indices_of_order(p)) {
            const MultiIndex kr{k.k2, k.k1};
            for (int i = 0; i < na.dimension(); ++i) {
                const int ic = dec.conjugate_of(i);
                worst = std::max(worst, std::abs(na.B[static_cast<std::size_t>(ic)].coeff(k) -
                                                 std::conj(na.A[static_cast<std::size_t>(i)].coeff(kr))));
            }
            worst = std::max(worst, std::abs(na.d[1].coeff(k) - std::conj(na.c[0].coeff(kr))));
            worst = std::max(worst, std::abs(na.c[1].coeff(k) - std::conj(na.d[0].coeff(kr))));
        }
    return worst / scale;
}

}  // namespace ssmfrc
