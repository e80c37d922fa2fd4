#include "ssmfrc/ssm_auto.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ssmfrc/errors.hpp"

namespace ssmfrc {

namespace {

constexpr int kCacheVersion = 1;
constexpr double kDivisorTolerance = 1e-12;

std::vector<const MultiIndexPolynomial*> bind_variables(const std::vector<int>& variables,
                                                        const std::vector<MultiIndexPolynomial>& X, int dim) {
    std::vector<const MultiIndexPolynomial*> ptrs(static_cast<std::size_t>(dim), nullptr);
    for (std::size_t a = 0; a < variables.size(); ++a) ptrs[static_cast<std::size_t>(variables[a])] = &X[a];
    return ptrs;
}

std::vector<MultiIndexPolynomial> physical_series(const AutonomousSSM& ssm, int order) {
    std::vector<MultiIndexPolynomial> X;
    for (std::size_t a = 0; a < ssm.variables.size(); ++a) {
        MultiIndexPolynomial x(order);
        for (int p = 1; p <= order; ++p)
            for (const auto& k : indices_of_order(p)) {
                Complex v{0.0, 0.0};
                for (int i = 0; i < ssm.dimension(); ++i) v += ssm.T_rows(static_cast<Eigen::Index>(a), i) * ssm.W0[static_cast<std::size_t>(i)].coeff(k);
                x.set(k, v);
            }
        X.push_back(std::move(x));
    }
    return X;
}

/// Variables, projection rows and the Jacobian series; everything derived from the model.
void attach_model_data(AutonomousSSM& ssm, const MechanicalSystem& sys, const SpectralDecomposition& dec,
                       bool with_jacobian) {
    std::set<int> vars;
    ssm.force_dofs.clear();
    for (const auto& f : sys.nonlinearity) {
        ssm.force_dofs.push_back(f.dof);
        for (const auto& t : f.polynomial.terms)
            for (const auto& [v, e] : t.powers) vars.insert(v);
    }
    ssm.variables.assign(vars.begin(), vars.end());
    const int dim = dec.dimension();
    ssm.T_rows.resize(static_cast<Eigen::Index>(ssm.variables.size()), dim);
    for (std::size_t a = 0; a < ssm.variables.size(); ++a)
        ssm.T_rows.row(static_cast<Eigen::Index>(a)) = dec.T.row(ssm.variables[a]);
    ssm.B_cols.resize(dim, static_cast<Eigen::Index>(ssm.force_dofs.size()));
    for (std::size_t f = 0; f < ssm.force_dofs.size(); ++f)
        ssm.B_cols.col(static_cast<Eigen::Index>(f)) = dec.B_tilde.col(ssm.force_dofs[f]);

    ssm.jacobian.clear();
    if (!with_jacobian) return;
    const int jac_order = std::max(1, 2 * ssm.M);
    const auto X = physical_series(ssm, ssm.order);
    const auto ptrs = bind_variables(ssm.variables, X, dim);
    for (const auto& f : sys.nonlinearity) {
        std::set<int> fv;
        for (const auto& t : f.polynomial.terms)
            for (const auto& [v, e] : t.powers) fv.insert(v);
        for (int v : fv) {
            JacobianSeries js;
            js.dof = f.dof;
            js.variable = v;
            js.series = compose_series(f.polynomial.derivative(v), ptrs, jac_order);
            ssm.jacobian.push_back(std::move(js));
        }
    }
}

Eigen::VectorXcd evaluate_forces(const MechanicalSystem& sys, const Eigen::VectorXcd& x) {
    std::vector<Complex> xv(x.data(), x.data() + x.size());
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(sys.n());
    for (const auto& f : sys.nonlinearity) g(f.dof) += f.polynomial.evaluate(xv);
    return g;
}

nlohmann::json poly_to_json(const MultiIndexPolynomial& p) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& k : p.nonzero_index()) {
        const Complex c = p.coeff(k);
        out.push_back({k.k1, k.k2, c.real(), c.imag()});
    }
    return out;
}

MultiIndexPolynomial poly_from_json(const nlohmann::json& j, int order) {
    MultiIndexPolynomial p(order);
    for (const auto& e : j) p.set({e.at(0).get<int>(), e.at(1).get<int>()}, {e.at(2).get<double>(), e.at(3).get<double>()});
    return p;
}

}  // namespace

Eigen::VectorXcd AutonomousSSM::evaluate(Complex s1, Complex s2) const {
    Eigen::VectorXcd out(dimension());
    for (int i = 0; i < dimension(); ++i) out(i) = W0[static_cast<std::size_t>(i)].evaluate(s1, s2);
    return out;
}

Eigen::Vector2cd AutonomousSSM::reduced(Complex s1, Complex s2) const {
    return {R0[0].evaluate(s1, s2), R0[1].evaluate(s1, s2)};
}

AutonomousSSM build_autonomous(const MechanicalSystem& sys, const SpectralDecomposition& dec, int M) {
    if (M < 1) throw std::invalid_argument("expansion order parameter M must be at least 1");
    AutonomousSSM ssm;
    ssm.M = M;
    ssm.order = 2 * M + 1;
    ssm.master = dec.master;
    ssm.lambdas = dec.lambdas;
    const int N = ssm.order;
    const int dim = dec.dimension();
    const int p1 = dec.master;
    const int p2 = dec.master + 1;
    const Complex l1 = dec.lambda1();
    const Complex l2 = dec.lambda2();

    ssm.W0.assign(static_cast<std::size_t>(dim), MultiIndexPolynomial(N));
    ssm.W0[static_cast<std::size_t>(p1)].set({1, 0}, 1.0);
    ssm.W0[static_cast<std::size_t>(p2)].set({0, 1}, 1.0);
    ssm.R0[0] = MultiIndexPolynomial(N);
    ssm.R0[1] = MultiIndexPolynomial(N);
    ssm.R0[0].set({1, 0}, l1);
    ssm.R0[1].set({0, 1}, l2);
    ssm.gammas.assign(static_cast<std::size_t>(M), Complex{0.0, 0.0});

    attach_model_data(ssm, sys, dec, false);

    std::vector<MultiIndexPolynomial> X;
    for (std::size_t a = 0; a < ssm.variables.size(); ++a) {
        MultiIndexPolynomial x(N);
        x.set({1, 0}, ssm.T_rows(static_cast<Eigen::Index>(a), p1));
        x.set({0, 1}, ssm.T_rows(static_cast<Eigen::Index>(a), p2));
        X.push_back(std::move(x));
    }
    const auto ptrs = bind_variables(ssm.variables, X, dim);
    std::vector<SeriesComposer> composers;
    for (const auto& f : sys.nonlinearity) {
        composers.emplace_back(f.polynomial, N);
        composers.back().bind(ptrs);
    }

    const double lscale = dec.lambdas.cwiseAbs().maxCoeff();
    for (int p = 2; p <= N; ++p) {
        for (auto& c : composers) c.advance(p);
        for (const auto& k : indices_of_order(p)) {
            const auto skip = [k](int j, MultiIndex m) { return m == MultiIndex::unit(j) || m == k; };
            std::vector<Complex> gk(composers.size());
            for (std::size_t f = 0; f < composers.size(); ++f) gk[f] = composers[f].result().coeff(k);

            const bool slot1 = k.k1 == k.k2 + 1 && k.k2 >= 1;
            const bool slot2 = k.k2 == k.k1 + 1 && k.k1 >= 1;
            for (int i = 0; i < dim; ++i) {
                auto& w = ssm.W0[static_cast<std::size_t>(i)];
                Complex Q = derivative_product_coefficient(w, ssm.R0[0], ssm.R0[1], k, skip);
                for (std::size_t f = 0; f < gk.size(); ++f) Q += ssm.B_cols(i, static_cast<Eigen::Index>(f)) * gk[f];

                if (i == p1 && slot1) {
                    ssm.R0[0].set(k, -Q);
                    ssm.gammas[static_cast<std::size_t>(k.k2 - 1)] = -Q;
                    continue;
                }
                if (i == p2 && slot2) {
                    ssm.R0[1].set(k, -Q);
                    continue;
                }
                const Complex denom = dec.lambdas(i) - static_cast<double>(k.k1) * l1 - static_cast<double>(k.k2) * l2;
                if (std::abs(denom) <= kDivisorTolerance * (std::abs(dec.lambdas(i)) + p * lscale)) {
                    std::ostringstream msg;
                    msg << "inner resonance: lambda_" << i << " = " << k.k1 << " lambda_1 + " << k.k2
                        << " lambda_2 (divisor " << std::abs(denom) << ")";
                    throw ResonanceError(msg.str(), i, k.k1, k.k2);
                }
                w.set(k, Q / denom);
            }
            for (std::size_t a = 0; a < X.size(); ++a) {
                Complex v{0.0, 0.0};
                for (int i = 0; i < dim; ++i) v += ssm.T_rows(static_cast<Eigen::Index>(a), i) * ssm.W0[static_cast<std::size_t>(i)].coeff(k);
                X[a].set(k, v);
            }
        }
    }

    attach_model_data(ssm, sys, dec, true);
    return ssm;
}

Eigen::VectorXcd modal_nonlinearity(const MechanicalSystem& sys, const SpectralDecomposition& dec,
                                    const Eigen::VectorXcd& q) {
    if (sys.nonlinearity.empty()) return Eigen::VectorXcd::Zero(q.size());
    const Eigen::VectorXcd x = dec.T * q;
    return -dec.B_tilde * evaluate_forces(sys, x);
}

double autonomous_invariance_residual(const AutonomousSSM& ssm, const SpectralDecomposition& dec,
                                      const MechanicalSystem& sys, const std::vector<Complex>& samples) {
    double worst = 0.0;
    const int dim = ssm.dimension();
    for (const Complex s1 : samples) {
        const Complex s2 = std::conj(s1);
        const Eigen::VectorXcd w = ssm.evaluate(s1, s2);
        const Eigen::Vector2cd r = ssm.reduced(s1, s2);
        Eigen::VectorXcd res = ssm.lambdas.cwiseProduct(w) + modal_nonlinearity(sys, dec, w);
        for (int i = 0; i < dim; ++i) {
            const auto& wi = ssm.W0[static_cast<std::size_t>(i)];
            res(i) -= wi.evaluate_partial(0, s1, s2) * r(0) + wi.evaluate_partial(1, s1, s2) * r(1);
        }
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
    return worst;
}

double validated_radius(const AutonomousSSM& ssm, const SpectralDecomposition& dec, const MechanicalSystem& sys,
                        double tolerance) {
    const double l1 = std::abs(ssm.lambdas(ssm.master));
    double last = 0.0;
    for (int e = -48; e <= 24; ++e) {
        const double r = std::pow(10.0, e / 8.0);
        std::vector<Complex> samples;
        for (int i = 0; i < 8; ++i) samples.push_back(std::polar(r, 0.3 + 0.785 * i));
        const double res = autonomous_invariance_residual(ssm, dec, sys, samples);
        if (!std::isfinite(res) || res > tolerance * l1 * r) break;
        last = r;
    }
    return last;
}

double conjugate_symmetry_defect(const AutonomousSSM& ssm, const SpectralDecomposition& dec) {
    double scale = 0.0;
    for (const auto& w : ssm.W0)
        for (const auto& k : w.nonzero_index()) scale = std::max(scale, std::abs(w.coeff(k)));
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (int i = 0; i < ssm.dimension(); ++i) {
        const auto& wi = ssm.W0[static_cast<std::size_t>(i)];
        const auto& wc = ssm.W0[static_cast<std::size_t>(dec.conjugate_of(i))];
        for (int p = 0; p <= ssm.order; ++p)
            for (const auto& k : indices_of_order(p))
                worst = std::max(worst, std::abs(wc.coeff(k) - std::conj(wi.coeff({k.k2, k.k1}))));
    }
    return worst / scale;
}

std::string serialize_autonomous(const AutonomousSSM& ssm, const std::string& model_hash) {
    nlohmann::json j;
    j["format"] = "ssmfrc-autonomous";
    j["version"] = kCacheVersion;
    j["model_hash"] = model_hash;
    j["M"] = ssm.M;
    j["master"] = ssm.master;
    nlohmann::json lam = nlohmann::json::array();
    for (Eigen::Index i = 0; i < ssm.lambdas.size(); ++i) lam.push_back({ssm.lambdas(i).real(), ssm.lambdas(i).imag()});
    j["lambdas"] = lam;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& w : ssm.W0) rows.push_back(poly_to_json(w));
    j["W0"] = rows;
    j["R0"] = {poly_to_json(ssm.R0[0]), poly_to_json(ssm.R0[1])};
    nlohmann::json g = nlohmann::json::array();
    for (const auto& c : ssm.gammas) g.push_back({c.real(), c.imag()});
    j["gammas"] = g;
    return j.dump(1);
}

bool deserialize_autonomous(const std::string& text, const std::string& model_hash,
                            const MechanicalSystem& sys, const SpectralDecomposition& dec, AutonomousSSM& out) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    if (j.value("format", "") != "ssmfrc-autonomous" || j.value("version", 0) != kCacheVersion) return false;
    if (j.value("model_hash", "") != model_hash) return false;
    try {
        AutonomousSSM ssm;
        ssm.M = j.at("M").get<int>();
        ssm.order = 2 * ssm.M + 1;
        ssm.master = j.at("master").get<int>();
        const auto& lam = j.at("lambdas");
        if (static_cast<int>(lam.size()) != dec.dimension() || ssm.master != dec.master) return false;
        ssm.lambdas.resize(static_cast<Eigen::Index>(lam.size()));
        for (std::size_t i = 0; i < lam.size(); ++i)
            ssm.lambdas(static_cast<Eigen::Index>(i)) = {lam[i].at(0).get<double>(), lam[i].at(1).get<double>()};
        for (const auto& r : j.at("W0")) ssm.W0.push_back(poly_from_json(r, ssm.order));
        ssm.R0[0] = poly_from_json(j.at("R0").at(0), ssm.order);
        ssm.R0[1] = poly_from_json(j.at("R0").at(1), ssm.order);
        for (const auto& g : j.at("gammas")) ssm.gammas.emplace_back(g.at(0).get<double>(), g.at(1).get<double>());
        if (ssm.dimension() != dec.dimension() || static_cast<int>(ssm.gammas.size()) != ssm.M) return false;
        attach_model_data(ssm, sys, dec, true);
        out = std::move(ssm);
        return true;
    } catch (const nlohmann::json::exception&) {
        return false;
    }
}

}  // namespace ssmfrc
