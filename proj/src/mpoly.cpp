#include "ssmfrc/mpoly.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace ssmfrc {

std::vector<MultiIndex> indices_of_order(int p) {
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(p + 1));
    for (int k2 = 0; k2 <= p; ++k2) out.push_back({p - k2, k2});
    return out;
}

MultiIndexPolynomial::MultiIndexPolynomial(int truncation_order)
    : order_(truncation_order), dense_(term_count(truncation_order), Complex{0.0, 0.0}) {
    if (truncation_order < 0) throw std::invalid_argument("negative truncation order");
}

Complex MultiIndexPolynomial::coeff(MultiIndex k) const {
    if (!k.valid() || k.order() > order_) return {0.0, 0.0};
    return dense_[graded_index(k)];
}

void MultiIndexPolynomial::set(MultiIndex k, Complex value) {
    if (!k.valid() || k.order() > order_) {
        std::ostringstream msg;
        msg << "multi-index (" << k.k1 << "," << k.k2 << ") outside truncation order " << order_;
        throw std::out_of_range(msg.str());
    }
    const bool keep = std::abs(value) > kDropTolerance;
    dense_[graded_index(k)] = keep ? value : Complex{0.0, 0.0};
    auto it = std::lower_bound(nonzero_.begin(), nonzero_.end(), k, graded_less);
    const bool present = it != nonzero_.end() && *it == k;
    if (keep && !present) nonzero_.insert(it, k);
    if (!keep && present) nonzero_.erase(it);
}

Complex MultiIndexPolynomial::evaluate(Complex s1, Complex s2) const {
    Complex sum{0.0, 0.0};
    for (const auto& m : nonzero_) sum += dense_[graded_index(m)] * std::pow(s1, m.k1) * std::pow(s2, m.k2);
    return sum;
}

Complex MultiIndexPolynomial::evaluate_partial(int j, Complex s1, Complex s2) const {
    Complex sum{0.0, 0.0};
    for (const auto& m : nonzero_) {
        const int mj = m[j];
        if (mj == 0) continue;
        const Complex c = dense_[graded_index(m)] * static_cast<double>(mj);
        if (j == 0)
            sum += c * std::pow(s1, m.k1 - 1) * std::pow(s2, m.k2);
        else
            sum += c * std::pow(s1, m.k1) * std::pow(s2, m.k2 - 1);
    }
    return sum;
}

MultiIndexPolynomial MultiIndexPolynomial::scaled(Complex c) const {
    MultiIndexPolynomial out(order_);
    for (const auto& m : nonzero_) out.set(m, c * coeff(m));
    return out;
}

Complex derivative_product_coefficient(const MultiIndexPolynomial& w,
                                       const MultiIndexPolynomial& r1,
                                       const MultiIndexPolynomial& r2,
                                       MultiIndex k) {
    return derivative_product_coefficient(w, r1, r2, k, IndexFilter{});
}

Complex derivative_product_coefficient(const MultiIndexPolynomial& w,
                                       const MultiIndexPolynomial& r1,
                                       const MultiIndexPolynomial& r2,
                                       MultiIndex k,
                                       const IndexFilter& skip) {
    const int limit = std::min({w.truncation_order(), r1.truncation_order(), r2.truncation_order()});
    if (!k.valid() || k.order() > limit) throw std::out_of_range("product index beyond truncation order");

    const MultiIndexPolynomial* r[2] = {&r1, &r2};
    Complex sum{0.0, 0.0};
    for (int j = 0; j < 2; ++j) {
        const MultiIndex kt = k + MultiIndex::unit(j);
        for (const auto& m : w.nonzero_index()) {
            if (m[j] == 0 || !m.dominated_by(kt)) continue;
            if (skip && skip(j, m)) continue;
            const Complex rv = r[j]->coeff(kt - m);
            if (rv == Complex{0.0, 0.0}) continue;
            sum += static_cast<double>(m[j]) * w.coeff(m) * rv;
        }
    }
    return sum;
}

namespace {

int admissible_count(const MultiIndexPolynomial& w, MultiIndex k, int j) {
    int count = 0;
    for (const auto& m : w.nonzero_index())
        if (m[j] > 0 && m.dominated_by(k)) ++count;
    return count;
}

}  // namespace

int power_recurrence_variable(const MultiIndexPolynomial& w, MultiIndex k) {
    if (k.k1 == 0) return 1;
    if (k.k2 == 0) return 0;
    return admissible_count(w, k, 1) < admissible_count(w, k, 0) ? 1 : 0;
}

Complex power_coefficient(const MultiIndexPolynomial& w, int a, MultiIndex k,
                          const MultiIndexPolynomial& lower_power) {
    if (k.order() == 0) throw std::invalid_argument("power_coefficient: k = 0 is handled separately");
    return power_coefficient(w, a, k, lower_power, power_recurrence_variable(w, k));
}

Complex power_coefficient(const MultiIndexPolynomial& w, int a, MultiIndex k,
                          const MultiIndexPolynomial& lower_power, int j) {
    if (!k.valid() || k.order() == 0)
        throw std::invalid_argument("power_coefficient: k = 0 is handled separately");
    if (a < 1) throw std::invalid_argument("power_coefficient: exponent must be positive");
    if (k[j] == 0) throw std::invalid_argument("power_coefficient: k_j must be nonzero");
    if (a == 1) return w.coeff(k);

    Complex sum{0.0, 0.0};
    for (const auto& m : w.nonzero_index()) {
        if (m[j] == 0 || !m.dominated_by(k)) continue;
        const Complex h = lower_power.coeff(k - m);
        if (h == Complex{0.0, 0.0}) continue;
        sum += static_cast<double>(m[j]) * w.coeff(m) * h;
    }
    return static_cast<double>(a) / static_cast<double>(k[j]) * sum;
}

Complex product_coefficient(const MultiIndexPolynomial& u, const MultiIndexPolynomial& v,
                            MultiIndex k) {
    Complex sum{0.0, 0.0};
    for (const auto& m : u.nonzero_index()) {
        if (!m.dominated_by(k)) continue;
        const Complex b = v.coeff(k - m);
        if (b == Complex{0.0, 0.0}) continue;
        sum += u.coeff(m) * b;
    }
    return sum;
}

int PolynomialTerm::degree() const {
    int d = 0;
    for (const auto& [v, e] : powers) d += e;
    return d;
}

int ScalarPolynomial::degree() const {
    int d = 0;
    for (const auto& t : terms) d = std::max(d, t.degree());
    return d;
}

int ScalarPolynomial::min_degree() const {
    if (terms.empty()) return 0;
    int d = terms.front().degree();
    for (const auto& t : terms) d = std::min(d, t.degree());
    return d;
}

int ScalarPolynomial::max_variable() const {
    int v = -1;
    for (const auto& t : terms)
        for (const auto& [var, e] : t.powers) v = std::max(v, var);
    return v;
}

Complex ScalarPolynomial::evaluate(const std::vector<Complex>& x) const {
    Complex sum{0.0, 0.0};
    for (const auto& t : terms) {
        Complex p = t.coefficient;
        for (const auto& [v, e] : t.powers) p *= std::pow(x.at(static_cast<std::size_t>(v)), e);
        sum += p;
    }
    return sum;
}

ScalarPolynomial ScalarPolynomial::derivative(int variable) const {
    ScalarPolynomial out;
    for (const auto& t : terms) {
        auto it = std::find_if(t.powers.begin(), t.powers.end(),
                               [&](const auto& p) { return p.first == variable; });
        if (it == t.powers.end()) continue;
        PolynomialTerm d{t.coefficient * static_cast<double>(it->second), {}};
        for (const auto& [v, e] : t.powers) {
            if (v != variable)
                d.powers.emplace_back(v, e);
            else if (e > 1)
                d.powers.emplace_back(v, e - 1);
        }
        out.terms.push_back(std::move(d));
    }
    return out;
}

namespace {

void validate_descriptor(const ScalarPolynomial& g) {
    for (const auto& t : g.terms) {
        if (t.powers.empty()) throw std::invalid_argument("nonlinearity term without variables (constant term)");
        for (const auto& [v, e] : t.powers) {
            if (v < 0) throw std::invalid_argument("nonlinearity term references a negative variable index");
            if (e < 1) throw std::invalid_argument("nonlinearity exponents must be positive integers");
        }
    }
}

}  // namespace

SeriesComposer::SeriesComposer(ScalarPolynomial g, int truncation_order)
    : g_(std::move(g)), order_(truncation_order), result_(truncation_order) {
    validate_descriptor(g_);
    std::map<int, int> max_exp;
    for (const auto& t : g_.terms)
        for (const auto& [v, e] : t.powers) max_exp[v] = std::max(max_exp[v], e);
    for (const auto& [v, e] : max_exp) {
        PowerTable table{v, {}};
        table.powers.resize(static_cast<std::size_t>(e + 1));
        for (int a = 2; a <= e; ++a) table.powers[static_cast<std::size_t>(a)] = MultiIndexPolynomial(order_);
        tables_.push_back(std::move(table));
    }
    for (const auto& t : g_.terms)
        partials_.emplace_back(t.powers.empty() ? 0 : t.powers.size() - 1, MultiIndexPolynomial(order_));
}

void SeriesComposer::bind(std::vector<const MultiIndexPolynomial*> variables) {
    const int needed = g_.max_variable();
    if (static_cast<int>(variables.size()) <= needed)
        throw std::invalid_argument("composition: fewer variable series than the nonlinearity references");
    for (const auto& t : g_.terms)
        for (const auto& [v, e] : t.powers) {
            const auto* x = variables[static_cast<std::size_t>(v)];
            if (x == nullptr) throw std::invalid_argument("composition: unbound variable series");
            if (x->coeff({0, 0}) != Complex{0.0, 0.0})
                throw std::invalid_argument("composition: variable series must have no constant term");
        }
    vars_ = std::move(variables);
}

const MultiIndexPolynomial& SeriesComposer::power(int variable, int exponent) const {
    if (exponent == 1) return *vars_[static_cast<std::size_t>(variable)];
    for (const auto& t : tables_)
        if (t.variable == variable) return t.powers[static_cast<std::size_t>(exponent)];
    throw std::logic_error("composition: missing power table");
}

void SeriesComposer::advance(int p) {
    if (vars_.empty() && !g_.terms.empty()) throw std::logic_error("composition: series not bound");
    if (p < 1 || p > order_) return;
    const auto ks = indices_of_order(p);

    for (auto& table : tables_) {
        const auto& x = *vars_[static_cast<std::size_t>(table.variable)];
        for (std::size_t a = 2; a < table.powers.size(); ++a) {
            const MultiIndexPolynomial& lower = a == 2 ? x : table.powers[a - 1];
            for (const auto& k : ks)
                table.powers[a].set(k, power_coefficient(x, static_cast<int>(a), k, lower));
        }
    }

    for (std::size_t t = 0; t < g_.terms.size(); ++t) {
        const auto& term = g_.terms[t];
        auto& partial = partials_[t];
        for (const auto& k : ks) {
            for (std::size_t f = 1; f < term.powers.size(); ++f) {
                const auto& [v, e] = term.powers[f];
                const MultiIndexPolynomial& prefix =
                    f == 1 ? power(term.powers[0].first, term.powers[0].second) : partial[f - 2];
                partial[f - 1].set(k, product_coefficient(prefix, power(v, e), k));
            }
        }
    }

    for (const auto& k : ks) {
        Complex sum{0.0, 0.0};
        for (std::size_t t = 0; t < g_.terms.size(); ++t) {
            const auto& term = g_.terms[t];
            const Complex c = term.powers.size() == 1
                                  ? power(term.powers[0].first, term.powers[0].second).coeff(k)
                                  : partials_[t].back().coeff(k);
            sum += term.coefficient * c;
        }
        result_.set(k, sum);
    }
}

MultiIndexPolynomial compose_series(const ScalarPolynomial& g,
                                    const std::vector<const MultiIndexPolynomial*>& variables,
                                    int truncation_order) {
    SeriesComposer composer(g, truncation_order);
    composer.bind(variables);
    for (int p = 1; p <= truncation_order; ++p) composer.advance(p);
    return composer.result();
}

Complex compose_nonlinearity(const ScalarPolynomial& g,
                             const std::vector<const MultiIndexPolynomial*>& variables,
                             MultiIndex k) {
    if (!k.valid()) throw std::out_of_range("negative multi-index");
    if (k.order() == 0) {
        validate_descriptor(g);
        return {0.0, 0.0};
    }
    return compose_series(g, variables, k.order()).coeff(k);
}

}  // namespace ssmfrc
