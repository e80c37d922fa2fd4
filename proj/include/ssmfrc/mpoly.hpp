#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ssmfrc {

using Complex = std::complex<double>;

/// Exponent pair (k1, k2) of the monomial s1^k1 * s2^k2.
struct MultiIndex {
    int k1 = 0;
    int k2 = 0;

    constexpr int order() const { return k1 + k2; }
    constexpr int operator[](int j) const { return j == 0 ? k1 : k2; }

    friend constexpr bool operator==(const MultiIndex&, const MultiIndex&) = default;
    friend constexpr MultiIndex operator+(MultiIndex a, MultiIndex b) { return {a.k1 + b.k1, a.k2 + b.k2}; }
    friend constexpr MultiIndex operator-(MultiIndex a, MultiIndex b) { return {a.k1 - b.k1, a.k2 - b.k2}; }

    /// Componentwise a <= b.
    constexpr bool dominated_by(MultiIndex b) const { return k1 <= b.k1 && k2 <= b.k2; }
    constexpr bool valid() const { return k1 >= 0 && k2 >= 0; }

    static constexpr MultiIndex unit(int j) { return j == 0 ? MultiIndex{1, 0} : MultiIndex{0, 1}; }
};

/// Graded-lex position: by total order, then by decreasing k1.
constexpr std::size_t graded_index(MultiIndex k) {
    const auto p = static_cast<std::size_t>(k.order());
    return p * (p + 1) / 2 + static_cast<std::size_t>(k.k2);
}

constexpr std::size_t term_count(int order) {
    const auto p = static_cast<std::size_t>(order + 1);
    return p * (p + 1) / 2;
}

/// Graded-lex total order (consistent with graded_index).
constexpr bool graded_less(MultiIndex a, MultiIndex b) { return graded_index(a) < graded_index(b); }

/// All multi-indices with |k| == p in graded-lex order.
std::vector<MultiIndex> indices_of_order(int p);

/// Coefficients below this magnitude are treated as zero.
inline constexpr double kDropTolerance = 1e-14;

/// Truncated power series in (s1, s2) with complex coefficients.
///
/// Storage is dense up to the truncation order; the sorted list of nonzero
/// indices drives every recurrence so the cost scales with sparsity.
class MultiIndexPolynomial {
public:
    MultiIndexPolynomial() = default;
    explicit MultiIndexPolynomial(int truncation_order);

    int truncation_order() const { return order_; }

    /// Coefficient at k; zero for indices beyond the truncation order.
    Complex coeff(MultiIndex k) const;
    Complex operator[](MultiIndex k) const { return coeff(k); }

    /// Sets a coefficient. Values at or below kDropTolerance are stored as zero.
    void set(MultiIndex k, Complex value);
    void add(MultiIndex k, Complex value) { set(k, coeff(k) + value); }

    const std::vector<MultiIndex>& nonzero_index() const { return nonzero_; }
    bool is_zero() const { return nonzero_.empty(); }

    /// Evaluate at (s1, s2).
    Complex evaluate(Complex s1, Complex s2) const;
    /// Partial derivative d/ds_j (j = 0 or 1) evaluated at (s1, s2).
    Complex evaluate_partial(int j, Complex s1, Complex s2) const;

    MultiIndexPolynomial scaled(Complex c) const;

private:
    int order_ = 0;
    std::vector<Complex> dense_;
    std::vector<MultiIndex> nonzero_;
};

/// Predicate on the summation index m; returning true skips the term.
using IndexFilter = std::function<bool(int j, MultiIndex m)>;

/// k-th coefficient of sum_j d/ds_j w(s) * r_j(s), iterating w's nonzero
/// indices only. Throws std::out_of_range if |k| exceeds every input's order.
Complex derivative_product_coefficient(const MultiIndexPolynomial& w,
                                       const MultiIndexPolynomial& r1,
                                       const MultiIndexPolynomial& r2,
                                       MultiIndex k);

/// Same sum with an exclusion filter on (j, m); used for the coefficient
/// equations where the unknown-order terms are moved to the left-hand side.
Complex derivative_product_coefficient(const MultiIndexPolynomial& w,
                                       const MultiIndexPolynomial& r1,
                                       const MultiIndexPolynomial& r2,
                                       MultiIndex k,
                                       const IndexFilter& skip);

/// Picks the differentiation variable for power_coefficient: among j with
/// k_j > 0, the one with fewest admissible nonzero indices; ties go to j = 0.
int power_recurrence_variable(const MultiIndexPolynomial& w, MultiIndex k);

/// H_{a,k} = (a / k_j) sum_{m <= k, m_j > 0} m_j W_m H_{a-1,k-m}.
/// `lower_power` holds H_{a-1}. k = 0 is rejected.
Complex power_coefficient(const MultiIndexPolynomial& w, int a, MultiIndex k,
                          const MultiIndexPolynomial& lower_power);

/// Same, with an explicit choice of differentiation variable j.
Complex power_coefficient(const MultiIndexPolynomial& w, int a, MultiIndex k,
                          const MultiIndexPolynomial& lower_power, int j);

/// k-th coefficient of the Cauchy product u * v.
Complex product_coefficient(const MultiIndexPolynomial& u, const MultiIndexPolynomial& v,
                            MultiIndex k);

/// One monomial c * prod_v x_v^{e_v} of a scalar polynomial.
struct PolynomialTerm {
    Complex coefficient;
    std::vector<std::pair<int, int>> powers;  // (variable, exponent), exponent >= 1

    int degree() const;
};

/// Finite scalar polynomial in a set of variables.
struct ScalarPolynomial {
    std::vector<PolynomialTerm> terms;

    int degree() const;
    int min_degree() const;
    /// Largest variable index referenced, or -1 if there are none.
    int max_variable() const;
    Complex evaluate(const std::vector<Complex>& x) const;
    /// Partial derivative with respect to `variable`.
    ScalarPolynomial derivative(int variable) const;
};

/// Incremental composition of a scalar polynomial with series x_v(s) that have
/// no constant term. advance(p) fills the order-p coefficients of g(x(s)); it
/// reads the x series only below order p unless g has linear terms.
class SeriesComposer {
public:
    SeriesComposer(ScalarPolynomial g, int truncation_order);

    /// Rebinds the variable series. Pointers must stay valid while advancing.
    void bind(std::vector<const MultiIndexPolynomial*> variables);

    void advance(int p);
    const MultiIndexPolynomial& result() const { return result_; }

private:
    struct PowerTable {
        int variable;
        std::vector<MultiIndexPolynomial> powers;  // powers[a] holds x^a, a >= 1
    };
    const MultiIndexPolynomial& power(int variable, int exponent) const;

    ScalarPolynomial g_;
    int order_;
    std::vector<const MultiIndexPolynomial*> vars_;
    std::vector<PowerTable> tables_;
    std::vector<std::vector<MultiIndexPolynomial>> partials_;  // per term, products of the first f+2 factors
    MultiIndexPolynomial result_;
};

/// Full series of g(x(s)) up to `truncation_order`.
MultiIndexPolynomial compose_series(const ScalarPolynomial& g,
                                    const std::vector<const MultiIndexPolynomial*>& variables,
                                    int truncation_order);

/// k-th coefficient of g(x(s)); rejects a descriptor with constant terms.
Complex compose_nonlinearity(const ScalarPolynomial& g,
                             const std::vector<const MultiIndexPolynomial*>& variables,
                             MultiIndex k);

}  // namespace ssmfrc
