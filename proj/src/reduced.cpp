#include "ssmfrc/reduced.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace ssmfrc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMarginalTolerance = 1e-9;
constexpr double kStitchRadius = 1.5;

double wrap_phase(double psi) {
    double p = std::fmod(psi, kTwoPi);
    if (p < 0.0) p += kTwoPi;
    if (p >= kTwoPi) p -= kTwoPi;
    return p;
}

double circular_distance(double a, double b) {
    const double d = std::abs(wrap_phase(a) - wrap_phase(b));
    return std::min(d, kTwoPi - d);
}

using Poly = std::vector<double>;  // ascending coefficients

Poly poly_mul(const Poly& p, const Poly& q) {
    if (p.empty() || q.empty()) return {};
    Poly r(p.size() + q.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
}

Poly poly_add(const Poly& p, const Poly& q, double sq = 1.0) {
    Poly r(std::max(p.size(), q.size()), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) r[i] += p[i];
    for (std::size_t i = 0; i < q.size(); ++i) r[i] += sq * q[i];
    return r;
}

/// The six functions as polynomials in t = rho / scale.
struct PolarPolys {
    Poly a, bmo_rho, f1, f2, g1, g2;
};

PolarPolys polar_polys(const PolarReducedModel& m, double scale) {
    const int M = m.M();
    PolarPolys p;
    p.a.assign(static_cast<std::size_t>(2 * M + 2), 0.0);
    p.bmo_rho.assign(static_cast<std::size_t>(2 * M + 2), 0.0);
    for (auto* v : {&p.f1, &p.f2, &p.g1, &p.g2}) v->assign(static_cast<std::size_t>(2 * M + 1), 0.0);
    p.a[1] = m.lambda1.real() * scale;
    p.bmo_rho[1] = (m.lambda1.imag() - m.Omega) * scale;
    p.f1[0] = p.g2[0] = m.c10.real();
    p.f2[0] = p.g1[0] = m.c10.imag();
    for (int i = 1; i <= M; ++i) {
        const auto u = static_cast<std::size_t>(i - 1);
        const double s2 = std::pow(scale, 2 * i);
        const auto e = static_cast<std::size_t>(2 * i);
        p.a[e + 1] = m.gammas[u].real() * s2 * scale;
        p.bmo_rho[e + 1] = m.gammas[u].imag() * s2 * scale;
        const Complex c = u < m.c_ii.size() ? m.c_ii[u] : Complex{};
        const Complex d = u < m.d_iplus.size() ? m.d_iplus[u] : Complex{};
        p.f1[e] = (c.real() + d.real()) * s2;
        p.f2[e] = (c.imag() - d.imag()) * s2;
        p.g1[e] = (c.imag() + d.imag()) * s2;
        p.g2[e] = (c.real() - d.real()) * s2;
    }
    return p;
}

/// Real roots (and near-real pairs) of the eliminated polynomial, in t.
std::vector<Complex> companion_hints(const PolarReducedModel& m, double scale) {
    const auto p = polar_polys(m, scale);
    const Poly u = poly_add(poly_mul(p.a, p.g2), poly_mul(p.f2, p.bmo_rho));
    const Poly v = poly_add(poly_mul(p.g1, p.a), poly_mul(p.f1, p.bmo_rho), -1.0);
    const Poly D = poly_add(poly_mul(p.f1, p.g2), poly_mul(p.f2, p.g1));
    Poly N = poly_add(poly_add(poly_mul(u, u), poly_mul(v, v)), poly_mul(D, D), -m.epsilon * m.epsilon);

    double cmax = 0.0;
    for (double c : N) cmax = std::max(cmax, std::abs(c));
    if (cmax == 0.0) return {};
    while (!N.empty() && std::abs(N.back()) <= 1e-14 * cmax) N.pop_back();
    const int deg = static_cast<int>(N.size()) - 1;
    if (deg < 1) return {};
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) C(i, deg - 1) = -N[static_cast<std::size_t>(i)] / N.back();
    Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
    std::vector<Complex> out;
    if (es.info() != Eigen::Success) return out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex z = es.eigenvalues()(i);
        if (z.real() > 0.0 && std::abs(z.imag()) <= 0.1 * std::abs(z)) out.push_back(z);
    }
    return out;
}

/// (numerator of cos psi, numerator of sin psi, D) with cos psi = Nc / (eps D).
std::tuple<double, double, double> elimination_parts(const PolarFunctions& f, double rho, double Omega) {
    const double w = (f.b - Omega) * rho;
    const double nc = f.a * f.g2 + f.f2 * w;
    const double ns = f.g1 * f.a - f.f1 * w;
    const double D = -f.f1 * f.g2 - f.f2 * f.g1;
    return {nc, ns, D};
}

std::optional<double> phase_at(const PolarReducedModel& model, double rho) {
    const auto f = model.functions(rho);
    const auto [nc, ns, D] = elimination_parts(f, rho, model.Omega);
    if (D == 0.0) return std::nullopt;
    const double sgn = (model.epsilon * D) > 0.0 ? 1.0 : -1.0;
    return wrap_phase(std::atan2(sgn * ns, sgn * nc));
}

}  // namespace

const char* to_string(Stability s) {
    switch (s) {
        case Stability::StableNode: return "stable_node";
        case Stability::StableSpiral: return "stable_spiral";
        case Stability::Saddle: return "saddle";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
    }
    return "unknown";
}

PolarReducedModel PolarReducedModel::from_ssm(const AutonomousSSM& ssm, const NonAutonomousSSM& na, double epsilon) {
    PolarReducedModel m;
    m.lambda1 = ssm.lambdas(ssm.master);
    m.gammas = ssm.gammas;
    m.c10 = na.c10;
    m.c_ii = na.c_ii;
    m.d_iplus = na.d_iplus;
    m.epsilon = epsilon;
    m.Omega = na.Omega;
    return m;
}

PolarFunctions PolarReducedModel::functions(double rho) const {
    PolarFunctions f;
    f.a = lambda1.real() * rho;
    f.da = lambda1.real();
    f.b = lambda1.imag();
    f.f1 = f.g2 = c10.real();
    f.f2 = f.g1 = c10.imag();
    for (int i = 1; i <= M(); ++i) {
        const auto u = static_cast<std::size_t>(i - 1);
        const double r2i = std::pow(rho, 2 * i);
        const double dr2i = 2.0 * i * std::pow(rho, 2 * i - 1);
        f.a += gammas[u].real() * r2i * rho;
        f.da += (2.0 * i + 1.0) * gammas[u].real() * r2i;
        f.b += gammas[u].imag() * r2i;
        f.db += gammas[u].imag() * dr2i;
        const Complex c = u < c_ii.size() ? c_ii[u] : Complex{};
        const Complex d = u < d_iplus.size() ? d_iplus[u] : Complex{};
        f.f1 += (c.real() + d.real()) * r2i;
        f.df1 += (c.real() + d.real()) * dr2i;
        f.f2 += (c.imag() - d.imag()) * r2i;
        f.df2 += (c.imag() - d.imag()) * dr2i;
        f.g1 += (c.imag() + d.imag()) * r2i;
        f.dg1 += (c.imag() + d.imag()) * dr2i;
        f.g2 += (c.real() - d.real()) * r2i;
        f.dg2 += (c.real() - d.real()) * dr2i;
    }
    return f;
}

PolarReducedModel PolarReducedModel::zeroth_order() const {
    PolarReducedModel m = *this;
    std::fill(m.c_ii.begin(), m.c_ii.end(), Complex{});
    std::fill(m.d_iplus.begin(), m.d_iplus.end(), Complex{});
    return m;
}

Eigen::Vector2d evaluate_polar_rhs(const PolarReducedModel& model, double rho, double psi) {
    if (!(rho > 0.0)) throw std::domain_error("polar reduced dynamics need rho > 0");
    const auto f = model.functions(rho);
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    return {f.a + model.epsilon * (f.f1 * c + f.f2 * s),
            (f.b - model.Omega) + model.epsilon / rho * (f.g1 * c - f.g2 * s)};
}

Eigen::Vector2d zero_problem(const PolarReducedModel& model, double rho, double psi) {
    const auto f = model.functions(rho);
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    return {f.a + model.epsilon * (f.f1 * c + f.f2 * s),
            (f.b - model.Omega) * rho + model.epsilon * (f.g1 * c - f.g2 * s)};
}

Complex complex_reduced_rhs(const PolarReducedModel& model, double rho, double psi) {
    const Complex I{0.0, 1.0};
    Complex out = model.lambda1 * rho;
    Complex forcing = model.c10 * std::exp(-I * psi);
    for (int i = 1; i <= model.M(); ++i) {
        const auto u = static_cast<std::size_t>(i - 1);
        const double r2i = std::pow(rho, 2 * i);
        out += model.gammas[u] * r2i * rho;
        if (u < model.c_ii.size()) forcing += model.c_ii[u] * r2i * std::exp(-I * psi);
        if (u < model.d_iplus.size()) forcing += model.d_iplus[u] * r2i * std::exp(I * psi);
    }
    return out + model.epsilon * forcing;
}

double elimination_residual(const PolarReducedModel& model, double rho) {
    const auto f = model.functions(rho);
    const auto [nc, ns, D] = elimination_parts(f, rho, model.Omega);
    const double eD = model.epsilon * D;
    return nc * nc + ns * ns - eD * eD;
}

std::vector<FixedPoint> solve_fixed_points(const PolarReducedModel& model, const RootSearchOptions& options) {
    std::vector<FixedPoint> out;
    if (model.epsilon == 0.0) return out;
    const double lo = options.rho_min;
    const double hi = options.rho_max;
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("root search needs 0 < rho_min < rho_max");

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(options.log_points + options.linear_points + 64));
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int i = 0; i < options.log_points; ++i)
        grid.push_back(std::exp(llo + (lhi - llo) * i / std::max(1, options.log_points - 1)));
    for (int i = 0; i < options.linear_points; ++i)
        grid.push_back(lo + (hi - lo) * i / std::max(1, options.linear_points - 1));
    const auto residual = [&](double r) { return elimination_residual(model, r); };
    for (Complex z : companion_hints(model, hi)) {
        const double r = z.real() * hi;
        if (!(r > lo && r < hi)) continue;
        for (double d : {-1e-9, 0.0, 1e-9}) grid.push_back(r * (1.0 + d));
        // a close root pair shows up as one hint (or a near-real conjugate pair): put a
        // grid point at the residual extremum between them so both sign changes are seen
        const double w = std::max(1e-6, 4.0 * std::abs(z.imag()) / std::abs(z));
        const double l = std::max(lo, r * (1.0 - w));
        const double u = std::min(hi, r * (1.0 + w));
        grid.push_back(l);
        grid.push_back(u);
        const double sl = residual(l) < 0.0 ? -1.0 : 1.0;
        if ((residual(u) < 0.0 ? -1.0 : 1.0) != sl) continue;
        const auto [x, fx] = boost::math::tools::brent_find_minima(
            [&](double t) { return sl * residual(t); }, l, u, std::numeric_limits<double>::digits / 2);
        if (fx < 0.0) grid.push_back(x);
    }
    grid.push_back(lo);
    grid.push_back(hi);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> roots;
    double prev_r = grid.front();
    double prev_v = residual(prev_r);
    if (prev_v == 0.0) roots.push_back(prev_r);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double r = grid[i];
        const double v = residual(r);
        if (v == 0.0) {
            roots.push_back(r);
        } else if (prev_v != 0.0 && (prev_v < 0.0) != (v < 0.0)) {
            boost::uintmax_t iters = 200;
            const auto [a, b] = boost::math::tools::toms748_solve(
                residual, prev_r, r, prev_v, v, boost::math::tools::eps_tolerance<double>(50), iters);
            roots.push_back(0.5 * (a + b));
        }
        prev_r = r;
        prev_v = v;
    }
    std::sort(roots.begin(), roots.end());

    for (double r : roots) {
        if (!out.empty() && std::abs(r - out.back().rho) <= 1e-12 * r) continue;
        if (const auto psi = phase_at(model, r)) out.push_back({r, *psi});
    }
    return out;
}

Eigen::Matrix2d polar_jacobian(const PolarReducedModel& model, double rho, double psi) {
    const auto f = model.functions(rho);
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    const double e = model.epsilon;
    Eigen::Matrix2d J;
    J(0, 0) = f.da + e * (f.df1 * c + f.df2 * s);
    J(0, 1) = e * (-f.f1 * s + f.f2 * c);
    const double h = f.g1 * c - f.g2 * s;
    J(1, 0) = f.db + e * ((f.dg1 * c - f.dg2 * s) / rho - h / (rho * rho));
    J(1, 1) = e / rho * (-f.g1 * s - f.g2 * c);
    return J;
}

Stability classify_stability(const PolarReducedModel& model, double rho, double psi) {
    const Eigen::Matrix2d J = polar_jacobian(model, rho, psi);
    const double tr = J.trace();
    const double det = J.determinant();
    const double disc = tr * tr - 4.0 * det;
    double re_max;
    double re_min;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        re_max = 0.5 * (tr + sq);
        re_min = 0.5 * (tr - sq);
    } else {
        re_max = re_min = 0.5 * tr;
    }
    if (std::abs(re_max) < kMarginalTolerance || std::abs(re_min) < kMarginalTolerance) return Stability::Marginal;
    if (det < 0.0) return Stability::Saddle;
    if (re_max < 0.0) return disc < 0.0 ? Stability::StableSpiral : Stability::StableNode;
    return Stability::Unstable;
}

void stitch_branches(std::vector<std::vector<FrcPoint>>& per_sample, std::vector<SaddleNodeEvent>& events,
                     const std::vector<double>* omegas) {
    int next_id = 0;
    const std::vector<FrcPoint>* prev = nullptr;
    std::size_t prev_index = 0;
    auto omega_of = [&](const std::vector<FrcPoint>& pts, std::size_t idx) {
        if (omegas && idx < omegas->size()) return (*omegas)[idx];
        return pts.empty() ? 0.0 : pts.front().Omega;
    };
    for (std::size_t idx = 0; idx < per_sample.size(); ++idx) {
        auto& pts = per_sample[idx];
        if (prev == nullptr) {
            for (auto& p : pts) p.branch_id = next_id++;
        } else {
            struct Pair {
                double d;
                std::size_t i, j;
            };
            std::vector<Pair> pairs;
            for (std::size_t i = 0; i < prev->size(); ++i)
                for (std::size_t j = 0; j < pts.size(); ++j) {
                    const auto& a = (*prev)[i];
                    const auto& b = pts[j];
                    const double dl = std::log(b.rho) - std::log(a.rho);
                    const double dp = circular_distance(a.psi, b.psi);
                    const double d = std::sqrt(dl * dl + dp * dp);
                    if (d <= kStitchRadius) pairs.push_back({d, i, j});
                }
            std::sort(pairs.begin(), pairs.end(),
                      [](const Pair& x, const Pair& y) { return std::tie(x.d, x.i, x.j) < std::tie(y.d, y.i, y.j); });
            std::vector<bool> used_prev(prev->size(), false);
            std::vector<bool> used_cur(pts.size(), false);
            for (const auto& pr : pairs) {
                if (used_prev[pr.i] || used_cur[pr.j]) continue;
                used_prev[pr.i] = used_cur[pr.j] = true;
                pts[pr.j].branch_id = (*prev)[pr.i].branch_id;
            }
            SaddleNodeEvent ev;
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (!used_cur[j]) {
                    pts[j].branch_id = next_id++;
                    ev.branches.push_back(pts[j].branch_id);
                }
            for (std::size_t i = 0; i < prev->size(); ++i)
                if (!used_prev[i]) ev.branches.push_back((*prev)[i].branch_id);
            if (pts.size() != prev->size()) {
                ev.Omega_before = omega_of(*prev, prev_index);
                ev.Omega_after = omega_of(pts, idx);
                ev.count_before = static_cast<int>(prev->size());
                ev.count_after = static_cast<int>(pts.size());
                std::sort(ev.branches.begin(), ev.branches.end());
                events.push_back(std::move(ev));
            }
        }
        prev = &pts;
        prev_index = idx;
    }
}

FrcResult sweep_frc(const AutonomousSSM& ssm, const Eigen::VectorXcd& F_tilde, const std::vector<double>& omegas,
                    double epsilon, const SweepOptions& options) {
    const std::size_t count = omegas.size();
    std::vector<std::vector<FrcPoint>> per_sample(count);
    std::vector<PolarReducedModel> models(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= count) return;
            try {
                const auto na = build_nonautonomous(ssm, F_tilde, omegas[j]);
                models[j] = PolarReducedModel::from_ssm(ssm, na, epsilon);
                for (const auto& fp : solve_fixed_points(models[j], options.roots)) {
                    FrcPoint p;
                    p.Omega = omegas[j];
                    p.rho = fp.rho;
                    p.psi = fp.psi;
                    p.stability = classify_stability(models[j], fp.rho, fp.psi);
                    p.amplitude = options.amplitude ? options.amplitude(na, fp) : 0.0;
                    p.sample = static_cast<int>(j);
                    per_sample[j].push_back(p);
                }
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    FrcResult result;
    for (std::size_t j = 0; j < count; ++j) {
        if (!errors[j]) continue;
        if (!options.keep_going) std::rethrow_exception(errors[j]);
        SweepFailure f;
        f.sample = static_cast<int>(j);
        f.Omega = omegas[j];
        f.error = errors[j];
        try {
            std::rethrow_exception(errors[j]);
        } catch (const std::exception& e) {
            f.message = e.what();
        } catch (...) {
            f.message = "unknown error";
        }
        result.failures.push_back(std::move(f));
    }
    std::vector<std::vector<FrcPoint>> solved;
    std::vector<double> solved_omegas;
    for (std::size_t j = 0; j < count; ++j)
        if (!errors[j]) {
            solved.push_back(std::move(per_sample[j]));
            solved_omegas.push_back(omegas[j]);
        }
    stitch_branches(solved, result.events, &solved_omegas);
    for (auto& pts : solved)
        for (auto& p : pts) result.points.push_back(p);
    result.models = std::move(models);
    return result;
}

Eigen::Vector2d ellipse_point(const PolarReducedModel& model, double rho, double psi) {
    const auto f = model.functions(rho);
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    const Eigen::Vector2d v1(f.f2 * f.g2, f.f2 * f.g1);
    Eigen::Matrix2d R;
    R << c, s, -s, c;
    return R * v1 + Eigen::Vector2d(f.f1 * f.g1 - f.f2 * f.g2, 0.0) * c;
}

EllipseDiagnostics ellipse_diagnostics(const PolarReducedModel& model, double rho, int samples,
                                       std::optional<double> psi) {
    EllipseDiagnostics out;
    const auto f = model.functions(rho);
    if (f.g1 == 0.0 || f.f2 == 0.0) {
        out.reason = "g1 or f2 vanishes; the ellipse form is not defined";
        return out;
    }
    if (model.epsilon == 0.0) {
        out.reason = "epsilon is zero";
        return out;
    }
    out.valid = true;
    out.v1 = {f.f2 * f.g2, f.f2 * f.g1};
    out.v2 = {f.f1 * f.g1 - f.f2 * f.g2, 0.0};
    out.v3 = -(1.0 / model.epsilon) * Eigen::Vector2d(f.g1 * f.a, f.f2 * (f.b - model.Omega) * rho);
    for (int i = 0; i < samples; ++i) out.samples.push_back(ellipse_point(model, rho, kTwoPi * i / samples));
    if (psi) out.intersection_residual = (ellipse_point(model, rho, *psi) - out.v3).norm();
    return out;
}

std::vector<Eigen::Vector2d> zeroth_order_circle(const PolarReducedModel& model, int samples) {
    std::vector<Eigen::Vector2d> out;
    const Eigen::Vector2d v1(model.c10.real(), model.c10.imag());
    for (int i = 0; i < samples; ++i) {
        const double p = kTwoPi * i / samples;
        Eigen::Matrix2d R;
        R << std::cos(p), std::sin(p), -std::sin(p), std::cos(p);
        out.push_back(R * v1);
    }
    return out;
}

Eigen::Vector2d zeroth_order_target(const PolarReducedModel& model, double rho) {
    const auto f = model.functions(rho);
    return -(1.0 / model.epsilon) * Eigen::Vector2d(f.a, (f.b - model.Omega) * rho);
}

std::optional<BackboneCrossing> backbone_crossing(const PolarReducedModel& model, double rho_max) {
    PolarReducedModel m0 = model.zeroth_order();
    const double target = -m0.epsilon * std::abs(m0.c10);
    const auto h = [&](double r) { return m0.functions(r).a - target; };
    constexpr int kScan = 4000;
    double prev_r = 0.0;
    double prev_v = h(0.0);
    for (int i = 1; i <= kScan; ++i) {
        const double r = rho_max * i / kScan;
        const double v = h(r);
        if ((prev_v < 0.0) != (v < 0.0)) {
            boost::uintmax_t iters = 200;
            const auto [a, b] = boost::math::tools::toms748_solve(h, prev_r, r, prev_v, v,
                                                                  boost::math::tools::eps_tolerance<double>(52), iters);
            const double rstar = 0.5 * (a + b);
            m0.Omega = m0.functions(rstar).b;
            const auto psi = phase_at(m0, rstar);
            if (!psi) return std::nullopt;
            return BackboneCrossing{rstar, m0.Omega, *psi};
        }
        prev_r = r;
        prev_v = v;
    }
    return std::nullopt;
}

}  // namespace ssmfrc
