#include "ssmfrc/backmap_oracle.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ssmfrc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const Complex kI{0.0, 1.0};

MultiIndexPolynomial combine_rows(const std::vector<MultiIndexPolynomial>& rows, const Eigen::MatrixXcd& T, int coord,
                                  int order) {
    MultiIndexPolynomial out(order);
    for (int p = 0; p <= order; ++p)
        for (const auto& k : indices_of_order(p)) {
            Complex v{0.0, 0.0};
            for (std::size_t i = 0; i < rows.size(); ++i) v += T(coord, static_cast<Eigen::Index>(i)) * rows[i].coeff(k);
            out.set(k, v);
        }
    return out;
}

/// Radau IIA, 3 stages.
struct RadauTableau {
    Eigen::Matrix3d A;
    Eigen::Vector3d c;
    RadauTableau() {
        const double s6 = std::sqrt(6.0);
        A << (88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0,
            (296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0,
            (16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0;
        c << (4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0;
    }
};

class RadauStepper {
public:
    RadauStepper(const FirstOrderSystem& fo, double Omega, double epsilon, double h)
        : fo_(fo), Omega_(Omega), eps_(epsilon), h_(h), d_(fo.dimension()) {}

    void refresh(const Eigen::VectorXd& x) {
        const Eigen::MatrixXd J = fo_.jacobian(x);
        Eigen::MatrixXd S = Eigen::MatrixXd::Identity(3 * d_, 3 * d_);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) S.block(i * d_, j * d_, d_, d_) -= h_ * tab_.A(i, j) * J;
        lu_.compute(S);
    }

    /// Advances x from t by one step; returns false if Newton failed.
    bool step(double t, Eigen::VectorXd& x) {
        Eigen::VectorXd Z = Eigen::VectorXd::Zero(3 * d_);
        Eigen::VectorXd F(3 * d_);
        const double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-8);
        double previous = 0.0;
        for (int it = 0; it < 25; ++it) {
            for (int j = 0; j < 3; ++j)
                F.segment(j * d_, d_) = fo_.rhs(t + tab_.c(j) * h_, x + Z.segment(j * d_, d_), eps_, Omega_);
            Eigen::VectorXd G = -Z;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) G.segment(i * d_, d_) += h_ * tab_.A(i, j) * F.segment(j * d_, d_);
            const Eigen::VectorXd dZ = lu_.solve(G);
            Z += dZ;
            const double norm = dZ.cwiseAbs().maxCoeff();
            bool done = norm <= 1e-15 * scale;
            if (!done && it > 0) {
                // contraction-rate stopping test; stiff rows stall at rounding level
                const double theta = norm / previous;
                if (theta < 1.0)
                    done = theta / (1.0 - theta) * norm <= 1e-12 * scale;
                else if (norm <= 1e-11 * scale)
                    done = true;
                else if (it >= 3)
                    return false;
            }
            if (done) {
                x += Z.segment(2 * d_, d_);
                return true;
            }
            previous = norm;
        }
        return false;
    }

private:
    const FirstOrderSystem& fo_;
    double Omega_;
    double eps_;
    double h_;
    int d_;
    RadauTableau tab_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

CoordinateMap::CoordinateMap(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec,
                             int coord)
    : x0_(combine_rows(ssm.W0, dec.T, coord, ssm.order)),
      x1a_(combine_rows(na.A, dec.T, coord, na.order)),
      x1b_(combine_rows(na.B, dec.T, coord, na.order)) {}

Complex CoordinateMap::value(double rho, double psi, double phi, double epsilon) const {
    const Complex s1 = rho * std::exp(kI * (phi + psi));
    const Complex s2 = std::conj(s1);
    const Complex ep = std::exp(kI * phi);
    return x0_.evaluate(s1, s2) + epsilon * (x1a_.evaluate(s1, s2) * ep + x1b_.evaluate(s1, s2) * std::conj(ep));
}

double periodic_peak(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(values[i]) > std::abs(values[imax])) imax = i;
    const double y0 = std::abs(values[(imax + n - 1) % n]);
    const double y1 = std::abs(values[imax]);
    const double y2 = std::abs(values[(imax + 1) % n]);
    const double denom = y0 - 2.0 * y1 + y2;
    if (n < 3 || denom >= 0.0) return y1;
    const double off = 0.5 * (y0 - y2) / denom;
    return y1 - 0.25 * (y0 - y2) * off;
}

OrbitSample backmap_orbit(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec,
                          double rho, double psi, double epsilon, int coord, int samples_per_period) {
    const CoordinateMap map(ssm, na, dec, coord);
    OrbitSample out;
    const double period = kTwoPi / na.Omega;
    for (int i = 0; i <= samples_per_period; ++i) {
        const double t = period * i / samples_per_period;
        const Complex v = map.value(rho, psi, na.Omega * t, epsilon);
        out.t.push_back(t);
        out.values.push_back(v.real());
        out.max_imag = std::max(out.max_imag, std::abs(v.imag()));
    }
    out.amplitude = periodic_peak(std::vector<double>(out.values.begin(), out.values.end() - 1));
    return out;
}

Eigen::VectorXd backmap_state(const AutonomousSSM& ssm, const NonAutonomousSSM& na, const SpectralDecomposition& dec,
                              double rho, double psi, double epsilon, double t) {
    const double phi = na.Omega * t;
    const Complex s1 = rho * std::exp(kI * (phi + psi));
    const Eigen::VectorXcd q = ssm.evaluate(s1, std::conj(s1)) + epsilon * na.evaluate(s1, std::conj(s1), phi);
    return (dec.T * q).real();
}

OracleResult steady_state_oracle(const FirstOrderSystem& fo, double Omega, double epsilon, int coord,
                                 const Eigen::VectorXd& initial_condition, const OracleOptions& options) {
    if (!(Omega > 0.0)) throw std::invalid_argument("oracle needs a positive forcing frequency");
    if (initial_condition.size() != fo.dimension()) throw std::invalid_argument("initial condition has the wrong size");
    const double period = kTwoPi / Omega;
    const int N = options.steps_per_period;
    const double h = period / N;
    RadauStepper stepper(fo, Omega, epsilon, h);

    OracleResult res;
    Eigen::VectorXd x = initial_condition;
    auto run_period = [&](std::vector<double>* samples) {
        stepper.refresh(x);
        for (int s = 0; s < N; ++s) {
            if (samples) samples->push_back(x(coord));
            // time measured from a period boundary keeps the forcing phase exact
            if (!stepper.step(s * h, x)) {
                stepper.refresh(x);
                if (!stepper.step(s * h, x)) return false;
            }
        }
        return true;
    };

    for (long p = 0; p < options.max_periods; ++p) {
        const Eigen::VectorXd start = x;
        if (!run_period(nullptr)) {
            res.message = "Newton iteration failed in the implicit step";
            res.state = x;
            res.periods = p;
            return res;
        }
        res.period_defect = (x - start).cwiseAbs().maxCoeff();
        res.periods = p + 1;
        if (!x.allFinite()) {
            res.message = "integration diverged";
            return res;
        }
        if (res.periods >= options.min_periods &&
            res.period_defect <= options.rtol * x.cwiseAbs().maxCoeff() + options.atol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) {
        std::ostringstream msg;
        msg << "period map did not settle within " << options.max_periods << " periods (defect " << res.period_defect << ")";
        res.message = msg.str();
        res.state = x;
        return res;
    }
    res.state = x;
    run_period(&res.samples);
    res.amplitude = periodic_peak(res.samples);
    return res;
}

double linear_response_amplitude(const MechanicalSystem& sys, double Omega, double epsilon, int coord) {
    const Eigen::MatrixXcd H = sys.K.cast<Complex>() - Omega * Omega * sys.M.cast<Complex>() + kI * Omega * sys.C.cast<Complex>();
    const Eigen::VectorXcd y = H.partialPivLu().solve(sys.forcing_shape.cast<Complex>());
    return epsilon * std::abs(y(coord));
}

std::vector<BranchComparison> compare_stable_branches(const FirstOrderSystem& fo, const SpectralDecomposition& dec,
                                                      const AutonomousSSM& ssm, const Eigen::VectorXcd& F_tilde,
                                                      double epsilon, const std::vector<double>& omegas, int coord,
                                                      const RootSearchOptions& roots, const OracleOptions& options) {
    std::vector<BranchComparison> out;
    for (const double Omega : omegas) {
        const auto na = build_nonautonomous(ssm, F_tilde, Omega);
        const auto model = PolarReducedModel::from_ssm(ssm, na, epsilon);
        for (const auto& fp : solve_fixed_points(model, roots)) {
            if (!is_stable(classify_stability(model, fp.rho, fp.psi))) continue;
            BranchComparison c;
            c.Omega = Omega;
            c.rho = fp.rho;
            c.psi = fp.psi;
            c.ssm_amplitude = backmap_orbit(ssm, na, dec, fp.rho, fp.psi, epsilon, coord, 256).amplitude;
            const auto res =
                steady_state_oracle(fo, Omega, epsilon, coord, backmap_state(ssm, na, dec, fp.rho, fp.psi, epsilon, 0.0), options);
            c.converged = res.converged;
            c.periods = res.periods;
            c.message = res.message;
            c.oracle_amplitude = res.amplitude;
            c.relative_error = res.converged && res.amplitude > 0.0
                                   ? std::abs(c.ssm_amplitude - res.amplitude) / res.amplitude
                                   : std::numeric_limits<double>::infinity();
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace ssmfrc
