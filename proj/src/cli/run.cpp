#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "plot.hpp"
#include "ssmfrc/backmap_oracle.hpp"
#include "ssmfrc/cli.hpp"
#include "ssmfrc/errors.hpp"
#include "ssmfrc/reduced.hpp"
#include "ssmfrc/ssm_nonauto.hpp"

namespace ssmfrc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
}

std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a * std::pow(b / a, static_cast<double>(i) / (n - 1)));
    return out;
}

/// Writes through a temporary so a crash never leaves a half-written file behind.
void write_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".part";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Logger {
    std::ostream& out;
    int verbosity;
    template <class... Args>
    void at(int level, const Args&... args) const {
        if (verbosity < level) return;
        (out << ... << args) << '\n';
    }
};

AutonomousSSM autonomous_with_cache(const MechanicalSystem& sys, const SpectralDecomposition& dec, const RunConfig& cfg,
                                    const std::optional<fs::path>& cache_dir, const Logger& log) {
    if (!cache_dir) return build_autonomous(sys, dec, cfg.order_M);
    const std::string hash = model_hash(sys, cfg.order_M, cfg.master_mode);
    const fs::path file = *cache_dir / ("w0-" + hash + ".json");
    if (fs::is_regular_file(file)) {
        AutonomousSSM cached;
        if (deserialize_autonomous(read_text(file), hash, sys, dec, cached)) {
            log.at(1, "autonomous coefficients loaded from ", file.string());
            return cached;
        }
        log.at(1, "ignoring stale cache entry ", file.string());
    }
    AutonomousSSM ssm = build_autonomous(sys, dec, cfg.order_M);
    std::error_code ec;
    fs::create_directories(*cache_dir, ec);
    try {
        write_file(file, serialize_autonomous(ssm, hash));
        log.at(1, "autonomous coefficients cached in ", file.string());
    } catch (const std::exception& e) {
        log.at(0, "warning: cache not written: ", e.what());
    }
    return ssm;
}

std::string frc_table(const FrcResult& result, const std::string& manifest_hash, const std::string& config_hash,
                      int coord) {
    std::ostringstream s;
    s << "# ssmfrc forced response table, format " << kTableFormat << "\n";
    s << "# manifest_sha256 " << manifest_hash << "\n";
    s << "# config_sha256 " << config_hash << "\n";
    s << "# amplitude: max |x_" << coord << "| over one forcing period\n";
    s << "Omega\trho\tpsi\tstability\tamplitude\tbranch_id\n";
    for (const auto& p : result.points)
        s << format_double(p.Omega) << '\t' << format_double(p.rho) << '\t' << format_double(p.psi) << '\t'
          << to_string(p.stability) << '\t' << format_double(p.amplitude) << '\t' << p.branch_id << '\n';
    return s.str();
}

/// Cartesian velocity of (u, v) = rho (cos psi, sin psi) in the rotating frame.
Eigen::Vector2d cartesian_field(const PolarReducedModel& model, double u, double v, double floor) {
    const double rho = std::max(std::hypot(u, v), floor);
    const double psi = std::atan2(v, u);
    const Eigen::Vector2d r = evaluate_polar_rhs(model, rho, psi);
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    return {r(0) * c - rho * r(1) * s, r(0) * s + rho * r(1) * c};
}

std::string phase_plane(const PolarReducedModel& model, const std::vector<FixedPoint>& fixed, double rho_max,
                        const PhasePlaneRequest& req) {
    double extent = rho_max;
    if (req.extent)
        extent = *req.extent;
    else if (!fixed.empty())
        extent = 1.5 * fixed.back().rho;
    const double floor = 1e-12 * extent;
    std::ostringstream s;
    s << "# reduced dynamics in the rotating frame, Omega " << format_double(model.Omega) << ", epsilon "
      << format_double(model.epsilon) << "\n";
    for (const auto& f : fixed)
        s << "# fixed_point rho " << format_double(f.rho) << " psi " << format_double(f.psi) << " "
          << to_string(classify_stability(model, f.rho, f.psi)) << "\n";
    s << "kind\tid\tt\tu\tv\tdu\tdv\n";
    const int g = req.grid;
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            const double u = -extent + 2.0 * extent * i / (g - 1);
            const double v = -extent + 2.0 * extent * j / (g - 1);
            const Eigen::Vector2d d = cartesian_field(model, u, v, floor);
            s << "grid\t" << i * g + j << "\t0\t" << format_double(u) << '\t' << format_double(v) << '\t'
              << format_double(d(0)) << '\t' << format_double(d(1)) << '\n';
        }

    // RK4 trajectories from a coarse seed grid
    const int t = req.trajectories;
    if (t <= 0) return s.str();
    const double decay = std::max(std::abs(model.lambda1.real()), 1e-12);
    const auto f0 = model.functions(extent);
    const double turn = std::abs(model.lambda1.imag() - model.Omega) + std::abs(f0.b - model.Omega);
    const double dt = 0.2 / std::max(decay, turn);
    const int steps = static_cast<int>(std::min(20000.0, std::ceil(6.0 / decay / dt)));
    const int stride = std::max(1, steps / 400);
    int id = 0;
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j, ++id) {
            Eigen::Vector2d z(-extent + 2.0 * extent * (i + 0.5) / t, -extent + 2.0 * extent * (j + 0.5) / t);
            for (int k = 0; k <= steps; ++k) {
                if (k % stride == 0 || k == steps)
                    s << "trajectory\t" << id << '\t' << format_double(k * dt) << '\t' << format_double(z(0)) << '\t'
                      << format_double(z(1)) << "\t\t\n";
                if (k == steps || z.norm() > 3.0 * extent || !z.allFinite()) break;
                auto field = [&](const Eigen::Vector2d& w) { return cartesian_field(model, w(0), w(1), floor); };
                const Eigen::Vector2d k1 = field(z);
                const Eigen::Vector2d k2 = field(z + 0.5 * dt * k1);
                const Eigen::Vector2d k3 = field(z + 0.5 * dt * k2);
                const Eigen::Vector2d k4 = field(z + dt * k3);
                z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
    return s.str();
}

json residual_summary(const AutonomousSSM& ssm, const SpectralDecomposition& dec, const MechanicalSystem& sys,
                      const Eigen::VectorXcd& F, const RunConfig& cfg, double rho_max) {
    json out;
    json auto_rows = json::array();
    for (const double frac : {0.01, 0.1, 1.0}) {
        const double r = frac * rho_max;
        std::vector<Complex> samples;
        for (int i = 0; i < 8; ++i) samples.push_back(std::polar(r, 0.3 + 0.785 * i));
        auto_rows.push_back({{"radius", r}, {"residual", autonomous_invariance_residual(ssm, dec, sys, samples)}});
    }
    out["autonomous"] = auto_rows;
    out["autonomous_conjugacy_defect"] = conjugate_symmetry_defect(ssm, dec);
    const double Omega = 0.5 * (cfg.omega_min + cfg.omega_max);
    try {
        const auto na = build_nonautonomous(ssm, F, Omega);
        std::vector<InvarianceSample> samples;
        for (int i = 0; i < 8; ++i) samples.push_back({std::polar(0.1 * rho_max, 0.3 + 0.785 * i), 0.4 + 0.8 * i});
        out["full"] = {{"Omega", Omega},
                       {"epsilon", cfg.epsilon},
                       {"radius", 0.1 * rho_max},
                       {"residual", full_invariance_residual(ssm, na, dec, sys, F, cfg.epsilon, samples)}};
        out["nonautonomous_conjugacy_defect"] = nonautonomous_conjugacy_defect(na, dec);
    } catch (const ResonanceError& e) {
        out["full"] = {{"Omega", Omega}, {"error", e.what()}};
    }
    return out;
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

SlopeMeasurement autonomous_residual_slope(const AutonomousSSM& ssm, const SpectralDecomposition& dec,
                                           const MechanicalSystem& sys, double r_lo, double r_hi, int points) {
    SlopeMeasurement m;
    m.x = logspace(r_lo, r_hi, points);
    for (const double r : m.x) {
        std::vector<Complex> samples;
        for (int i = 0; i < 8; ++i) samples.push_back(std::polar(r, 0.3 + 0.785 * i));
        m.residual.push_back(autonomous_invariance_residual(ssm, dec, sys, samples));
    }
    m.slope = loglog_slope(m.x, m.residual);
    return m;
}

SlopeMeasurement epsilon_residual_slope(const AutonomousSSM& ssm, const SpectralDecomposition& dec,
                                        const MechanicalSystem& sys, double Omega, double radius, double eps_lo,
                                        double eps_hi, int points) {
    const Eigen::VectorXcd F = modal_forcing(dec, sys.forcing_shape);
    const auto na = build_nonautonomous(ssm, F, Omega);
    std::vector<InvarianceSample> samples;
    for (int i = 0; i < 8; ++i) samples.push_back({std::polar(radius, 0.3 + 0.785 * i), 0.4 + 0.8 * i});
    SlopeMeasurement m;
    m.x = logspace(eps_lo, eps_hi, points);
    for (const double eps : m.x) m.residual.push_back(full_invariance_residual(ssm, na, dec, sys, F, eps, samples));
    m.slope = loglog_slope(m.x, m.residual);
    return m;
}

int run_frc(const RunConfig& cfg, const RunOptions& options, std::ostream& log_stream) {
    const Logger log{log_stream, options.verbosity};
    try {
        const MechanicalSystem sys = build_model(cfg);
        const FirstOrderSystem fo(sys);
        DecomposeOptions dopt;
        dopt.master_mode = cfg.master_mode;
        const SpectralDecomposition dec = decompose(fo, dopt);
        const NonresonanceReport nr = check_nonresonance(dec, cfg.order_M);
        log.at(1, "n = ", sys.n(), ", lambda_1 = ", dec.lambda1().real(), " + ", dec.lambda1().imag(),
               "i, sigma = ", dec.sigma_E, ", margin = ", nr.min_margin);
        require_nonresonant(nr);

        const AutonomousSSM ssm = autonomous_with_cache(sys, dec, cfg, options.cache_dir, log);
        const double radius = validated_radius(ssm, dec, sys, cfg.radius_tolerance);
        if (!cfg.rho_max && radius <= cfg.rho_min) {
            log.at(0, "error: the expansion is not validated at any radius above solver.rho_min; set solver.rho_max");
            return kModelRejected;
        }
        const double rho_max = cfg.rho_max ? *cfg.rho_max : radius;
        log.at(1, "validated radius ", radius, ", searching rho in [", cfg.rho_min, ", ", rho_max, "]");

        const Eigen::VectorXcd F = modal_forcing(dec, sys.forcing_shape);
        const int coord = amplitude_dof(cfg);
        const auto omegas = linspace(cfg.omega_min, cfg.omega_max, cfg.samples);

        SweepOptions sopt;
        sopt.workers = options.workers;
        sopt.keep_going = true;
        sopt.roots.rho_min = cfg.rho_min;
        sopt.roots.rho_max = rho_max;
        sopt.roots.log_points = cfg.log_points;
        sopt.roots.linear_points = cfg.linear_points;
        sopt.amplitude = [&](const NonAutonomousSSM& na, const FixedPoint& fp) {
            return backmap_orbit(ssm, na, dec, fp.rho, fp.psi, cfg.epsilon, coord, cfg.orbit_samples).amplitude;
        };
        const FrcResult result = sweep_frc(ssm, F, omegas, cfg.epsilon, sopt);
        log.at(1, "solved ", omegas.size() - result.failures.size(), " of ", omegas.size(), " samples, ",
               result.points.size(), " fixed points, ", result.events.size(), " count changes");

        json manifest;
        manifest["format"] = "ssmfrc-manifest";
        manifest["format_version"] = kManifestFormat;
        manifest["table_format_version"] = kTableFormat;
        manifest["library_version"] = kLibraryVersion;
        manifest["config"] = cfg.canonical;
        const std::string config_hash = sha256_hex(cfg.canonical.dump());
        manifest["config_sha256"] = config_hash;
        manifest["model_sha256"] = model_hash(sys, cfg.order_M, cfg.master_mode);
        json eig = json::array();
        for (Eigen::Index i = 0; i < dec.lambdas.size(); ++i) eig.push_back(complex_json(dec.lambdas(i)));
        manifest["spectrum"] = {{"eigenvalues", eig},
                                {"master_index", dec.master},
                                {"structural", dec.structural},
                                {"rayleigh_alpha", dec.rayleigh_alpha},
                                {"rayleigh_beta", dec.rayleigh_beta},
                                {"sigma_E", dec.sigma_E}};
        manifest["nonresonance"] = {{"passed", nr.passed},
                                    {"min_margin", nr.min_margin},
                                    {"small_damping_ratio", nr.small_damping_ratio},
                                    {"offending_mode", nr.offending_mode},
                                    {"offending_a", nr.offending_a},
                                    {"offending_b", nr.offending_b}};
        json gam = json::array();
        for (const auto& g : ssm.gammas) gam.push_back(complex_json(g));
        manifest["ssm"] = {{"order_M", ssm.M},
                           {"expansion_order", ssm.order},
                           {"gammas", gam},
                           {"validated_radius", radius},
                           {"rho_max", rho_max}};
        manifest["residuals"] = residual_summary(ssm, dec, sys, F, cfg, rho_max);
        manifest["tolerances"] = {{"coefficient_drop", kDropTolerance},
                                  {"divisor_relative", 1e-12},
                                  {"root_refinement", "toms748, 50-bit"},
                                  {"marginal_stability", 1e-9},
                                  {"stitch_radius", 1.5},
                                  {"radius_tolerance", cfg.radius_tolerance}};
        json events = json::array();
        for (const auto& ev : result.events)
            events.push_back({{"Omega_before", ev.Omega_before},
                              {"Omega_after", ev.Omega_after},
                              {"count_before", ev.count_before},
                              {"count_after", ev.count_after},
                              {"branches", ev.branches}});
        json failures = json::array();
        for (const auto& f : result.failures) failures.push_back({{"sample", f.sample}, {"Omega", f.Omega}, {"error", f.message}});
        manifest["sweep"] = {{"samples", omegas.size()},
                             {"points", result.points.size()},
                             {"amplitude_dof", coord},
                             {"count_changes", events},
                             {"failures", failures}};
        json outputs = json::array({"frc.tsv"});
        if (cfg.plot) outputs.push_back("frc.svg");
        for (std::size_t k = 0; k < cfg.phase_plane.omegas.size(); ++k) outputs.push_back("phase_" + std::to_string(k) + ".tsv");
        manifest["outputs"] = outputs;

        // render everything before touching the output directory
        std::vector<std::pair<std::string, std::string>> files;
        bool phase_failed = false;
        for (std::size_t k = 0; k < cfg.phase_plane.omegas.size(); ++k) {
            const double Om = cfg.phase_plane.omegas[k];
            std::string text;
            try {
                const auto na = build_nonautonomous(ssm, F, Om);
                const auto model = PolarReducedModel::from_ssm(ssm, na, cfg.epsilon);
                const auto fixed = solve_fixed_points(model, sopt.roots);
                text = phase_plane(model, fixed, rho_max, cfg.phase_plane);
            } catch (const ResonanceError& e) {
                log.at(0, "error: phase plane at Omega = ", Om, ": ", e.what());
                text = "# phase plane unavailable at Omega = " + format_double(Om) + ": " + e.what() + "\n";
                phase_failed = true;
            }
            files.emplace_back("phase_" + std::to_string(k) + ".tsv", std::move(text));
        }
        const std::string manifest_text = manifest.dump(2) + "\n";
        const std::string manifest_hash = sha256_hex(manifest_text);
        files.emplace_back("frc.tsv", frc_table(result, manifest_hash, config_hash, coord));
        if (cfg.plot) files.emplace_back("frc.svg", render_frc_svg(result, "max |x_" + std::to_string(coord) + "|"));
        files.emplace_back("manifest.json", manifest_text);

        fs::create_directories(options.output_dir);
        for (const auto& [name, content] : files) write_file(options.output_dir / name, content);
        log.at(1, "wrote ", files.size(), " files to ", options.output_dir.string());

        if (!result.failures.empty() || phase_failed) {
            for (const auto& f : result.failures) {
                try {
                    std::rethrow_exception(f.error);
                } catch (const ResonanceError& e) {
                    log.at(0, "error: resonance at Omega = ", f.Omega, " (row ", e.row, ", k = (", e.k1, ", ", e.k2,
                           ")", e.sign > 0 ? ", e^{+i phi}" : (e.sign < 0 ? ", e^{-i phi}" : ""), "): ", e.what());
                } catch (const std::exception& e) {
                    log.at(0, "error: sample at Omega = ", f.Omega, " failed: ", e.what());
                }
            }
            log.at(0, "partial results for the solved samples were written");
            return kModelRejected;
        }
        return kOk;
    } catch (const ResonanceError& e) {
        log.at(0, "error: resonance (row ", e.row, ", k = (", e.k1, ", ", e.k2, ")): ", e.what());
        return kModelRejected;
    } catch (const ModelError& e) {
        log.at(0, "error: model rejected: ", e.what());
        return kModelRejected;
    } catch (const SpectralError& e) {
        log.at(0, "error: spectrum rejected: ", e.what());
        return kModelRejected;
    } catch (const std::exception& e) {
        log.at(0, "error: ", e.what());
        return kFailure;
    }
}

std::vector<CheckResult> run_verify(const RunConfig& cfg, const VerifyOptions& options, std::ostream& log_stream) {
    const Logger log{log_stream, options.verbosity};
    std::vector<CheckResult> checks;
    auto report = [&](std::string name, bool ok, std::string detail) {
        log.at(0, ok ? "PASS " : "FAIL ", name, ": ", detail);
        checks.push_back({std::move(name), ok, std::move(detail)});
    };
    auto sci = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", v);
        return std::string(buf);
    };

    // product and power recurrences on random coefficients
    {
        std::mt19937_64 rng(20240611);
        std::normal_distribution<double> nd;
        auto draw = [&] { return Complex(nd(rng), nd(rng)); };
        double worst_product = 0.0;
        double worst_power = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const Complex al = draw(), be = draw(), ga = draw(), de = draw(), ep = draw();
            MultiIndexPolynomial w(4), r1(4), r2(4);
            w.set({3, 0}, al);
            w.set({2, 1}, be);
            r1.set({0, 2}, ga);
            r1.set({1, 1}, de);
            r2.set({0, 2}, ep);
            const Complex expect = 3.0 * al * ga + 2.0 * be * de + be * ep;
            const Complex got = derivative_product_coefficient(w, r1, r2, {2, 2});
            worst_product = std::max(worst_product, std::abs(got - expect) / std::abs(expect));

            MultiIndexPolynomial v(6);
            v.set({3, 0}, al);
            v.set({2, 1}, be);
            const Complex expect2 = 2.0 * al * be;
            const Complex got2 = power_coefficient(v, 2, {5, 1}, v);
            worst_power = std::max(worst_power, std::abs(got2 - expect2) / std::abs(expect2));
        }
        report("recurrence.derivative_product", worst_product <= 1e-12, "max relative error " + sci(worst_product));
        report("recurrence.power", worst_power <= 1e-12, "max relative error " + sci(worst_power));
    }

    if (cfg.kind != ModelKind::Beam) {
        report("model.beam", false, "the coefficient cross-check needs model.type = \"beam\"");
        return checks;
    }

    try {
        const MechanicalSystem sys = build_model(cfg);
        const FirstOrderSystem fo(sys);
        DecomposeOptions dopt;
        dopt.master_mode = cfg.master_mode;
        const SpectralDecomposition dec = decompose(fo, dopt);
        const NonresonanceReport nr = check_nonresonance(dec, cfg.order_M);
        report("spectrum.nonresonance", nr.passed,
               "sigma " + std::to_string(nr.sigma_E) + ", min margin " + sci(nr.min_margin));

        SpectralDecomposition used = dec;
        if (options.perturb_T != 0.0) {
            used.T.col(used.master) *= 1.0 + options.perturb_T;
            used.T.col(used.master + 1) *= 1.0 + options.perturb_T;
            log.at(0, "fault injection: master columns of T scaled by 1 + ", options.perturb_T);
        }
        const AutonomousSSM ssm = build_autonomous(sys, used, cfg.order_M);
        const Eigen::VectorXcd F = modal_forcing(used, sys.forcing_shape);

        double worst = 0.0;
        std::string where;
        const double mid = 0.5 * (cfg.omega_min + cfg.omega_max);
        for (const double Om : {cfg.omega_min, mid, cfg.omega_max}) {
            const auto an = analytic_ssm_coefficients(cfg.beam, dec, Om);
            const auto na = build_nonautonomous(ssm, F, Om);
            const std::pair<const char*, std::pair<Complex, Complex>> pairs[] = {
                {"gamma1", {ssm.gammas.at(0), an.gamma1}},
                {"c10", {na.c10, an.c10}},
                {"c11", {na.c_ii.at(0), an.c11}},
                {"d20", {na.d_iplus.at(0), an.d20}}};
            for (const auto& [name, v] : pairs) {
                const double err = std::abs(v.first - v.second) / std::abs(v.second);
                if (!(err <= worst)) {
                    worst = err;
                    where = std::string(name) + " at Omega " + format_double(Om);
                }
            }
        }
        report("coefficients.analytic_vs_recurrence", worst <= 1e-10, "max relative error " + sci(worst) + " (" + where + ")");

        const double slope_needed = 0.95 * (2 * cfg.order_M + 2);
        const auto auto_slope = autonomous_residual_slope(ssm, used, sys, 1e-2, 1e-1);
        report("residual.autonomous_slope", auto_slope.slope >= slope_needed,
               "slope " + format_double(auto_slope.slope) + " over |s| in [1e-2, 1e-1], need >= " +
                   format_double(slope_needed));
        const auto eps_slope = epsilon_residual_slope(ssm, used, sys, mid, 1e-4, 1e-4, 1e-2);
        report("residual.epsilon_slope", eps_slope.slope >= 1.8,
               "slope " + format_double(eps_slope.slope) + " over eps in [1e-4, 1e-2] at |s| = 1e-4, need >= 1.8");

        const auto na_mid = build_nonautonomous(ssm, F, mid);
        const double defect = std::max(conjugate_symmetry_defect(ssm, used), nonautonomous_conjugacy_defect(na_mid, used));
        report("coefficients.conjugacy", defect <= 1e-12, "max relative defect " + sci(defect));

        if (cfg.verify_oracle) {
            RootSearchOptions roots;
            roots.rho_min = cfg.rho_min;
            roots.rho_max = cfg.rho_max ? *cfg.rho_max : validated_radius(ssm, used, sys, cfg.radius_tolerance);
            roots.log_points = cfg.log_points;
            roots.linear_points = cfg.linear_points;
            const auto probes = linspace(cfg.omega_min, cfg.omega_max, cfg.verify_probes);
            const auto cmp = compare_stable_branches(fo, used, ssm, F, cfg.epsilon, probes, amplitude_dof(cfg), roots);
            double worst_amp = 0.0;
            bool all_converged = !cmp.empty();
            for (const auto& c : cmp) {
                log.at(1, "  Omega ", c.Omega, ": ssm ", c.ssm_amplitude, ", oracle ", c.oracle_amplitude, " (",
                       c.periods, " periods)");
                all_converged = all_converged && c.converged;
                worst_amp = std::max(worst_amp, c.relative_error);
            }
            report("oracle.amplitudes", all_converged && worst_amp <= cfg.verify_tolerance,
                   std::to_string(cmp.size()) + " stable states, max relative error " + sci(worst_amp));
        }
    } catch (const std::exception& e) {
        report("model.build", false, e.what());
    }
    return checks;
}

}  // namespace ssmfrc::cli
