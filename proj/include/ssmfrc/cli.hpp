#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssmfrc/beam.hpp"
#include "ssmfrc/ssm_auto.hpp"
#include "ssmfrc/system.hpp"

namespace ssmfrc::cli {

inline constexpr const char* kLibraryVersion = "0.3.0";
inline constexpr int kTableFormat = 1;
inline constexpr int kManifestFormat = 1;

/// All field-level problems found in a config file.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

enum class ModelKind { Beam, Matrices };

struct MatrixSources {
    std::filesystem::path M, C, K, forcing, nonlinearity;  // nonlinearity may be empty
};

struct PhasePlaneRequest {
    std::vector<double> omegas;
    int grid = 41;
    std::optional<double> extent;  // half-width in (rho cos psi, rho sin psi)
    int trajectories = 6;          // seeds per side
};

struct RunConfig {
    ModelKind kind = ModelKind::Beam;
    BeamConfig beam;
    MatrixSources matrices;

    int order_M = 1;
    int master_mode = 0;
    double radius_tolerance = 1e-3;

    double omega_min = 0.0;
    double omega_max = 0.0;
    int samples = 0;
    double epsilon = 0.0;

    double rho_min = 1e-8;
    std::optional<double> rho_max;
    int log_points = 1500;
    int linear_points = 1500;

    std::optional<int> amplitude_dof;
    int orbit_samples = 256;
    bool plot = true;
    PhasePlaneRequest phase_plane;

    bool verify_oracle = false;
    int verify_probes = 5;
    double verify_tolerance = 0.05;

    /// Normalized config (defaults filled, matrix files replaced by their SHA-256).
    nlohmann::json canonical;
};

/// Parses and validates; throws ConfigError listing every offending field.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Dense or sparse numeric text matrix:
///   dense <rows> <cols>  followed by rows*cols values in row-major order
///   sparse <rows> <cols> followed by "<row> <col> <value>" triplets (0-based)
/// '#' starts a comment.
Eigen::MatrixXd read_matrix(std::istream& in);
Eigen::MatrixXd read_matrix_file(const std::filesystem::path& path);

/// nonlinearity <n>, then one term per line: <dof> <coefficient> <var>^<exp> ...
/// Variables 0..n-1 are displacements, n..2n-1 velocities.
std::vector<NonlinearForce> read_nonlinearity(std::istream& in, int n);
std::vector<NonlinearForce> read_nonlinearity_file(const std::filesystem::path& path, int n);

MechanicalSystem build_model(const RunConfig& cfg);
int amplitude_dof(const RunConfig& cfg);

std::string sha256_hex(const std::string& data);
/// Hash of everything the autonomous coefficients depend on.
std::string model_hash(const MechanicalSystem& sys, int order_M, int master_mode);
/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Worker count: a positive env value wins over the flag.
int resolve_workers(int flag_value, const char* env_value);

struct RunOptions {
    std::filesystem::path output_dir;
    int workers = 1;
    int verbosity = 0;
    std::optional<std::filesystem::path> cache_dir;
};

enum ExitCode { kOk = 0, kFailure = 1, kInvalidConfig = 2, kModelRejected = 3, kVerifyFailed = 4 };

/// Runs the sweep and writes frc.tsv, manifest.json and the optional outputs.
/// Nothing is written unless the model passes every check; a resonance during the
/// sweep flushes the solved samples before returning kModelRejected.
int run_frc(const RunConfig& cfg, const RunOptions& options, std::ostream& log);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SlopeMeasurement {
    std::vector<double> x;
    std::vector<double> residual;
    double slope = 0.0;
};

/// Autonomous residual on |s| = logspace(r_lo, r_hi) (8 angles per radius).
SlopeMeasurement autonomous_residual_slope(const AutonomousSSM& ssm, const SpectralDecomposition& dec,
                                           const MechanicalSystem& sys, double r_lo, double r_hi, int points = 5);

/// Full residual at fixed |s| = radius against eps = logspace(eps_lo, eps_hi).
SlopeMeasurement epsilon_residual_slope(const AutonomousSSM& ssm, const SpectralDecomposition& dec,
                                        const MechanicalSystem& sys, double Omega, double radius, double eps_lo,
                                        double eps_hi, int points = 5);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    double perturb_T = 0.0;  // relative perturbation of the master columns of T (fault injection)
    int verbosity = 0;
};

std::vector<CheckResult> run_verify(const RunConfig& cfg, const VerifyOptions& options, std::ostream& log);

}  // namespace ssmfrc::cli
