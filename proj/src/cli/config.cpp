#include "ssmfrc/cli.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ssmfrc/errors.hpp"

namespace ssmfrc::cli {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error([&] {
          std::string msg = "invalid config:";
          for (const auto& i : issues) msg += "\n  " + i;
          return msg;
      }()),
      issues_(std::move(issues)) {}

namespace {

/// Reads typed fields out of one JSON object and records problems by path.
class Section {
public:
    Section(const json* node, std::string path, std::vector<std::string>& issues)
        : node_(node), path_(std::move(path)), issues_(issues) {
        if (node_ && !node_->is_object()) {
            issues_.push_back(path_ + ": must be an object");
            node_ = nullptr;
        }
    }

    bool present() const { return node_ != nullptr; }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* get(const std::string& key) {
        seen_.insert(key);
        if (!node_) return nullptr;
        const auto it = node_->find(key);
        return it == node_->end() || it->is_null() ? nullptr : &*it;
    }

    Section child(const std::string& key) { return Section(get(key), field(key), issues_); }

    std::optional<double> number(const std::string& key, bool required) {
        const json* v = get(key);
        if (!v) {
            if (required) issues_.push_back(field(key) + ": required number is missing");
            return std::nullopt;
        }
        if (!v->is_number()) {
            issues_.push_back(field(key) + ": must be a number");
            return std::nullopt;
        }
        const double d = v->get<double>();
        if (!std::isfinite(d)) {
            issues_.push_back(field(key) + ": must be finite");
            return std::nullopt;
        }
        return d;
    }

    void positive(const std::string& key, double& out) {
        if (auto v = number(key, true)) {
            if (*v <= 0.0)
                issues_.push_back(field(key) + ": must be positive (got " + format_double(*v) + ")");
            else
                out = *v;
        }
    }

    void non_negative(const std::string& key, double& out, bool required) {
        if (auto v = number(key, required)) {
            if (*v < 0.0)
                issues_.push_back(field(key) + ": must be non-negative (got " + format_double(*v) + ")");
            else
                out = *v;
        }
    }

    std::optional<int> integer(const std::string& key, bool required, int lo, int hi) {
        const json* v = get(key);
        if (!v) {
            if (required) issues_.push_back(field(key) + ": required integer is missing");
            return std::nullopt;
        }
        if (!v->is_number_integer()) {
            issues_.push_back(field(key) + ": must be an integer");
            return std::nullopt;
        }
        const auto i = v->get<long long>();
        if (i < lo || i > hi) {
            issues_.push_back(field(key) + ": must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] (got " +
                              std::to_string(i) + ")");
            return std::nullopt;
        }
        return static_cast<int>(i);
    }

    std::optional<bool> boolean(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) {
            issues_.push_back(field(key) + ": must be true or false");
            return std::nullopt;
        }
        return v->get<bool>();
    }

    std::optional<std::string> string(const std::string& key, bool required) {
        const json* v = get(key);
        if (!v) {
            if (required) issues_.push_back(field(key) + ": required string is missing");
            return std::nullopt;
        }
        if (!v->is_string()) {
            issues_.push_back(field(key) + ": must be a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    /// Flags keys that were never looked up.
    void reject_unknown() {
        if (!node_) return;
        for (const auto& [key, value] : node_->items())
            if (!seen_.count(key)) issues_.push_back(field(key) + ": unknown field");
    }

private:
    const json* node_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
};

std::string file_digest(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

/// Tokens of the non-comment content, skipping blank lines.
std::vector<std::vector<std::string>> tokenize(std::istream& in) {
    std::vector<std::vector<std::string>> lines;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(strip_comment(line));
        std::vector<std::string> toks;
        std::string t;
        while (ls >> t) toks.push_back(t);
        if (!toks.empty()) lines.push_back(std::move(toks));
    }
    return lines;
}

double parse_number(const std::string& tok, const std::string& what) {
    double v = 0.0;
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) throw ModelError(what + ": '" + tok + "' is not a finite number");
    return v;
}

long parse_index(const std::string& tok, const std::string& what) {
    long v = 0;
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ModelError(what + ": '" + tok + "' is not an integer");
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

Eigen::MatrixXd read_matrix(std::istream& in) {
    const auto lines = tokenize(in);
    if (lines.empty()) throw ModelError("matrix file is empty");
    const auto& head = lines.front();
    if (head.size() != 3 || (head[0] != "dense" && head[0] != "sparse"))
        throw ModelError("matrix header must be 'dense <rows> <cols>' or 'sparse <rows> <cols>'");
    const long rows = parse_index(head[1], "rows");
    const long cols = parse_index(head[2], "cols");
    if (rows <= 0 || cols <= 0) throw ModelError("matrix dimensions must be positive");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    if (head[0] == "dense") {
        std::vector<double> values;
        for (std::size_t l = 1; l < lines.size(); ++l)
            for (const auto& t : lines[l]) values.push_back(parse_number(t, "entry"));
        if (static_cast<long>(values.size()) != rows * cols)
            throw ModelError("dense matrix expects " + std::to_string(rows * cols) + " values, found " +
                             std::to_string(values.size()));
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) A(i, j) = values[static_cast<std::size_t>(i * cols + j)];
        return A;
    }
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto& t = lines[l];
        if (t.size() != 3) throw ModelError("sparse entry on data line " + std::to_string(l) + " needs 'row col value'");
        const long i = parse_index(t[0], "row");
        const long j = parse_index(t[1], "col");
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw ModelError("sparse entry (" + t[0] + ", " + t[1] + ") is out of range");
        A(i, j) += parse_number(t[2], "value");
    }
    return A;
}

Eigen::MatrixXd read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path.string());
    try {
        return read_matrix(in);
    } catch (const ModelError& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
}

std::vector<NonlinearForce> read_nonlinearity(std::istream& in, int n) {
    const auto lines = tokenize(in);
    if (lines.empty() || lines.front().size() != 2 || lines.front()[0] != "nonlinearity")
        throw ModelError("nonlinearity header must be 'nonlinearity <n>'");
    if (parse_index(lines.front()[1], "n") != n)
        throw ModelError("nonlinearity is declared for n = " + lines.front()[1] + " but the model has n = " +
                         std::to_string(n));
    std::map<int, ScalarPolynomial> by_dof;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto& t = lines[l];
        if (t.size() < 3) throw ModelError("term on data line " + std::to_string(l) + " needs 'dof coefficient var^exp ...'");
        const long dof = parse_index(t[0], "dof");
        if (dof < 0 || dof >= n) throw ModelError("term dof " + t[0] + " is out of range");
        PolynomialTerm term;
        term.coefficient = parse_number(t[1], "coefficient");
        for (std::size_t f = 2; f < t.size(); ++f) {
            const auto caret = t[f].find('^');
            const long var = parse_index(t[f].substr(0, caret), "variable");
            const long exp = caret == std::string::npos ? 1 : parse_index(t[f].substr(caret + 1), "exponent");
            if (var < 0 || var >= 2 * n) throw ModelError("variable " + std::to_string(var) + " is out of range");
            if (exp < 1) throw ModelError("exponents must be at least 1");
            term.powers.emplace_back(static_cast<int>(var), static_cast<int>(exp));
        }
        by_dof[static_cast<int>(dof)].terms.push_back(std::move(term));
    }
    std::vector<NonlinearForce> out;
    for (auto& [dof, poly] : by_dof) out.push_back({dof, std::move(poly)});
    return out;
}

std::vector<NonlinearForce> read_nonlinearity_file(const std::filesystem::path& path, int n) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path.string());
    try {
        return read_nonlinearity(in, n);
    } catch (const ModelError& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    std::vector<std::string> issues;
    RunConfig cfg;
    Section root(&j, "", issues);
    if (!root.present()) throw ConfigError(issues);

    json canon;
    Section model = root.child("model");
    if (!model.present()) issues.push_back("model: required section is missing");
    const auto type = model.string("type", model.present());
    if (type && *type != "beam" && *type != "matrices") issues.push_back("model.type: must be \"beam\" or \"matrices\"");
    cfg.kind = type && *type == "matrices" ? ModelKind::Matrices : ModelKind::Beam;

    Section beam = model.child("beam");
    Section mats = model.child("matrices");
    if (type && *type == "beam") {
        if (!beam.present()) issues.push_back("model.beam: required section is missing");
        auto& b = cfg.beam;
        beam.positive("L", b.L);
        beam.positive("h", b.h);
        beam.positive("b", b.b);
        beam.positive("rho", b.rho);
        beam.positive("E", b.E_mod);
        if (auto v = beam.number("kappa", true)) b.kappa = *v;  // either sign: hardening or softening
        beam.non_negative("alpha", b.alpha, true);
        beam.non_negative("beta", b.beta, true);
        if (auto v = beam.number("P", true)) b.P = *v;
        if (auto v = beam.integer("elements", true, 2, 2000)) b.elements = *v;
        beam.reject_unknown();
        canon["model"] = {{"type", "beam"},
                          {"beam",
                           {{"L", b.L}, {"h", b.h}, {"b", b.b}, {"rho", b.rho}, {"E", b.E_mod}, {"kappa", b.kappa},
                            {"alpha", b.alpha}, {"beta", b.beta}, {"P", b.P}, {"elements", b.elements}}}};
        if (mats.present()) issues.push_back("model.matrices: not allowed when model.type is \"beam\"");
    } else if (type && *type == "matrices") {
        if (!mats.present()) issues.push_back("model.matrices: required section is missing");
        json files;
        auto file = [&](const char* key, std::filesystem::path& out, bool required) {
            if (auto s = mats.string(key, required)) {
                const std::filesystem::path p = std::filesystem::path(*s).is_absolute() ? std::filesystem::path(*s) : base_dir / *s;
                if (!std::filesystem::is_regular_file(p))
                    issues.push_back(mats.field(key) + ": file not found: " + p.string());
                else {
                    out = p;
                    files[key] = file_digest(p);
                }
            }
        };
        file("M", cfg.matrices.M, true);
        file("C", cfg.matrices.C, true);
        file("K", cfg.matrices.K, true);
        file("forcing", cfg.matrices.forcing, true);
        file("nonlinearity", cfg.matrices.nonlinearity, false);
        mats.reject_unknown();
        canon["model"] = {{"type", "matrices"}, {"sha256", files}};
        if (beam.present()) issues.push_back("model.beam: not allowed when model.type is \"matrices\"");
    }
    model.reject_unknown();

    Section ssm = root.child("ssm");
    if (auto v = ssm.integer("order", false, 1, 8)) cfg.order_M = *v;
    if (auto v = ssm.integer("master_mode", false, 0, 100000)) cfg.master_mode = *v;
    if (auto v = ssm.number("radius_tolerance", false)) {
        if (*v <= 0.0 || *v >= 1.0)
            issues.push_back("ssm.radius_tolerance: must be in (0, 1)");
        else
            cfg.radius_tolerance = *v;
    }
    ssm.reject_unknown();
    canon["ssm"] = {{"order", cfg.order_M}, {"master_mode", cfg.master_mode}, {"radius_tolerance", cfg.radius_tolerance}};

    Section sweep = root.child("sweep");
    if (!sweep.present()) issues.push_back("sweep: required section is missing");
    sweep.positive("omega_min", cfg.omega_min);
    sweep.positive("omega_max", cfg.omega_max);
    if (cfg.omega_min > 0.0 && cfg.omega_max > 0.0 && cfg.omega_max < cfg.omega_min)
        issues.push_back("sweep.omega_max: must not be below sweep.omega_min");
    if (auto v = sweep.integer("samples", true, 1, 1000000)) cfg.samples = *v;
    sweep.non_negative("epsilon", cfg.epsilon, true);
    sweep.reject_unknown();
    canon["sweep"] = {{"omega_min", cfg.omega_min},
                      {"omega_max", cfg.omega_max},
                      {"samples", cfg.samples},
                      {"epsilon", cfg.epsilon}};

    Section solver = root.child("solver");
    if (auto v = solver.number("rho_min", false)) {
        if (*v <= 0.0)
            issues.push_back("solver.rho_min: must be positive");
        else
            cfg.rho_min = *v;
    }
    if (auto v = solver.number("rho_max", false)) {
        if (*v <= cfg.rho_min)
            issues.push_back("solver.rho_max: must exceed solver.rho_min");
        else
            cfg.rho_max = *v;
    }
    if (auto v = solver.integer("log_points", false, 16, 10000000)) cfg.log_points = *v;
    if (auto v = solver.integer("linear_points", false, 0, 10000000)) cfg.linear_points = *v;
    solver.reject_unknown();
    canon["solver"] = {{"rho_min", cfg.rho_min},
                       {"rho_max", cfg.rho_max ? json(*cfg.rho_max) : json("auto")},
                       {"log_points", cfg.log_points},
                       {"linear_points", cfg.linear_points}};

    Section output = root.child("output");
    if (auto v = output.integer("amplitude_dof", false, 0, 100000000)) cfg.amplitude_dof = *v;
    if (auto v = output.integer("orbit_samples", false, 8, 1000000)) cfg.orbit_samples = *v;
    if (auto v = output.boolean("plot")) cfg.plot = *v;
    Section phase = output.child("phase_plane");
    if (const json* om = phase.get("omegas")) {
        if (!om->is_array())
            issues.push_back(phase.field("omegas") + ": must be an array of numbers");
        else
            for (const auto& o : *om) {
                if (!o.is_number() || !(o.get<double>() > 0.0)) {
                    issues.push_back(phase.field("omegas") + ": entries must be positive numbers");
                    break;
                }
                cfg.phase_plane.omegas.push_back(o.get<double>());
            }
    }
    if (auto v = phase.integer("grid", false, 3, 2001)) cfg.phase_plane.grid = *v;
    if (auto v = phase.integer("trajectories", false, 0, 100)) cfg.phase_plane.trajectories = *v;
    if (auto v = phase.number("extent", false)) {
        if (*v <= 0.0)
            issues.push_back(phase.field("extent") + ": must be positive");
        else
            cfg.phase_plane.extent = *v;
    }
    phase.reject_unknown();
    output.reject_unknown();
    canon["output"] = {{"amplitude_dof", cfg.amplitude_dof ? json(*cfg.amplitude_dof) : json("default")},
                       {"orbit_samples", cfg.orbit_samples},
                       {"plot", cfg.plot},
                       {"phase_plane",
                        {{"omegas", cfg.phase_plane.omegas},
                         {"grid", cfg.phase_plane.grid},
                         {"trajectories", cfg.phase_plane.trajectories},
                         {"extent", cfg.phase_plane.extent ? json(*cfg.phase_plane.extent) : json("auto")}}}};

    Section verify = root.child("verify");
    if (auto v = verify.boolean("oracle")) cfg.verify_oracle = *v;
    if (auto v = verify.integer("probes", false, 1, 1000)) cfg.verify_probes = *v;
    if (auto v = verify.number("tolerance", false)) {
        if (*v <= 0.0)
            issues.push_back("verify.tolerance: must be positive");
        else
            cfg.verify_tolerance = *v;
    }
    verify.reject_unknown();
    canon["verify"] = {{"oracle", cfg.verify_oracle}, {"probes", cfg.verify_probes}, {"tolerance", cfg.verify_tolerance}};

    root.reject_unknown();

    // file contents only once the paths are known to be good
    if (issues.empty() && cfg.kind == ModelKind::Matrices) {
        try {
            const Eigen::MatrixXd M = read_matrix_file(cfg.matrices.M);
            const auto n = M.rows();
            auto check_shape = [&](const char* key, const std::filesystem::path& p, Eigen::Index rows, Eigen::Index cols) {
                const Eigen::MatrixXd A = read_matrix_file(p);
                if (A.rows() != rows || A.cols() != cols)
                    issues.push_back(std::string("model.matrices.") + key + ": expected " + std::to_string(rows) + "x" +
                                     std::to_string(cols) + ", file has " + std::to_string(A.rows()) + "x" +
                                     std::to_string(A.cols()));
            };
            check_shape("M", cfg.matrices.M, n, n);
            check_shape("C", cfg.matrices.C, n, n);
            check_shape("K", cfg.matrices.K, n, n);
            check_shape("forcing", cfg.matrices.forcing, n, 1);
            if (!cfg.matrices.nonlinearity.empty()) read_nonlinearity_file(cfg.matrices.nonlinearity, static_cast<int>(n));
            if (cfg.amplitude_dof && *cfg.amplitude_dof >= n)
                issues.push_back("output.amplitude_dof: must be below n = " + std::to_string(n));
        } catch (const ModelError& e) {
            issues.push_back(std::string("model.matrices: ") + e.what());
        }
    }
    if (issues.empty() && cfg.kind == ModelKind::Beam && cfg.amplitude_dof && *cfg.amplitude_dof >= 2 * cfg.beam.elements)
        issues.push_back("output.amplitude_dof: must be below n = " + std::to_string(2 * cfg.beam.elements));

    if (!issues.empty()) throw ConfigError(std::move(issues));
    cfg.canonical = std::move(canon);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open " + path.string()});
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config: ") + e.what()});
    }
    return parse_config(j, path.parent_path());
}

MechanicalSystem build_model(const RunConfig& cfg) {
    if (cfg.kind == ModelKind::Beam) return build_beam(cfg.beam, cfg.epsilon);
    MechanicalSystem sys;
    sys.M = read_matrix_file(cfg.matrices.M);
    sys.C = read_matrix_file(cfg.matrices.C);
    sys.K = read_matrix_file(cfg.matrices.K);
    sys.forcing_shape = read_matrix_file(cfg.matrices.forcing).col(0);
    if (!cfg.matrices.nonlinearity.empty()) sys.nonlinearity = read_nonlinearity_file(cfg.matrices.nonlinearity, sys.n());
    sys.epsilon = cfg.epsilon;
    sys.validate();
    return sys;
}

int amplitude_dof(const RunConfig& cfg) {
    if (cfg.amplitude_dof) return *cfg.amplitude_dof;
    return cfg.kind == ModelKind::Beam ? beam_tip_dof(cfg.beam) : 0;
}

std::string model_hash(const MechanicalSystem& sys, int order_M, int master_mode) {
    std::string s = "ssmfrc-model/1;M=" + std::to_string(order_M) + ";master=" + std::to_string(master_mode) + ";";
    auto put = [&s](const Eigen::MatrixXd& A) {
        s += std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + ":";
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            for (Eigen::Index i = 0; i < A.rows(); ++i) s += format_double(A(i, j)) + ",";
        s += ";";
    };
    put(sys.M);
    put(sys.C);
    put(sys.K);
    for (const auto& nf : sys.nonlinearity) {
        s += "g" + std::to_string(nf.dof) + ":";
        for (const auto& t : nf.polynomial.terms) {
            s += format_double(t.coefficient.real()) + "," + format_double(t.coefficient.imag());
            for (const auto& [v, e] : t.powers) s += "*" + std::to_string(v) + "^" + std::to_string(e);
            s += ";";
        }
    }
    return sha256_hex(s);
}

int resolve_workers(int flag_value, const char* env_value) {
    if (env_value && *env_value) {
        int v = 0;
        const std::string e(env_value);
        const auto [ptr, ec] = std::from_chars(e.data(), e.data() + e.size(), v);
        if (ec == std::errc{} && ptr == e.data() + e.size() && v > 0) return v;
    }
    return std::max(1, flag_value);
}

}  // namespace ssmfrc::cli
