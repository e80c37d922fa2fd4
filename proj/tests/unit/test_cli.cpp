#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "../../src/cli/plot.hpp"
#include "ssmfrc/cli.hpp"

using namespace ssmfrc;
using namespace ssmfrc::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    fs::path p = fs::temp_directory_path() /
                 ("ssmfrc_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

json beam_config() {
    return json::parse(R"({
      "model": {"type": "beam", "beam": {"L": 2700, "h": 10, "b": 10, "rho": 1.78e-6, "E": 45e6,
                "kappa": 4, "alpha": 1.25e-4, "beta": 2.5e-4, "P": 0.1, "elements": 5}},
      "ssm": {"order": 1},
      "sweep": {"omega_min": 6.9, "omega_max": 7.1, "samples": 21, "epsilon": 0.002},
      "output": {"phase_plane": {"omegas": [7.0], "grid": 11, "trajectories": 2}}
    })");
}

std::vector<std::string> issues_of(const json& j, const fs::path& base = ".") {
    try {
        parse_config(j, base);
    } catch (const ConfigError& e) {
        return e.issues();
    }
    return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
    for (const auto& i : issues)
        if (i.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Config, ValidBeamConfigParses) {
    const auto cfg = parse_config(beam_config(), ".");
    EXPECT_EQ(cfg.kind, ModelKind::Beam);
    EXPECT_EQ(cfg.beam.elements, 5);
    EXPECT_EQ(cfg.samples, 21);
    EXPECT_EQ(cfg.order_M, 1);
    EXPECT_FALSE(cfg.rho_max.has_value());
    EXPECT_EQ(amplitude_dof(cfg), 8);
    EXPECT_EQ(cfg.canonical["model"]["beam"]["E"], 45e6);
    EXPECT_EQ(cfg.canonical["solver"]["rho_max"], "auto");
}

TEST(Config, EveryProblemIsReportedWithItsPath) {
    json j = beam_config();
    j["model"]["beam"].erase("L");
    j["model"]["beam"]["h"] = -1.0;
    j["model"]["beam"]["elements"] = 1;
    j["sweep"]["omega_max"] = 1.0;
    j["sweep"]["bogus"] = 3;
    j["output"]["plot"] = "yes";
    const auto issues = issues_of(j);
    EXPECT_GE(issues.size(), 6u);
    EXPECT_TRUE(mentions(issues, "model.beam.L: required"));
    EXPECT_TRUE(mentions(issues, "model.beam.h: must be positive"));
    EXPECT_TRUE(mentions(issues, "model.beam.elements"));
    EXPECT_TRUE(mentions(issues, "sweep.omega_max"));
    EXPECT_TRUE(mentions(issues, "sweep.bogus: unknown field"));
    EXPECT_TRUE(mentions(issues, "output.plot"));
}

TEST(Config, NegativeKappaIsAccepted) {
    json j = beam_config();
    j["model"]["beam"]["kappa"] = -4.0;
    EXPECT_TRUE(issues_of(j).empty());
    EXPECT_EQ(parse_config(j, ".").beam.kappa, -4.0);
}

TEST(Config, MissingSectionsAndWrongTypes) {
    EXPECT_TRUE(mentions(issues_of(json::object()), "model: required section is missing"));
    EXPECT_TRUE(mentions(issues_of(json::object()), "sweep: required section is missing"));
    json j = beam_config();
    j["model"]["type"] = "plate";
    EXPECT_TRUE(mentions(issues_of(j), "model.type"));
    j = beam_config();
    j["sweep"]["samples"] = 2.5;
    EXPECT_TRUE(mentions(issues_of(j), "sweep.samples: must be an integer"));
    j = beam_config();
    j["solver"] = {{"rho_min", 1.0}, {"rho_max", 0.5}};
    EXPECT_TRUE(mentions(issues_of(j), "solver.rho_max"));
    j = beam_config();
    j["output"]["amplitude_dof"] = 10;
    EXPECT_TRUE(mentions(issues_of(j), "output.amplitude_dof"));
}

TEST(Config, MatrixModelResolvesFilesRelativeToTheConfig) {
    const auto dir = scratch_dir();
    spit(dir / "M.txt", "dense 2 2\n1 0\n0 1\n");
    spit(dir / "K.txt", "sparse 2 2\n0 0 2\n1 1 2\n0 1 -1\n1 0 -1\n");
    spit(dir / "C.txt", "dense 2 2 # comment\n0.02 0\n0 0.03\n");
    spit(dir / "f.txt", "dense 2 1\n1\n0\n");
    json j = json::parse(R"({
      "model": {"type": "matrices", "matrices": {"M": "M.txt", "C": "C.txt", "K": "K.txt", "forcing": "f.txt"}},
      "sweep": {"omega_min": 0.9, "omega_max": 1.1, "samples": 5, "epsilon": 0.01}
    })");
    const auto cfg = parse_config(j, dir);
    EXPECT_EQ(cfg.kind, ModelKind::Matrices);
    const auto sys = build_model(cfg);
    EXPECT_EQ(sys.K(0, 1), -1.0);
    EXPECT_TRUE(sys.nonlinearity.empty());
    EXPECT_EQ(cfg.canonical["model"]["sha256"]["M"], sha256_hex(slurp(dir / "M.txt")));

    j["model"]["matrices"]["K"] = "missing.txt";
    EXPECT_TRUE(mentions(issues_of(j, dir), "model.matrices.K: file not found"));
    j["model"]["matrices"]["K"] = "K.txt";
    spit(dir / "f.txt", "dense 3 1\n1\n0\n0\n");
    EXPECT_TRUE(mentions(issues_of(j, dir), "model.matrices.forcing"));
    fs::remove_all(dir);
}

TEST(MatrixReader, DenseSparseAndErrors) {
    std::istringstream dense("# header\ndense 2 3\n1 2 3\n4 5 6 # trailing\n");
    const auto A = read_matrix(dense);
    ASSERT_EQ(A.rows(), 2);
    ASSERT_EQ(A.cols(), 3);
    EXPECT_EQ(A(1, 2), 6.0);
    std::istringstream sparse("sparse 3 3\n0 0 1.5\n2 1 -2\n2 1 1\n");
    const auto S = read_matrix(sparse);
    EXPECT_EQ(S(0, 0), 1.5);
    EXPECT_EQ(S(2, 1), -1.0);
    EXPECT_EQ(S(1, 1), 0.0);
    for (const char* bad : {"dense 2 2\n1 2 3\n", "dense 2 2\n1 2 x 4\n", "sparse 2 2\n2 0 1\n", "blob 2 2\n", "",
                            "dense -1 2\n"}) {
        std::istringstream in(bad);
        EXPECT_ANY_THROW(read_matrix(in)) << bad;
    }
}

TEST(NonlinearityReader, TermsAndErrors) {
    std::istringstream in("nonlinearity 2\n# dof coeff factors\n0 0.5 0^3\n1 -0.2 0^2 3\n0 1e-3 1 2^2\n");
    const auto g = read_nonlinearity(in, 2);
    ASSERT_EQ(g.size(), 2u);
    std::vector<Complex> x{2.0, 3.0, 5.0, 7.0};
    double f0 = 0.0, f1 = 0.0;
    for (const auto& f : g) (f.dof == 0 ? f0 : f1) += f.polynomial.evaluate(x).real();
    EXPECT_NEAR(f0, 0.5 * 8.0 + 1e-3 * 3.0 * 25.0, 1e-14);
    EXPECT_NEAR(f1, -0.2 * 4.0 * 7.0, 1e-14);
    for (const char* bad : {"nonlinearity 3\n0 1 0^3\n", "nonlinearity 2\n2 1 0^3\n", "nonlinearity 2\n0 1 4^3\n",
                            "nonlinearity 2\n0 1 0^0\n", "nonlinearity 2\n0 abc 0^3\n", "0 1 0^3\n"}) {
        std::istringstream bin(bad);
        EXPECT_ANY_THROW(read_nonlinearity(bin, 2)) << bad;
    }
}

TEST(Formatting, HashesAndNumbers) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 7.0}) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_DOUBLE_EQ(loglog_slope({1, 10, 100}, {2, 200, 20000}), 2.0);
}

TEST(Workers, EnvironmentOverridesTheFlag) {
    EXPECT_EQ(resolve_workers(3, nullptr), 3);
    EXPECT_EQ(resolve_workers(3, "5"), 5);
    EXPECT_EQ(resolve_workers(3, "0"), 3);
    EXPECT_EQ(resolve_workers(3, "x"), 3);
    EXPECT_EQ(resolve_workers(3, ""), 3);
}

TEST(ModelHash, DependsOnlyOnWhatTheCoefficientsDependOn) {
    const auto cfg = parse_config(beam_config(), ".");
    const auto sys = build_model(cfg);
    const auto h = model_hash(sys, 1, 0);
    EXPECT_EQ(h, model_hash(build_model(cfg), 1, 0));
    EXPECT_NE(h, model_hash(sys, 2, 0));
    EXPECT_NE(h, model_hash(sys, 1, 1));
    auto other = sys;
    other.K(0, 0) *= 1.0 + 1e-15;
    EXPECT_NE(h, model_hash(other, 1, 0));
}

TEST(Run, WritesDeterministicOutputs) {
    const auto dir = scratch_dir();
    const auto cfg = parse_config(beam_config(), ".");
    std::ostringstream log;
    ASSERT_EQ(run_frc(cfg, {.output_dir = dir / "a", .workers = 1}, log), kOk) << log.str();
    ASSERT_EQ(run_frc(cfg, {.output_dir = dir / "b", .workers = 4}, log), kOk) << log.str();
    for (const char* f : {"frc.tsv", "frc.svg", "manifest.json", "phase_0.tsv"}) {
        ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    const std::string table = slurp(dir / "a" / "frc.tsv");
    EXPECT_NE(table.find("Omega\trho\tpsi\tstability\tamplitude\tbranch_id"), std::string::npos);
    EXPECT_NE(table.find("# manifest_sha256 " + sha256_hex(slurp(dir / "a" / "manifest.json"))), std::string::npos);
    const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
    EXPECT_EQ(manifest["format"], "ssmfrc-manifest");
    EXPECT_EQ(manifest["config"], cfg.canonical);
    EXPECT_TRUE(manifest["nonresonance"]["passed"].get<bool>());
    int rows = 0;
    std::istringstream in(table);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#' && line[0] != 'O') ++rows;
    EXPECT_EQ(rows, 21);  // single branch at this forcing level
    for (const auto& p : fs::directory_iterator(dir / "a")) EXPECT_NE(p.path().extension(), ".part");
    fs::remove_all(dir);
}

TEST(Run, CacheIsReusedAndGivesTheSameTable) {
    const auto dir = scratch_dir();
    const auto cfg = parse_config(beam_config(), ".");
    std::ostringstream log;
    ASSERT_EQ(run_frc(cfg, {.output_dir = dir / "a", .cache_dir = dir / "cache"}, log), kOk);
    const auto sys = build_model(cfg);
    const auto cache_file = dir / "cache" / ("w0-" + model_hash(sys, 1, 0) + ".json");
    ASSERT_TRUE(fs::exists(cache_file));
    ASSERT_EQ(run_frc(cfg, {.output_dir = dir / "b", .cache_dir = dir / "cache"}, log), kOk);
    EXPECT_EQ(slurp(dir / "a" / "frc.tsv"), slurp(dir / "b" / "frc.tsv"));
    spit(cache_file, "garbage");
    ASSERT_EQ(run_frc(cfg, {.output_dir = dir / "c", .cache_dir = dir / "cache"}, log), kOk);
    EXPECT_EQ(slurp(dir / "a" / "frc.tsv"), slurp(dir / "c" / "frc.tsv"));
    fs::remove_all(dir);
}

TEST(Run, ResonantSampleFlushesPartialResults) {
    const auto dir = scratch_dir();
    spit(dir / "M.txt", "dense 2 2\n1 0\n0 1\n");
    spit(dir / "K.txt", "dense 2 2\n1 0\n0 4\n");
    spit(dir / "C.txt", "dense 2 2\n0.02 0\n0 0.02\n");
    spit(dir / "f.txt", "dense 2 1\n1\n0.5\n");
    spit(dir / "g.txt", "nonlinearity 2\n1 1 0^2\n1 0.3 0^3\n");
    // equal decay rates: Omega = Im lambda_3 - Im lambda_1 hits an exact forced resonance
    const double w1 = std::sqrt(1.0 - 1e-4), w2 = std::sqrt(4.0 - 1e-4);
    const double bad = w2 - w1;
    json j = {{"model",
               {{"type", "matrices"},
                {"matrices", {{"M", "M.txt"}, {"C", "C.txt"}, {"K", "K.txt"}, {"forcing", "f.txt"}, {"nonlinearity", "g.txt"}}}}},
              {"sweep", {{"omega_min", bad - 0.01}, {"omega_max", bad + 0.01}, {"samples", 3}, {"epsilon", 0.01}}},
              {"solver", {{"rho_max", 0.5}}},
              {"output", {{"plot", false}}}};
    const auto cfg = parse_config(j, dir);
    std::ostringstream log;
    EXPECT_EQ(run_frc(cfg, {.output_dir = dir / "out", .verbosity = 1}, log), kModelRejected) << log.str();
    EXPECT_NE(log.str().find("resonance"), std::string::npos) << log.str();
    ASSERT_TRUE(fs::exists(dir / "out" / "frc.tsv")) << log.str();
    const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    EXPECT_EQ(manifest["sweep"]["failures"].size(), 1u);
    fs::remove_all(dir);
}

TEST(Run, RejectedModelWritesNothing) {
    const auto dir = scratch_dir();
    spit(dir / "M.txt", "dense 2 2\n1 0\n0 1\n");
    spit(dir / "K.txt", "dense 2 2\n1 0\n0 9\n");
    spit(dir / "C.txt", "dense 2 2\n0.02 0\n0 0.06\n");  // lambda_3 = 3 lambda_1
    spit(dir / "f.txt", "dense 2 1\n1\n0\n");
    spit(dir / "g.txt", "nonlinearity 2\n1 1 0^3\n");
    json j = {{"model",
               {{"type", "matrices"},
                {"matrices", {{"M", "M.txt"}, {"C", "C.txt"}, {"K", "K.txt"}, {"forcing", "f.txt"}, {"nonlinearity", "g.txt"}}}}},
              {"sweep", {{"omega_min", 0.9}, {"omega_max", 1.1}, {"samples", 3}, {"epsilon", 0.01}}}};
    const auto cfg = parse_config(j, dir);
    std::ostringstream log;
    EXPECT_EQ(run_frc(cfg, {.output_dir = dir / "out"}, log), kModelRejected);
    EXPECT_FALSE(fs::exists(dir / "out"));
    fs::remove_all(dir);
}

TEST(Verify, PassesOnTheBeamAndCatchesAPerturbedBasis) {
    auto j = beam_config();
    j["verify"] = {{"oracle", false}};
    const auto cfg = parse_config(j, ".");
    std::ostringstream log;
    const auto checks = run_verify(cfg, {}, log);
    ASSERT_FALSE(checks.empty());
    for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
    const auto perturbed = run_verify(cfg, {.perturb_T = 1e-6}, log);
    bool caught = false;
    for (const auto& c : perturbed)
        if (c.name == "coefficients.analytic_vs_recurrence") caught = !c.passed;
    EXPECT_TRUE(caught);
}

TEST(Plot, SvgHasOnePathPerRun) {
    FrcResult r;
    for (int s = 0; s < 4; ++s) {
        FrcPoint p;
        p.sample = s;
        p.Omega = 1.0 + 0.1 * s;
        p.amplitude = 0.1 * (s + 1);
        p.stability = s < 2 ? Stability::StableSpiral : Stability::Saddle;
        p.branch_id = 0;
        r.points.push_back(p);
    }
    const auto svg = render_frc_svg(r, "amp");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
    EXPECT_NO_THROW(render_frc_svg(FrcResult{}, "empty"));
}

TEST(Tool, InvalidConfigExitsWithoutOutput) {
    const auto dir = scratch_dir();
    json j = beam_config();
    j["model"]["beam"].erase("L");
    spit(dir / "bad.json", j.dump());
    const std::string cmd = std::string(SSMFRC_TOOL_PATH) + " -c " + (dir / "bad.json").string() + " -o " +
                            (dir / "out").string() + " 2> " + (dir / "err.txt").string();
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), kInvalidConfig);
    EXPECT_FALSE(fs::exists(dir / "out"));
    EXPECT_NE(slurp(dir / "err.txt").find("model.beam.L"), std::string::npos);

    spit(dir / "broken.json", "{ not json");
    const std::string cmd2 = std::string(SSMFRC_TOOL_PATH) + " -c " + (dir / "broken.json").string() + " -o " +
                             (dir / "out").string() + " 2> /dev/null";
    const int status2 = std::system(cmd2.c_str());
    EXPECT_EQ(WEXITSTATUS(status2), kInvalidConfig);
    EXPECT_FALSE(fs::exists(dir / "out"));
    fs::remove_all(dir);
}

TEST(Tool, RunsShippedConfigsAndVerify) {
    const auto dir = scratch_dir();
    const std::string tool = SSMFRC_TOOL_PATH;
    const std::string beam = std::string(SSMFRC_CONFIG_DIR) + "/beam_n10.json";
    int status = std::system((tool + " -c " + beam + " -o " + (dir / "beam").string() + " 2> /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(status), kOk);
    EXPECT_TRUE(fs::exists(dir / "beam" / "frc.tsv"));
    const std::string two = std::string(SSMFRC_CONFIG_DIR) + "/two_dof.json";
    status = std::system((tool + " -c " + two + " -o " + (dir / "two").string() + " 2> /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(status), kOk);
    status = std::system(("SSMFRC_WORKERS=3 " + tool + " -c " + two + " -j 1 -o " + (dir / "two3").string() +
                          " 2> /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(status), kOk);
    EXPECT_EQ(slurp(dir / "two" / "frc.tsv"), slurp(dir / "two3" / "frc.tsv"));
    status = std::system((tool + " -c " + beam + " --verify --perturb-T 1e-6 > " + (dir / "v.txt").string()).c_str());
    EXPECT_EQ(WEXITSTATUS(status), kVerifyFailed);
    EXPECT_NE(slurp(dir / "v.txt").find("FAIL"), std::string::npos);
    fs::remove_all(dir);
}
