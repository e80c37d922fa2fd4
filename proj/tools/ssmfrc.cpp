#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "ssmfrc/cli.hpp"

int main(int argc, char** argv) {
    using namespace ssmfrc::cli;
    CLI::App app{"Forced response curves from spectral submanifold reduction"};
    std::string config;
    std::string output = "frc_out";
    std::string cache;
    int workers = 1;
    bool verify = false;
    double perturb = 0.0;
    app.add_option("-c,--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("-o,--output", output, "output directory (run mode)");
    app.add_option("-j,--workers", workers, "worker threads; SSMFRC_WORKERS overrides")->check(CLI::PositiveNumber);
    auto* vflag = app.add_flag("-v,--verbose", "more logging (repeatable)");
    app.add_option("--cache-dir", cache, "directory for cached autonomous coefficients");
    app.add_flag("--verify", verify, "run the verification checks instead of a sweep");
    app.add_option("--perturb-T", perturb, "verify mode: scale the master columns of T by 1 + value")->needs("--verify");
    CLI11_PARSE(app, argc, argv);
    const int verbosity = static_cast<int>(vflag->count());

    RunConfig cfg;
    try {
        cfg = load_config(config);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kInvalidConfig;
    }

    if (verify) {
        VerifyOptions vopt;
        vopt.perturb_T = perturb;
        vopt.verbosity = verbosity;
        const auto checks = run_verify(cfg, vopt, std::cout);
        int failed = 0;
        for (const auto& c : checks) failed += c.passed ? 0 : 1;
        std::cout << (failed ? "verification FAILED: " + std::to_string(failed) + " of " + std::to_string(checks.size())
                             : "verification passed: " + std::to_string(checks.size()) + " checks")
                  << '\n';
        return failed ? kVerifyFailed : kOk;
    }

    RunOptions ropt;
    ropt.output_dir = output;
    ropt.workers = resolve_workers(workers, std::getenv("SSMFRC_WORKERS"));
    ropt.verbosity = verbosity;
    if (!cache.empty()) ropt.cache_dir = cache;
    return run_frc(cfg, ropt, std::cerr);
}
