// Command-line front end: one subcommand per run mode, INI config in,
// CSV/JSON/snapshot outputs plus a manifest in the output directory.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 verification failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "npf/dispatch.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw npf::ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_mode(const std::string& mode, const std::string& config_path,
             const std::string& outdir) {
    const auto parsed = npf::parse_config(read_file(config_path));
    if (!parsed.ok()) {
        std::cerr << "config errors in " << config_path << ":\n";
        for (const auto& e : parsed.errors) std::cerr << "  " << e << "\n";
        return 2;
    }
    npf::RunConfig cfg = *parsed.config;
    if (!cfg.run.mode.empty() && cfg.run.mode != mode) {
        std::cerr << "config sets [run] mode = " << cfg.run.mode << " but the subcommand is "
                  << mode << "\n";
        return 2;
    }
    const auto result = npf::dispatch(cfg, mode, outdir);
    std::cout << "wrote " << result.manifest["files"].size() << " files to " << outdir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal phase-field solver and verification harness"};
    app.set_version_flag("--version", std::string("npf ") + npf::kToolVersion);
    app.require_subcommand(1);

    const std::vector<std::string> modes = {"simulate",        "steady",
                                            "squeeze",         "continuation",
                                            "verify-operator", "verify-potential",
                                            "mms"};
    const std::vector<std::string> help = {
        "time integration with the dissipation ledger and sup-norm monitors",
        "stationary order parameter by damped fixed-point iteration",
        "two-trajectory contraction against the history pseudometric",
        "regularized family runs against the singular reference",
        "certify the operator norm bounds and self-adjointness",
        "certify the regularized-family inequalities",
        "manufactured-solution convergence study"};

    std::string config_path, outdir = "out";
    for (std::size_t i = 0; i < modes.size(); ++i) {
        auto* sub = app.add_subcommand(modes[i], help[i]);
        sub->add_option("-c,--config", config_path, "INI configuration file")->required();
        sub->add_option("-o,--output", outdir, "output directory (default: out)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    try {
        return run_mode(mode, config_path, outdir);
    } catch (const npf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
        return 2;
    } catch (const npf::VerificationFailure& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
