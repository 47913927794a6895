#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <system_error>

#include <CLI11.hpp>

#include "hmlab/config.h"
#include "hmlab/error.h"
#include "hmlab/experiments.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitPrecondition = 2;
constexpr int kExitConfig = 3;

int exit_code(hmlab::ErrorCode code) {
    switch (code) {
        case hmlab::ErrorCode::PreconditionFailed: return kExitPrecondition;
        case hmlab::ErrorCode::ConfigError: return kExitConfig;
        default: return kExitFailure;
    }
}

int run(const std::string& config_path, const std::string& seed, const std::string& out, bool lattice_audit) {
    namespace fs = std::filesystem;
    const bool out_existed = fs::exists(out);
    try {
        hmlab::Config cfg = hmlab::Config::load(config_path);
        if (!seed.empty()) cfg.set("seed", seed);
        if (lattice_audit) cfg.set("lattice_audit", "true");

        const hmlab::Report rep = hmlab::run_experiment(cfg);
        nlohmann::json preamble;
        preamble["config"] = cfg.effective();
        preamble["seed"] = cfg.seed();
        rep.write(out, preamble);

        std::size_t passed = 0;
        for (const auto& c : rep.checks()) passed += c.pass;
        std::cout << cfg.str("experiment") << ": " << passed << "/" << rep.checks().size() << " checks passed, report in "
                  << out << "\n";
        return 0;
    } catch (const hmlab::Error& e) {
        std::cerr << "hmlab: " << e.what() << "\n";
        if (!out_existed) {
            std::error_code ec;
            fs::remove(out, ec);  // only succeeds when empty
        }
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "hmlab: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Harmonic measure and Riesz transform experiments"};
    app.require_subcommand(1);

    std::string config_path, seed, out = "out";
    bool lattice_audit = false;
    CLI::App* run_cmd = app.add_subcommand("run", "Run the experiment named in a config file");
    run_cmd->add_option("--config", config_path, "Config file (key = value lines)")->required();
    run_cmd->add_option("--seed", seed, "Override the config seed");
    run_cmd->add_option("--out", out, "Output directory")->capture_default_str();
    run_cmd->add_flag("--lattice-audit", lattice_audit, "Write lattice_audit.csv for every lattice built");

    CLI::App* list_cmd = app.add_subcommand("list", "List the registered experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (*list_cmd) {
        for (const auto& e : hmlab::list_experiments()) std::cout << e.name << "\t" << e.description << "\n";
        return 0;
    }
    return run(config_path, seed, out, lattice_audit);
}
