#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fgsim/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Behavioral simulator of an individually tunable floating-gate memory array"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;

    const std::vector<std::string> commands = {"sweep",   "dynamics", "tune",
                                               "disturb", "vmm",      "montecarlo"};
    for (const auto& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment configuration file (JSON)")
            ->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_given = true; });
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        fgsim::RunContext ctx;
        ctx.config = fgsim::load_config(config_path);
        ctx.out_dir = out_dir;
        if (seed_given) {
            ctx.config.seed = seed;
            ctx.config.has_seed = true;
        }

        int rc = fgsim::kExitInternalError;
        if (command == "sweep") rc = fgsim::cmd_sweep(ctx);
        else if (command == "dynamics") rc = fgsim::cmd_dynamics(ctx);
        else if (command == "tune") rc = fgsim::cmd_tune(ctx);
        else if (command == "disturb") rc = fgsim::cmd_disturb(ctx);
        else if (command == "vmm") rc = fgsim::cmd_vmm(ctx);
        else if (command == "montecarlo") rc = fgsim::cmd_montecarlo(ctx);

        if (rc == fgsim::kExitAssertionFailed)
            std::cerr << command << ": built-in acceptance assertion failed\n";
        return rc;
    } catch (const fgsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return fgsim::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fgsim::kExitInternalError;
    }
}
