#ifndef FGSIM_EXPERIMENTS_HPP
#define FGSIM_EXPERIMENTS_HPP

#include <string>

#include "fgsim/config.hpp"

namespace fgsim {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes shared by the experiment drivers and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitAssertionFailed = 3;
inline constexpr int kExitInternalError = 4;

struct RunContext {
    ExperimentConfig config;
    std::string out_dir = ".";
};

// Each command writes CSV tables (leading '#' comment block with tool
// version, config hash and seed) into out_dir and returns kExitOk, or
// kExitAssertionFailed when config.assertions is set and a built-in
// expectation does not hold.
int cmd_sweep(const RunContext& ctx);
int cmd_dynamics(const RunContext& ctx);
int cmd_tune(const RunContext& ctx);
int cmd_disturb(const RunContext& ctx);
int cmd_vmm(const RunContext& ctx);
int cmd_montecarlo(const RunContext& ctx);

}  // namespace fgsim

#endif
