#ifndef FGSIM_CONFIG_HPP
#define FGSIM_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgsim/tuning.hpp"
#include "fgsim/vmm.hpp"

namespace fgsim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepSpec {
    double from = 0.0;
    double to = 5.0;
    double step = 0.05;
    double fixed = 1.0;  // v_d for the gate sweep, v_g for the drain-source sweep
};

struct SweepExperiment {
    std::vector<double> state_currents;  // states built by state_for_current at read biases
    SweepSpec gate{0.0, 5.0, 0.05, 1.0};
    SweepSpec drain_source{0.0, 2.0, 0.02, 2.5};
};

struct PulseTrain {
    OpKind kind = OpKind::Program;
    double start_amplitude = 4.5;
    double step = 0.05;
    int count = 70;
    double duration = 5e-6;
    std::string start_state = "erased";  // erased | programmed
};

struct DynamicsExperiment {
    std::vector<PulseTrain> trains;
};

struct TuneExperiment {
    std::vector<double> targets{1e-6};  // one pass over all cells per target
    bool write_traces = true;
};

struct DisturbExperiment {
    double selected_target = 1e-7;   // programmed level of the erased cell before the sequence
    double neighbor_target = 1e-7;   // level of every other cell
    double inhibit_from = 0.0;
    double inhibit_to = 3.0;
    double inhibit_step = 0.1;
    int max_pulses = 2000;
};

struct VmmExperiment {
    std::vector<std::vector<std::vector<double>>> weight_sets;
    double i_ref = 0.5e-6;
    double i_floor = 1e-9;
    double x_min = 5e-9;
    double x_max = 0.5e-6;
    int points = 25;
    bool noisy = false;
    double window = 0.1;
    int noise_seeds = 10;
};

struct MonteCarloExperiment {
    int seeds = 30;
    std::vector<double> sigmas{0.0, 0.02, 0.05};
    std::vector<double> targets{1e-6, 1e-9};
};

struct ExperimentConfig {
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool assertions = false;

    DeviceParams device;
    ArrayTopology topology{4, 4, RoutingVariant::Modified};
    BiasProtocol protocol;
    TuningConfig tuning;

    SweepExperiment sweep;
    DynamicsExperiment dynamics;
    TuneExperiment tune;
    DisturbExperiment disturb;
    VmmExperiment vmm;
    MonteCarloExperiment montecarlo;
};

// Strict parse: unknown keys anywhere are rejected, missing keys take the
// defaults above.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json serialize_config(const ExperimentConfig& config);

// FNV-1a over the canonical serialized form.
std::uint64_t config_hash(const ExperimentConfig& config);

// Array snapshot: topology, seed, per-cell q and parameter draw.
nlohmann::json serialize_snapshot(const ArrayState& array, std::uint64_t seed);
ArrayState parse_snapshot(const nlohmann::json& j, std::uint64_t* seed_out = nullptr);
void save_snapshot(const std::string& path, const ArrayState& array, std::uint64_t seed);
ArrayState load_snapshot(const std::string& path, std::uint64_t* seed_out = nullptr);

}  // namespace fgsim

#endif
