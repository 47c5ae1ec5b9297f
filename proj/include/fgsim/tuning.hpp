#ifndef FGSIM_TUNING_HPP
#define FGSIM_TUNING_HPP

#include <iosfwd>
#include <vector>

#include "fgsim/array.hpp"

namespace fgsim {

struct RampSchedule {
    double start_amplitude = 0.0;  // V
    double step = 0.0;             // V
    double max_amplitude = 0.0;    // V
    double pulse_duration = 0.0;   // s

    void validate() const;
};

struct TuningConfig {
    double target = 1e-6;          // A
    double rel_tolerance = 0.01;
    double read_window = 10e-3;    // s
    RampSchedule program_ramp{4.5, 0.05, 8.0, 5e-6};
    RampSchedule erase_ramp{5.0, 0.05, 8.5, 0.6e-3};
    int max_pulses = 1000;
    int backoff_steps = 4;

    void validate() const;
};

// Admissible target range; the model is calibrated for this band.
constexpr double kTargetMin = 0.5e-9;
constexpr double kTargetMax = 2e-6;

enum class EventKind { Read, Program, Erase };

struct TuningEvent {
    EventKind kind = EventKind::Read;
    double amplitude = 0.0;  // V, 0 for reads
    double measured = 0.0;   // A, meaningful for reads only
    double q_after = 0.0;    // V
};

struct TuningTrace {
    std::vector<TuningEvent> events;
    bool converged = false;
    int pulses_used = 0;
    double final_current = 0.0;  // A, last averaged read
};

struct DisturbReport {
    double max_rel_drift = 0.0;
    std::vector<double> drift_after_each;  // one entry per tuned cell
};

struct TuningTask {
    CellCoord cell;
    double target = 0.0;  // A
};

struct SequenceResult {
    std::vector<TuningTrace> traces;
    DisturbReport disturb;
};

// 10-ms, 10-V gate pulse with the selected drain and source grounded;
// unselected lines carry the erase inhibit voltages.
void initial_erase(ArrayState& array, CellCoord cell, const BiasProtocol& protocol);

// 5-us, 9-V source pulse at the program biases.
void initial_program(ArrayState& array, CellCoord cell, const BiasProtocol& protocol);

// Closed-loop write-verify tuning of one cell: alternating averaged reads and
// ramped tune pulses, polarity reversal with amplitude backoff on overshoot.
TuningTrace tune_cell(ArrayState& array, CellCoord cell, const TuningConfig& config,
                      const BiasProtocol& protocol, Rng& rng);

// Tunes each task in order; after each one, re-reads all previously tuned
// cells (noise-free) and records the worst relative drift.
SequenceResult tune_sequence(ArrayState& array, const std::vector<TuningTask>& tasks,
                             const TuningConfig& config, const BiasProtocol& protocol, Rng& rng);

// One event per line: index, kind, amplitude, measured current, q_after.
void write_trace(std::ostream& out, const TuningTrace& trace);

const char* to_string(EventKind kind);

}  // namespace fgsim

#endif
