#include "fgsim/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fgsim {

void RampSchedule::validate() const {
    if (!(start_amplitude <= max_amplitude))
        throw std::invalid_argument("ramp start amplitude must be <= max amplitude");
    if (!(step > 0)) throw std::invalid_argument("ramp step must be > 0");
    if (!(pulse_duration > 0)) throw std::invalid_argument("ramp pulse duration must be > 0");
}

void TuningConfig::validate() const {
    if (!(rel_tolerance > 0) || !(rel_tolerance < 1))
        throw std::invalid_argument("rel_tolerance must be in (0, 1)");
    if (!(target >= kTargetMin) || !(target <= kTargetMax))
        throw TargetRangeError("tuning target outside [0.5 nA, 2 uA]");
    if (!(read_window > 0)) throw std::invalid_argument("read_window must be > 0");
    if (max_pulses < 1) throw std::invalid_argument("max_pulses must be >= 1");
    if (backoff_steps < 0) throw std::invalid_argument("backoff_steps must be >= 0");
    program_ramp.validate();
    erase_ramp.validate();
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Read: return "read";
        case EventKind::Program: return "program";
        default: return "erase";
    }
}

void initial_erase(ArrayState& array, CellCoord cell, const BiasProtocol& protocol) {
    check_coord(array.topology, cell);
    BiasProtocol p = protocol;
    p.erase_v_d_sel = 0.0;  // V_D = V_S = 0 on the selected cell
    const auto grid = bias_map(array.topology, OpKind::Erase, cell, p, 10.0);
    apply_array_pulse(array, grid, 10e-3);
}

void initial_program(ArrayState& array, CellCoord cell, const BiasProtocol& protocol) {
    check_coord(array.topology, cell);
    const auto grid = bias_map(array.topology, OpKind::Program, cell, protocol, 9.0);
    apply_array_pulse(array, grid, 5e-6);
}

namespace {

struct RampState {
    double amplitude;
    double last_used;
    bool used = false;
    const RampSchedule* schedule;

    explicit RampState(const RampSchedule& s)
        : amplitude(s.start_amplitude), last_used(s.start_amplitude), schedule(&s) {}

    void advance() {
        last_used = amplitude;
        amplitude = std::min(schedule->max_amplitude, amplitude + schedule->step);
        used = true;
    }
    void back_off(int steps) {
        if (used) {
            amplitude = std::max(schedule->start_amplitude,
                                 last_used - steps * schedule->step);
        }
    }
    bool capped() const { return amplitude >= schedule->max_amplitude; }
};

}  // namespace

TuningTrace tune_cell(ArrayState& array, CellCoord cell, const TuningConfig& config,
                      const BiasProtocol& protocol, Rng& rng) {
    config.validate();
    array.validate();
    check_coord(array.topology, cell);
    CellState& target_cell = array.cell(cell.row, cell.col);
    // Reject targets the charge range cannot reach before touching the array.
    TerminalBiases rb{protocol.read_v_g, protocol.read_v_d, protocol.read_v_s};
    (void)state_for_current(config.target, rb, target_cell.params);

    TuningTrace trace;
    RampState program(config.program_ramp);
    RampState erase(config.erase_ramp);
    bool have_direction = false;
    bool last_was_program = false;
    bool dead_program_at_cap = false;
    bool dead_erase_at_cap = false;

    auto record_read = [&]() {
        TuningEvent ev;
        ev.kind = EventKind::Read;
        ev.measured = read_cell(array, cell, protocol, config.read_window, rng);
        ev.q_after = target_cell.q;
        trace.events.push_back(ev);
        trace.final_current = ev.measured;
        return ev.measured;
    };

    while (true) {
        const double measured = record_read();
        if (std::abs(measured - config.target) <= config.rel_tolerance * config.target) {
            trace.converged = true;
            return trace;
        }
        if (trace.pulses_used >= config.max_pulses) return trace;
        // Full-amplitude stalemate: both ramps capped and neither direction
        // moves the charge any more.
        if (dead_program_at_cap && dead_erase_at_cap) return trace;

        const bool do_program = measured > config.target;
        RampState& ramp = do_program ? program : erase;
        if (have_direction && do_program != last_was_program) {
            ramp.back_off(config.backoff_steps);
        }
        have_direction = true;
        last_was_program = do_program;

        const auto grid = bias_map(array.topology,
                                   do_program ? OpKind::Program : OpKind::Erase, cell, protocol,
                                   ramp.amplitude);
        const double q_before = target_cell.q;
        apply_array_pulse(array, grid, ramp.schedule->pulse_duration);
        ++trace.pulses_used;

        TuningEvent ev;
        ev.kind = do_program ? EventKind::Program : EventKind::Erase;
        ev.amplitude = ramp.amplitude;
        ev.q_after = target_cell.q;
        trace.events.push_back(ev);

        const bool dead = ramp.capped() && target_cell.q == q_before;
        if (do_program) {
            dead_program_at_cap = dead;
        } else {
            dead_erase_at_cap = dead;
        }
        ramp.advance();
    }
}

SequenceResult tune_sequence(ArrayState& array, const std::vector<TuningTask>& tasks,
                             const TuningConfig& config, const BiasProtocol& protocol,
                             Rng& rng) {
    for (size_t i = 1; i < tasks.size(); ++i) {
        if (tasks[i].cell == tasks[i - 1].cell)
            throw std::invalid_argument("tune_sequence: consecutive tasks target the same cell");
    }

    SequenceResult result;
    // Latest noise-free readout recorded for each tuned cell; a re-tuned cell
    // replaces its earlier entry.
    std::vector<std::pair<CellCoord, double>> achieved;

    for (const auto& task : tasks) {
        TuningConfig cfg = config;
        cfg.target = task.target;
        result.traces.push_back(tune_cell(array, task.cell, cfg, protocol, rng));

        double worst = 0.0;
        for (auto& [coord, value] : achieved) {
            if (coord == task.cell) continue;
            const double now = read_cell_ideal(array, coord, protocol);
            worst = std::max(worst, std::abs(now - value) / value);
        }
        result.disturb.drift_after_each.push_back(worst);
        result.disturb.max_rel_drift = std::max(result.disturb.max_rel_drift, worst);

        const double just_tuned = read_cell_ideal(array, task.cell, protocol);
        auto it = std::find_if(achieved.begin(), achieved.end(),
                               [&](const auto& e) { return e.first == task.cell; });
        if (it != achieved.end()) {
            it->second = just_tuned;
        } else {
            achieved.emplace_back(task.cell, just_tuned);
        }
    }
    return result;
}

void write_trace(std::ostream& out, const TuningTrace& trace) {
    int index = 0;
    for (const auto& ev : trace.events) {
        out << index++ << ',' << to_string(ev.kind) << ',' << ev.amplitude << ','
            << (ev.kind == EventKind::Read ? ev.measured : 0.0) << ',' << ev.q_after << '\n';
    }
}

}  // namespace fgsim
