#ifndef FGSIM_DEVICE_HPP
#define FGSIM_DEVICE_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fgsim {

// Device safe operating range for any terminal voltage.
constexpr double kVMin = -2.0;
constexpr double kVMax = 12.0;
constexpr double kMaxPulseDuration = 1.0;        // s
constexpr double kNoiseRefWindow = 10e-3;        // s, reference averaging window
constexpr double kNoiseRefCurrent = 1e-9;        // A, reference for the shot-like term

class BiasRangeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedRegimeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class TargetRangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

struct TerminalBiases {
    double v_g = 0.0;  // control gate [V]
    double v_d = 0.0;  // drain [V]
    double v_s = 0.0;  // source [V]

    void validate() const;
};

struct Pulse {
    TerminalBiases biases;
    double duration = 0.0;  // s

    void validate() const;
};

// Behavioral parameters of one floating-gate cell.  The fields group into
// readout (subthreshold exponential behind a capacitive divider), charge
// update (hot-electron injection and Fowler-Nordheim tunneling rate laws),
// readout noise, and Monte Carlo spread.
struct DeviceParams {
    // readout
    double i_s0 = 1e-13;        // A, pre-exponential current scale
    double n_slope = 1.5;       // subthreshold slope factor
    double u_t = 25.85e-3;      // V, thermal voltage
    double v_th0 = 0.9;         // V, neutral-charge threshold reference
    double kappa_cg = 0.60;     // gate coupling onto the floating gate
    double kappa_d = 0.15;      // drain coupling
    double kappa_s = 0.20;      // source coupling
    double i_max = 30e-6;       // A, readout saturation clamp

    // hot-electron injection (programs the cell, q decreases)
    double inj_rate0 = 1.0e-9;  // V/s at threshold
    double inj_slope = 0.15;    // V
    double inj_vmin = 4.0;      // V, minimum source-drain overdrive
    double inj_gate_lo = 1.0;   // V, gate window for injection
    double inj_gate_hi = 2.2;   // V

    // Fowler-Nordheim tunneling (erases the cell, q increases)
    double tun_rate0 = 0.3;     // V/s at threshold
    double tun_slope = 0.12;    // V
    double tun_vmin = 3.0;      // V, minimum gate-to-floating-gate overdrive

    // admissible charge offset range
    double q_min = -1.5;        // V
    double q_max = 0.0;         // V

    // relative readout noise: sigma = (a + b*sqrt(1nA/I)) / sqrt(win/10ms)
    double noise_a = 0.001;
    double noise_b = 0.02;

    // per-parameter relative lognormal spread for draw_cell
    double variability_sigma = 0.0;

    void validate() const;
};

struct CellState {
    double q = 0.0;  // V, charge-induced floating-gate potential offset
    DeviceParams params;
};

struct UpdateReport {
    double r_inj = 0.0;   // V/s
    double r_tun = 0.0;   // V/s
    bool clamped = false;
};

using Rng = std::mt19937_64;

// v_fg = kappa_cg*v_g + kappa_d*v_d + kappa_s*v_s + q
double fg_potential(const CellState& state, const TerminalBiases& biases);

// Noise-free forward readout current; throws UnsupportedRegimeError for v_d < v_s.
double read_current(const CellState& state, const TerminalBiases& biases);

// Analytic inverse of read_current: the state whose readout equals `target`
// at `biases`.  Throws TargetRangeError when the target is not reachable
// within [q_min, q_max] or exceeds the clamp.
CellState state_for_current(double target, const TerminalBiases& biases,
                            const DeviceParams& params);

// Explicit-Euler charge update over one pulse: rates are evaluated at the
// initial state and held for the pulse duration.
std::pair<CellState, UpdateReport> pulse_update(const CellState& state, const Pulse& pulse);

// Injection / tunneling rates at the given biases (the two terms of pulse_update).
double injection_rate(const CellState& state, const TerminalBiases& biases);
double tunneling_rate(const CellState& state, const TerminalBiases& biases);

// Window-averaged noisy readout.  Relative sigma follows the additive +
// shot-like law scaled by sqrt(10ms/window); result is floored at zero.
double sample_readout(const CellState& state, const TerminalBiases& biases,
                      double window, Rng& rng);

// Monte Carlo draw: positive parameters perturbed lognormally with relative
// sigma `variability_sigma`, kappas renormalized to preserve their sum,
// q initialized to q_max (fully erased).
CellState draw_cell(const DeviceParams& params, Rng& rng);

// Standard readout condition used throughout: (2.5 V, 1 V, 0 V).
inline TerminalBiases read_biases() { return {2.5, 1.0, 0.0}; }

}  // namespace fgsim

#endif
