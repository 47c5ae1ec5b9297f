#ifndef FGSIM_VMM_HPP
#define FGSIM_VMM_HPP

#include <utility>
#include <vector>

#include "fgsim/tuning.hpp"

namespace fgsim {

// Differential weight program for a gate-coupled four-quadrant multiplier.
// A weight matrix of M inputs x N outputs maps onto a 2M x 2N cell array:
// row pair (2j, 2j+1) is driven by the positive/negative input of line j,
// column pair (2k, 2k+1) sums the positive/negative output rails, and each
// weight is stored as a cross-coupled differential current pair.
struct VmmProgram {
    std::vector<std::vector<double>> weights;  // [input][output], w in [-1, 1]
    double i_ref = 0.5e-6;                     // A, full-scale reference
    double i_floor = 1e-9;                     // A, minimum programmable current
    Grid<double> cell_targets;                 // 2M x 2N per-cell current targets
    Grid<double> achieved;                     // noise-free currents after tuning
    Grid<char> converged;                      // per-cell tuning outcome

    int inputs() const { return static_cast<int>(weights.size()); }
    int outputs() const { return weights.empty() ? 0 : static_cast<int>(weights[0].size()); }

    // Differential pair for weight w: (i_floor + i_ref*(1+w)/2, i_floor + i_ref*(1-w)/2).
    std::pair<double, double> weight_targets(double w) const;

    void validate() const;
};

struct VmmInput {
    // one differential current pair per input line, each in [i_floor, i_ref]
    std::vector<std::pair<double, double>> lines;
};

struct VmmOutput {
    std::vector<double> i_plus;   // A, positive rail per output
    std::vector<double> i_minus;  // A, negative rail per output
    std::vector<double> y;        // A, i_plus - i_minus
};

// Gate-line voltage at which the diode-connected peripheral device carries
// `i_in` at the read rails (v_d = 1 V, v_s = 0 V); monotone bisection to a
// relative residual below 1e-9.
double settle_gate(const CellState& periph, double i_in);

// One peripheral per gate line (2 per input), charge set so i_ref flows at
// v_g = 2.5 V.
std::vector<CellState> make_peripherals(const DeviceParams& params, double i_ref, int count);

// Derives the per-cell targets and tunes every cell via tune_sequence.
VmmProgram program_weights(ArrayState& array, const std::vector<std::vector<double>>& weights,
                           double i_ref, double i_floor, const TuningConfig& tuning,
                           const BiasProtocol& protocol, Rng& rng);

// Noise-free multiply: settle each input pair onto its gate lines, sum cell
// currents per bit line.
VmmOutput vmm_output(const ArrayState& array, const VmmProgram& program,
                     const std::vector<CellState>& periphs, const VmmInput& input);

// Noisy variant: each bit-line rail is sampled with the readout noise model
// over `window`.
VmmOutput vmm_output_noisy(const ArrayState& array, const VmmProgram& program,
                           const std::vector<CellState>& periphs, const VmmInput& input,
                           double window, Rng& rng);

// (max d_i - min d_i) / median d_i over centered finite differences of y(x).
double linearity_metric(const std::vector<std::pair<double, double>>& samples);

}  // namespace fgsim

#endif
