#include "fgsim/vmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fgsim {

std::pair<double, double> VmmProgram::weight_targets(double w) const {
    return {i_floor + i_ref * (1.0 + w) / 2.0, i_floor + i_ref * (1.0 - w) / 2.0};
}

void VmmProgram::validate() const {
    if (weights.empty() || weights[0].empty())
        throw std::invalid_argument("weight matrix must be non-empty");
    for (const auto& row : weights) {
        if (static_cast<int>(row.size()) != outputs())
            throw std::invalid_argument("ragged weight matrix");
        for (double w : row)
            if (!(w >= -1.0) || !(w <= 1.0))
                throw std::invalid_argument("weights must lie in [-1, 1]");
    }
    if (!(i_ref > 0) || !(i_floor > 0))
        throw std::invalid_argument("i_ref and i_floor must be > 0");
}

double settle_gate(const CellState& periph, double i_in) {
    if (!(i_in > 0)) throw TargetRangeError("settle_gate input current must be > 0");
    const TerminalBiases rails{0.0, 1.0, 0.0};

    auto current_at = [&](double v_g) {
        TerminalBiases b = rails;
        b.v_g = v_g;
        return read_current(periph, b);
    };

    double lo = kVMin;
    double hi = kVMax;
    const double i_lo = current_at(lo);
    const double i_hi = current_at(hi);
    if (i_in <= i_lo || i_in >= i_hi)
        throw TargetRangeError("settle_gate input current unreachable within the safe gate range");

    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double i_mid = current_at(mid);
        if (std::abs(i_mid - i_in) < 1e-12 * i_in) return mid;
        if (i_mid < i_in) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<CellState> make_peripherals(const DeviceParams& params, double i_ref, int count) {
    std::vector<CellState> periphs;
    periphs.reserve(count);
    const TerminalBiases rb = read_biases();
    for (int i = 0; i < count; ++i) periphs.push_back(state_for_current(i_ref, rb, params));
    return periphs;
}

VmmProgram program_weights(ArrayState& array, const std::vector<std::vector<double>>& weights,
                           double i_ref, double i_floor, const TuningConfig& tuning,
                           const BiasProtocol& protocol, Rng& rng) {
    VmmProgram program;
    program.weights = weights;
    program.i_ref = i_ref;
    program.i_floor = i_floor;
    program.validate();

    const int m = program.inputs();
    const int n = program.outputs();
    if (array.topology.rows < 2 * m || array.topology.cols < 2 * n)
        throw std::invalid_argument("array too small for differential weight matrix");

    program.cell_targets = Grid<double>(2 * m, 2 * n);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < n; ++k) {
            const auto [ip, im] = program.weight_targets(weights[j][k]);
            program.cell_targets.at(2 * j, 2 * k) = ip;
            program.cell_targets.at(2 * j + 1, 2 * k) = im;
            program.cell_targets.at(2 * j, 2 * k + 1) = im;
            program.cell_targets.at(2 * j + 1, 2 * k + 1) = ip;
        }
    }

    std::vector<TuningTask> tasks;
    for (int r = 0; r < 2 * m; ++r)
        for (int c = 0; c < 2 * n; ++c)
            tasks.push_back({CellCoord{r, c}, program.cell_targets.at(r, c)});

    const auto result = tune_sequence(array, tasks, tuning, protocol, rng);

    program.achieved = Grid<double>(2 * m, 2 * n);
    program.converged = Grid<char>(2 * m, 2 * n);
    size_t t = 0;
    for (int r = 0; r < 2 * m; ++r) {
        for (int c = 0; c < 2 * n; ++c, ++t) {
            program.achieved.at(r, c) = read_cell_ideal(array, {r, c}, protocol);
            program.converged.at(r, c) = result.traces[t].converged ? 1 : 0;
        }
    }
    return program;
}

namespace {

void validate_input(const VmmProgram& program, const VmmInput& input) {
    if (static_cast<int>(input.lines.size()) != program.inputs())
        throw std::invalid_argument("input vector length does not match programmed inputs");
    for (const auto& [xp, xm] : input.lines) {
        if (xp < program.i_floor || xp > program.i_ref || xm < program.i_floor ||
            xm > program.i_ref)
            throw TargetRangeError("input currents must lie in [i_floor, i_ref]");
    }
}

VmmOutput rails_output(const ArrayState& array, const VmmProgram& program,
                       const std::vector<CellState>& periphs, const VmmInput& input) {
    validate_input(program, input);
    const int m = program.inputs();
    const int n = program.outputs();
    if (static_cast<int>(periphs.size()) < 2 * m)
        throw std::invalid_argument("need one peripheral device per gate line (2 per input)");

    std::vector<double> gate(2 * m);
    for (int j = 0; j < m; ++j) {
        gate[2 * j] = settle_gate(periphs[2 * j], input.lines[j].first);
        gate[2 * j + 1] = settle_gate(periphs[2 * j + 1], input.lines[j].second);
    }

    VmmOutput out;
    out.i_plus.assign(n, 0.0);
    out.i_minus.assign(n, 0.0);
    for (int r = 0; r < 2 * m; ++r) {
        for (int k = 0; k < n; ++k) {
            const TerminalBiases b{gate[r], 1.0, 0.0};
            out.i_plus[k] += read_current(array.cell(r, 2 * k), b);
            out.i_minus[k] += read_current(array.cell(r, 2 * k + 1), b);
        }
    }
    return out;
}

}  // namespace

VmmOutput vmm_output(const ArrayState& array, const VmmProgram& program,
                     const std::vector<CellState>& periphs, const VmmInput& input) {
    VmmOutput out = rails_output(array, program, periphs, input);
    out.y.resize(out.i_plus.size());
    for (size_t k = 0; k < out.y.size(); ++k) out.y[k] = out.i_plus[k] - out.i_minus[k];
    return out;
}

VmmOutput vmm_output_noisy(const ArrayState& array, const VmmProgram& program,
                           const std::vector<CellState>& periphs, const VmmInput& input,
                           double window, Rng& rng) {
    if (!(window > 0)) throw std::invalid_argument("readout window must be > 0");
    VmmOutput out = rails_output(array, program, periphs, input);
    const DeviceParams& p = array.cell(0, 0).params;
    auto sample = [&](double current) {
        if ((p.noise_a == 0.0 && p.noise_b == 0.0) || current <= 0.0) return current;
        const double sigma = (p.noise_a + p.noise_b * std::sqrt(kNoiseRefCurrent / current)) /
                             std::sqrt(window / kNoiseRefWindow);
        std::normal_distribution<double> noise(0.0, sigma);
        return std::max(0.0, current * (1.0 + noise(rng)));
    };
    for (auto& v : out.i_plus) v = sample(v);
    for (auto& v : out.i_minus) v = sample(v);
    out.y.resize(out.i_plus.size());
    for (size_t k = 0; k < out.y.size(); ++k) out.y[k] = out.i_plus[k] - out.i_minus[k];
    return out;
}

double linearity_metric(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 10)
        throw std::invalid_argument("linearity_metric needs at least 10 samples");
    for (size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i].first > samples[i - 1].first))
            throw std::invalid_argument("linearity_metric needs strictly increasing x");
    }
    std::vector<double> d;
    d.reserve(samples.size() - 2);
    for (size_t i = 1; i + 1 < samples.size(); ++i) {
        d.push_back((samples[i + 1].second - samples[i - 1].second) /
                    (samples[i + 1].first - samples[i - 1].first));
    }
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    const double median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    if (median == 0.0) throw std::domain_error("linearity_metric: zero median derivative");
    return (sorted.back() - sorted.front()) / median;
}

}  // namespace fgsim
