#include "fgsim/device.hpp"

#include <algorithm>
#include <cmath>

namespace fgsim {

namespace {

bool in_safe_range(double v) {
    return std::isfinite(v) && v >= kVMin && v <= kVMax;
}

}  // namespace

void TerminalBiases::validate() const {
    if (!in_safe_range(v_g) || !in_safe_range(v_d) || !in_safe_range(v_s)) {
        throw BiasRangeError("terminal bias outside safe range [-2 V, +12 V]: v_g=" +
                             std::to_string(v_g) + " v_d=" + std::to_string(v_d) +
                             " v_s=" + std::to_string(v_s));
    }
}

void Pulse::validate() const {
    biases.validate();
    if (!(duration > 0.0) || duration > kMaxPulseDuration) {
        throw std::invalid_argument("pulse duration must be in (0, 1 s], got " +
                                    std::to_string(duration));
    }
}

void DeviceParams::validate() const {
    if (kappa_cg < 0 || kappa_d < 0 || kappa_s < 0 || kappa_cg + kappa_d + kappa_s > 1.0 + 1e-12)
        throw std::invalid_argument("coupling coefficients must be >= 0 and sum to <= 1");
    if (!(i_s0 > 0)) throw std::invalid_argument("i_s0 must be > 0");
    if (!(n_slope >= 1)) throw std::invalid_argument("n_slope must be >= 1");
    if (!(u_t > 0)) throw std::invalid_argument("u_t must be > 0");
    if (!(i_max > i_s0)) throw std::invalid_argument("i_max must be > i_s0");
    if (!(inj_slope > 0)) throw std::invalid_argument("inj_slope must be > 0");
    if (!(tun_slope > 0)) throw std::invalid_argument("tun_slope must be > 0");
    if (!(q_min < q_max)) throw std::invalid_argument("q_min must be < q_max");
    if (!std::isfinite(variability_sigma) || variability_sigma < 0)
        throw std::invalid_argument("variability_sigma must be finite and >= 0");
}

double fg_potential(const CellState& state, const TerminalBiases& biases) {
    biases.validate();
    const DeviceParams& p = state.params;
    return p.kappa_cg * biases.v_g + p.kappa_d * biases.v_d + p.kappa_s * biases.v_s + state.q;
}

double read_current(const CellState& state, const TerminalBiases& biases) {
    if (biases.v_d < biases.v_s) {
        throw UnsupportedRegimeError("reverse drain-source bias is not modeled (v_d < v_s)");
    }
    const DeviceParams& p = state.params;
    const double v_fg = fg_potential(state, biases);
    const double gate_term = std::exp((v_fg - p.v_th0) / (p.n_slope * p.u_t));
    const double ds_term = 1.0 - std::exp(-(biases.v_d - biases.v_s) / p.u_t);
    return std::min(p.i_max, p.i_s0 * gate_term * ds_term);
}

CellState state_for_current(double target, const TerminalBiases& biases,
                            const DeviceParams& params) {
    params.validate();
    biases.validate();
    if (biases.v_d < biases.v_s) {
        throw UnsupportedRegimeError("state_for_current requires forward bias");
    }
    if (!(target > 0.0) || !(target < params.i_max)) {
        throw TargetRangeError("target current must lie in (0, i_max)");
    }
    const double ds_term = 1.0 - std::exp(-(biases.v_d - biases.v_s) / params.u_t);
    if (!(ds_term > 0.0)) {
        throw TargetRangeError("zero drain-source bias cannot carry a positive current");
    }
    const double v_fg = params.v_th0 + params.n_slope * params.u_t *
                                           std::log(target / (params.i_s0 * ds_term));
    const double q = v_fg - params.kappa_cg * biases.v_g - params.kappa_d * biases.v_d -
                     params.kappa_s * biases.v_s;
    if (q < params.q_min || q > params.q_max) {
        throw TargetRangeError("target current not reachable within the charge range");
    }
    CellState state;
    state.q = q;
    state.params = params;
    return state;
}

double injection_rate(const CellState& state, const TerminalBiases& biases) {
    const DeviceParams& p = state.params;
    const double overdrive = biases.v_s - biases.v_d;
    if (overdrive <= p.inj_vmin) return 0.0;
    if (biases.v_g < p.inj_gate_lo || biases.v_g > p.inj_gate_hi) return 0.0;
    return p.inj_rate0 * std::exp((overdrive - p.inj_vmin) / p.inj_slope);
}

double tunneling_rate(const CellState& state, const TerminalBiases& biases) {
    const DeviceParams& p = state.params;
    const double overdrive = biases.v_g - fg_potential(state, biases);
    if (overdrive <= p.tun_vmin) return 0.0;
    return p.tun_rate0 * std::exp((overdrive - p.tun_vmin) / p.tun_slope);
}

std::pair<CellState, UpdateReport> pulse_update(const CellState& state, const Pulse& pulse) {
    pulse.validate();
    UpdateReport report;
    report.r_inj = injection_rate(state, pulse.biases);
    report.r_tun = tunneling_rate(state, pulse.biases);

    const DeviceParams& p = state.params;
    const double q_raw = state.q + (report.r_tun - report.r_inj) * pulse.duration;
    const double q_new = std::clamp(q_raw, p.q_min, p.q_max);
    report.clamped = (q_new != q_raw);

    CellState next = state;
    next.q = q_new;
    return {next, report};
}

double sample_readout(const CellState& state, const TerminalBiases& biases,
                      double window, Rng& rng) {
    if (!(window > 0.0)) throw std::invalid_argument("readout window must be > 0");
    const double current = read_current(state, biases);
    const DeviceParams& p = state.params;
    if (p.noise_a == 0.0 && p.noise_b == 0.0) return current;
    if (current <= 0.0) return 0.0;
    const double sigma_rel = (p.noise_a + p.noise_b * std::sqrt(kNoiseRefCurrent / current)) /
                             std::sqrt(window / kNoiseRefWindow);
    std::normal_distribution<double> noise(0.0, sigma_rel);
    return std::max(0.0, current * (1.0 + noise(rng)));
}

CellState draw_cell(const DeviceParams& params, Rng& rng) {
    params.validate();
    CellState cell;
    cell.params = params;
    cell.params.variability_sigma = params.variability_sigma;

    if (params.variability_sigma > 0.0) {
        const double sigma = std::sqrt(std::log(1.0 + params.variability_sigma *
                                                          params.variability_sigma));
        const double mu = -0.5 * sigma * sigma;  // unit-mean lognormal
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto perturb = [&](double value) { return value * std::exp(mu + sigma * gauss(rng)); };

        DeviceParams& p = cell.params;
        p.i_s0 = perturb(p.i_s0);
        p.u_t = perturb(p.u_t);
        p.n_slope = 1.0 + perturb(p.n_slope - 1.0);
        p.inj_rate0 = perturb(p.inj_rate0);
        p.tun_rate0 = perturb(p.tun_rate0);
        p.inj_slope = perturb(p.inj_slope);
        p.tun_slope = perturb(p.tun_slope);

        const double sum = p.kappa_cg + p.kappa_d + p.kappa_s;
        double kcg = perturb(p.kappa_cg);
        double kd = perturb(p.kappa_d);
        double ks = perturb(p.kappa_s);
        const double scale = sum / (kcg + kd + ks);
        p.kappa_cg = kcg * scale;
        p.kappa_d = kd * scale;
        p.kappa_s = ks * scale;
    }
    cell.q = cell.params.q_max;
    return cell;
}

}  // namespace fgsim
