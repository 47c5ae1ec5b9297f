#include <cmath>
#include <vector>

#include <doctest.h>

#include "fgsim/device.hpp"

using namespace fgsim;

namespace {

CellState default_cell(double q = 0.0) {
    CellState cell;
    cell.q = q;
    return cell;
}

CellState quiet_cell(double q = 0.0) {
    CellState cell = default_cell(q);
    cell.params.noise_a = 0.0;
    cell.params.noise_b = 0.0;
    return cell;
}

}  // namespace

TEST_CASE("fg_potential is the capacitive divider plus stored charge") {
    CellState cell = default_cell();
    CHECK(fg_potential(cell, {0.0, 0.0, 0.0}) == 0.0);

    // 0.60*2.5 + 0.15*1 + 0.20*0 + 0 = 1.65
    CHECK(fg_potential(cell, read_biases()) == doctest::Approx(1.65).epsilon(1e-12));

    cell.params.kappa_s = 0.05;
    cell.q = -0.45;
    // 0.60*2.5 + 0.15*1 + 0.05*0 - 0.45 = 1.2
    CHECK(fg_potential(cell, {2.5, 1.0, 0.0}) == doctest::Approx(1.2).epsilon(1e-12));

    // linear in each terminal
    cell = default_cell(-0.3);
    const double base = fg_potential(cell, {1.0, 1.0, 1.0});
    CHECK(fg_potential(cell, {2.0, 1.0, 1.0}) - base == doctest::Approx(0.60).epsilon(1e-9));
    CHECK(fg_potential(cell, {1.0, 2.0, 1.0}) - base == doctest::Approx(0.15).epsilon(1e-9));
    CHECK(fg_potential(cell, {1.0, 1.0, 2.0}) - base == doctest::Approx(0.20).epsilon(1e-9));
}

TEST_CASE("fg_potential rejects out-of-range biases") {
    CellState cell = default_cell();
    CHECK_THROWS_AS(fg_potential(cell, {12.5, 0.0, 0.0}), BiasRangeError);
    CHECK_THROWS_AS(fg_potential(cell, {0.0, -2.5, 0.0}), BiasRangeError);
    CHECK_THROWS_AS(fg_potential(cell, {0.0, 0.0, 13.0}), BiasRangeError);
}

TEST_CASE("read_current matches hand-computed values") {
    // I = i_s0 * exp((v_fg - v_th0)/(n*u_t)) * (1 - exp(-(v_d - v_s)/u_t))
    CHECK(read_current(default_cell(0.0), read_biases()) ==
          doctest::Approx(2.513507087549194e-05).epsilon(1e-9));
    CHECK(read_current(default_cell(-0.5), read_biases()) ==
          doctest::Approx(6.310930121042271e-11).epsilon(1e-9));
}

TEST_CASE("read_current vanishes at zero drain-source bias") {
    CHECK(read_current(default_cell(), {2.5, 1.0, 1.0}) == 0.0);
}

TEST_CASE("read_current throws on reverse drain-source bias") {
    CHECK_THROWS_AS(read_current(default_cell(), {2.5, 0.0, 1.0}), UnsupportedRegimeError);
}

TEST_CASE("read_current saturates at i_max") {
    CellState cell = default_cell(0.0);
    CHECK(read_current(cell, {4.0, 1.0, 0.0}) == cell.params.i_max);
}

TEST_CASE("one decade of current per n*u_t*ln(10) of charge") {
    const double decade = 0.08928273698084414;  // n * u_t * ln(10)
    CellState lo = default_cell(-0.5);
    CellState hi = default_cell(-0.5 + decade);
    CHECK(read_current(hi, read_biases()) / read_current(lo, read_biases()) ==
          doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("gate sweep of read_current is non-decreasing") {
    CellState cell = default_cell(-0.4);
    double prev = 0.0;
    for (double v_g = 0.0; v_g <= 5.0; v_g += 0.05) {
        const double i = read_current(cell, {v_g, 1.0, 0.0});
        CHECK(i >= prev);
        prev = i;
    }
}

TEST_CASE("state_for_current inverts read_current") {
    DeviceParams params;
    for (double target : {0.5e-9, 1e-9, 10e-9, 1e-6, 2e-6}) {
        const CellState state = state_for_current(target, read_biases(), params);
        CHECK(read_current(state, read_biases()) == doctest::Approx(target).epsilon(1e-9));
    }
    // frozen charge values for the two reference targets
    CHECK(state_for_current(1e-6, read_biases(), params).q ==
          doctest::Approx(-0.12502084113409095).epsilon(1e-9));
    CHECK(state_for_current(1e-9, read_biases(), params).q ==
          doctest::Approx(-0.39286905207662337).epsilon(1e-9));
}

TEST_CASE("state_for_current charge spacing across three decades") {
    DeviceParams params;
    const double q_hi = state_for_current(1e-6, read_biases(), params).q;
    const double q_lo = state_for_current(1e-9, read_biases(), params).q;
    CHECK(q_hi - q_lo == doctest::Approx(0.2678482109425324).epsilon(1e-9));
}

TEST_CASE("state_for_current rejects unreachable targets") {
    DeviceParams params;
    CHECK_THROWS_AS(state_for_current(2.0 * params.i_max, read_biases(), params),
                    TargetRangeError);
    CHECK_THROWS_AS(state_for_current(0.0, read_biases(), params), TargetRangeError);
    CHECK_THROWS_AS(state_for_current(-1e-9, read_biases(), params), TargetRangeError);
    // below what q_min allows
    CHECK_THROWS_AS(state_for_current(1e-30, read_biases(), params), TargetRangeError);
    // no current can flow with v_d == v_s
    CHECK_THROWS_AS(state_for_current(1e-9, {2.5, 1.0, 1.0}, params), TargetRangeError);
    CHECK_THROWS_AS(state_for_current(1e-9, {2.5, 0.0, 1.0}, params), UnsupportedRegimeError);
}

TEST_CASE("injection rate matches the exponential law above threshold") {
    CellState cell = default_cell(-0.2);
    // overdrive v_s - v_d = 4.5, gate inside the window
    CHECK(injection_rate(cell, {1.6, 0.0, 4.5}) ==
          doctest::Approx(2.8031624894526143e-08).epsilon(1e-9));
    CHECK(injection_rate(cell, {1.6, 0.0, 8.0}) ==
          doctest::Approx(381.229223126886).epsilon(1e-9));
    // gated off below the overdrive threshold or outside the gate window
    CHECK(injection_rate(cell, {1.6, 0.0, 4.0}) == 0.0);
    CHECK(injection_rate(cell, {0.9, 0.0, 4.5}) == 0.0);
    CHECK(injection_rate(cell, {2.3, 0.0, 4.5}) == 0.0);
    CHECK(injection_rate(cell, {-1.0, 0.0, 8.0}) == 0.0);
}

TEST_CASE("tunneling rate matches the exponential law above threshold") {
    CHECK(tunneling_rate(default_cell(-0.3), {8.5, 2.7, 0.0}) ==
          doctest::Approx(3.5055959305207547).epsilon(1e-9));
    CHECK(tunneling_rate(default_cell(-1.5), {10.0, 0.0, 0.0}) ==
          doctest::Approx(334906025.3214709).epsilon(1e-9));
    // suppressed below the overdrive cutoff
    CHECK(tunneling_rate(default_cell(0.0), {8.5, 2.7, 0.0}) == 0.0);
    CHECK(tunneling_rate(default_cell(0.0), read_biases()) == 0.0);
}

TEST_CASE("readout biases never move the charge") {
    // both recharging mechanisms must be inactive at the read condition for
    // any admissible stored charge
    for (int i = 0; i <= 150; ++i) {
        const double q = -1.5 + 0.01 * i;
        CellState cell = default_cell(q);
        auto [next, report] = pulse_update(cell, {read_biases(), 10e-3});
        CHECK(report.r_inj == 0.0);
        CHECK(report.r_tun == 0.0);
        CHECK(next.q == q);
    }
}

TEST_CASE("program pulses strictly decrease the readout current") {
    CellState cell = default_cell(0.0);
    double prev = read_current(cell, read_biases());
    double amplitude = 4.5;
    for (int i = 0; i < 70; ++i) {
        auto [next, report] = pulse_update(cell, {{1.6, 0.0, amplitude}, 5e-6});
        cell = next;
        const double current = read_current(cell, read_biases());
        CHECK(current < prev);
        prev = current;
        amplitude = std::min(8.0, amplitude + 0.05);
    }
    CHECK(cell.q > cell.params.q_min);
}

TEST_CASE("erase pulses strictly increase the readout current until the clamp") {
    CellState cell = default_cell(-1.2);
    double prev = read_current(cell, read_biases());
    double amplitude = 5.0;
    bool clamped = false;
    for (int i = 0; i < 80 && !clamped; ++i) {
        auto [next, report] = pulse_update(cell, {{amplitude, 2.7, 0.0}, 0.6e-3});
        cell = next;
        clamped = report.clamped;
        const double current = read_current(cell, read_biases());
        if (!clamped) {
            CHECK(current >= prev);
            prev = current;
        }
    }
    CHECK(cell.q <= cell.params.q_max);
}

TEST_CASE("splitting a pulse with constant rates gives the same charge") {
    // with injection active and tunneling gated off the rate does not depend
    // on q, so N short pulses must equal one long pulse up to rounding
    const TerminalBiases biases{1.6, 0.0, 6.0};
    CellState one = default_cell(0.0);
    one = pulse_update(one, {biases, 10e-6}).first;

    CellState many = default_cell(0.0);
    for (int i = 0; i < 10; ++i) many = pulse_update(many, {biases, 1e-6}).first;

    CHECK(tunneling_rate(default_cell(0.0), biases) == 0.0);
    CHECK(one.q == doctest::Approx(many.q).epsilon(1e-12));
}

TEST_CASE("pulse_update clamps the charge and reports it") {
    CellState cell = default_cell(0.0);
    auto [next, report] = pulse_update(cell, {{1.6, 0.0, 9.0}, 1e-3});
    CHECK(next.q == cell.params.q_min);
    CHECK(report.clamped);

    CellState erased = default_cell(-0.05);
    auto [next2, report2] = pulse_update(erased, {{10.0, 0.0, 0.0}, 1e-3});
    CHECK(next2.q == erased.params.q_max);
    CHECK(report2.clamped);
}

TEST_CASE("pulse_update validates duration") {
    CHECK_THROWS_AS(pulse_update(default_cell(), {read_biases(), 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(pulse_update(default_cell(), {read_biases(), -1e-6}), std::invalid_argument);
    CHECK_THROWS_AS(pulse_update(default_cell(), {read_biases(), 2.0}), std::invalid_argument);
}

TEST_CASE("program inhibit: 2.7 V on the drain kills injection by >= 1e6") {
    CellState cell = default_cell(-0.2);
    const double selected = injection_rate(cell, {1.6, 0.0, 9.0});
    const double inhibited = injection_rate(cell, {1.6, 2.7, 9.0});
    REQUIRE(selected > 0.0);
    CHECK(inhibited / selected <= 1e-6);
}

TEST_CASE("erase inhibit: 3 V on both rails suppresses tunneling by >= 1e3") {
    // worst case is the most deeply programmed cell
    CellState cell = default_cell(-1.5);
    const double selected = tunneling_rate(cell, {8.5, 0.0, 0.0});
    const double inhibited = tunneling_rate(cell, {8.5, 3.0, 3.0});
    REQUIRE(selected > 0.0);
    CHECK(inhibited / selected <= 1e-3);
}

TEST_CASE("erase inhibit: the drain alone buys no more than 1e2") {
    CellState cell = default_cell(-1.5);
    const double selected = tunneling_rate(cell, {8.5, 0.0, 0.0});
    const double drain_only = tunneling_rate(cell, {8.5, 3.0, 0.0});
    REQUIRE(drain_only > 0.0);
    CHECK(selected / drain_only <= 1e2);
}

TEST_CASE("sample_readout is exact with zero noise coefficients") {
    Rng rng(1);
    CellState cell = quiet_cell(-0.3);
    CHECK(sample_readout(cell, read_biases(), 10e-3, rng) ==
          read_current(cell, read_biases()));
}

TEST_CASE("sample_readout scatter follows the noise law") {
    DeviceParams params;
    struct Case {
        double target;
        double window;
        double sigma;  // (a + b*sqrt(1nA/I)) / sqrt(window/10ms), frozen
    };
    const Case cases[] = {
        {1e-9, 10e-3, 0.021},
        {1e-6, 10e-3, 0.001632455532033676},
        {1e-9, 0.1, 0.006640783086353597},
    };
    Rng rng(42);
    for (const Case& c : cases) {
        const CellState cell = state_for_current(c.target, read_biases(), params);
        const int n = 20000;
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double rel = sample_readout(cell, read_biases(), c.window, rng) / c.target;
            sum += rel;
            sum_sq += rel * rel;
        }
        const double mean = sum / n;
        const double std = std::sqrt(sum_sq / n - mean * mean);
        CHECK(mean == doctest::Approx(1.0).epsilon(5.0 * c.sigma / std::sqrt(double(n))));
        CHECK(std == doctest::Approx(c.sigma).epsilon(0.05));
    }
}

TEST_CASE("relative readout noise grows toward low currents") {
    DeviceParams params;
    Rng rng(3);
    auto rel_std = [&](double target) {
        const CellState cell = state_for_current(target, read_biases(), params);
        double sum = 0.0, sum_sq = 0.0;
        const int n = 5000;
        for (int i = 0; i < n; ++i) {
            const double rel = sample_readout(cell, read_biases(), 10e-3, rng) / target;
            sum += rel;
            sum_sq += rel * rel;
        }
        const double mean = sum / n;
        return std::sqrt(sum_sq / n - mean * mean);
    };
    CHECK(rel_std(1e-9) > rel_std(1e-6));
}

TEST_CASE("sample_readout is deterministic for a fixed seed") {
    CellState cell = default_cell(-0.3);
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i)
        CHECK(sample_readout(cell, read_biases(), 10e-3, a) ==
              sample_readout(cell, read_biases(), 10e-3, b));
}

TEST_CASE("draw_cell with zero spread copies the parameters") {
    DeviceParams params;
    Rng rng(1);
    const CellState cell = draw_cell(params, rng);
    CHECK(cell.q == params.q_max);
    CHECK(cell.params.i_s0 == params.i_s0);
    CHECK(cell.params.u_t == params.u_t);
    CHECK(cell.params.kappa_cg == params.kappa_cg);
}

TEST_CASE("draw_cell is deterministic for a fixed seed") {
    DeviceParams params;
    params.variability_sigma = 0.05;
    Rng a(11), b(11);
    for (int i = 0; i < 20; ++i) {
        const CellState x = draw_cell(params, a);
        const CellState y = draw_cell(params, b);
        CHECK(x.params.i_s0 == y.params.i_s0);
        CHECK(x.params.kappa_cg == y.params.kappa_cg);
        CHECK(x.params.tun_rate0 == y.params.tun_rate0);
    }
}

TEST_CASE("draw_cell spread statistics match the requested sigma") {
    DeviceParams params;
    params.variability_sigma = 0.05;
    Rng rng(5);
    const int n = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double rel = draw_cell(params, rng).params.i_s0 / params.i_s0;
        sum += rel;
        sum_sq += rel * rel;
    }
    const double mean = sum / n;
    const double std = std::sqrt(sum_sq / n - mean * mean);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.005));
    CHECK(std == doctest::Approx(params.variability_sigma).epsilon(0.05));
}

TEST_CASE("draw_cell preserves the coupling coefficient sum") {
    DeviceParams params;
    params.variability_sigma = 0.1;
    const double sum0 = params.kappa_cg + params.kappa_d + params.kappa_s;
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const CellState cell = draw_cell(params, rng);
        const double sum = cell.params.kappa_cg + cell.params.kappa_d + cell.params.kappa_s;
        CHECK(sum == doctest::Approx(sum0).epsilon(1e-12));
        CHECK(cell.params.kappa_cg > 0.0);
    }
}

TEST_CASE("parameter validation rejects nonsense") {
    DeviceParams params;
    params.i_s0 = 0.0;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = DeviceParams{};
    params.kappa_cg = 0.9;
    params.kappa_d = 0.2;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = DeviceParams{};
    params.q_min = 0.5;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = DeviceParams{};
    params.variability_sigma = -0.1;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}
