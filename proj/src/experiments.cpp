#include "fgsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fgsim {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const RunContext& ctx, const std::string& command, const std::string& filename,
              const std::string& header)
        : path_(std::filesystem::path(ctx.out_dir) / filename) {
        std::filesystem::create_directories(ctx.out_dir);
        out_.open(path_);
        if (!out_) throw std::runtime_error("cannot open output file: " + path_.string());
        char hash[32];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(config_hash(ctx.config)));
        out_ << "# fg-array-sim " << kToolVersion << "\n";
        out_ << "# command: " << command << "\n";
        out_ << "# config_hash: " << hash << "\n";
        out_ << "# seed: " << (ctx.config.has_seed ? std::to_string(ctx.config.seed) : "none")
             << "\n";
        out_ << header << "\n";
    }

    template <typename... Args>
    void row(const Args&... args) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(args), first = false), ...);
        out_ << "\n";
    }

private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    std::filesystem::path path_;
    std::ofstream out_;
};

Rng make_rng(const ExperimentConfig& config, std::uint64_t stream = 0) {
    return Rng(config.seed * 0x9e3779b97f4a7c15ull + stream + 1);
}

void require_seed(const ExperimentConfig& config) {
    if ((config.device.noise_a != 0.0 || config.device.noise_b != 0.0 ||
         config.device.variability_sigma != 0.0) &&
        !config.has_seed) {
        throw ConfigError("seed is mandatory for experiments with noise or variability");
    }
}

std::vector<TuningTask> all_cell_tasks(const ArrayTopology& topology,
                                       const std::vector<double>& targets) {
    std::vector<TuningTask> tasks;
    for (double target : targets)
        for (int r = 0; r < topology.rows; ++r)
            for (int c = 0; c < topology.cols; ++c) tasks.push_back({{r, c}, target});
    return tasks;
}

}  // namespace

int cmd_sweep(const RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.config;
    CsvWriter out(ctx, "sweep", "sweep.csv", "sweep_kind,sweep_value,state_id,current");

    std::vector<CellState> states;
    const TerminalBiases rb{cfg.protocol.read_v_g, cfg.protocol.read_v_d, cfg.protocol.read_v_s};
    for (double target : cfg.sweep.state_currents)
        states.push_back(state_for_current(target, rb, cfg.device));

    for (size_t id = 0; id < states.size(); ++id) {
        const SweepSpec& g = cfg.sweep.gate;
        for (double v = g.from; v <= g.to + 1e-12; v += g.step) {
            const double i = read_current(states[id], {v, g.fixed, 0.0});
            out.row("gate", v, static_cast<int>(id), i);
        }
        const SweepSpec& d = cfg.sweep.drain_source;
        for (double v = d.from; v <= d.to + 1e-12; v += d.step) {
            const double i = read_current(states[id], {d.fixed, v, 0.0});
            out.row("drain_source", v, static_cast<int>(id), i);
        }
    }
    return kExitOk;
}

int cmd_dynamics(const RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.config;
    CsvWriter out(ctx, "dynamics", "dynamics.csv",
                  "train,kind,pulse_index,amplitude,duration,current");

    const CellCoord cell{0, 0};
    int train_id = 0;
    for (const PulseTrain& train : cfg.dynamics.trains) {
        Rng rng = make_rng(cfg, train_id);
        ArrayState array = make_array(cfg.topology, cfg.device, rng);
        if (train.start_state == "programmed") initial_program(array, cell, cfg.protocol);

        out.row(train_id, to_string(train.kind), 0, 0.0, 0.0,
                read_cell_ideal(array, cell, cfg.protocol));
        for (int i = 0; i < train.count; ++i) {
            const double amplitude = train.start_amplitude + i * train.step;
            const auto grid = bias_map(array.topology, train.kind, cell, cfg.protocol, amplitude);
            apply_array_pulse(array, grid, train.duration);
            out.row(train_id, to_string(train.kind), i + 1, amplitude, train.duration,
                    read_cell_ideal(array, cell, cfg.protocol));
        }
        ++train_id;
    }
    return kExitOk;
}

int cmd_tune(const RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.config;
    require_seed(cfg);
    CsvWriter out(ctx, "tune", "tune_summary.csv",
                  "task,target,row,col,converged,pulses,final_current,rel_error,max_drift_prev");

    Rng rng = make_rng(cfg);
    ArrayState array = make_array(cfg.topology, cfg.device, rng);
    const auto tasks = all_cell_tasks(cfg.topology, cfg.tune.targets);
    const auto result = tune_sequence(array, tasks, cfg.tuning, cfg.protocol, rng);

    bool ok = true;
    for (size_t t = 0; t < tasks.size(); ++t) {
        const TuningTrace& trace = result.traces[t];
        const double rel_error =
            std::abs(trace.final_current - tasks[t].target) / tasks[t].target;
        out.row(static_cast<int>(t), tasks[t].target, tasks[t].cell.row, tasks[t].cell.col,
                trace.converged ? 1 : 0, trace.pulses_used, trace.final_current, rel_error,
                result.disturb.drift_after_each[t]);
        if (cfg.tune.write_traces) {
            std::ostringstream name;
            name << "trace_" << t << "_r" << tasks[t].cell.row << "c" << tasks[t].cell.col
                 << ".log";
            std::ofstream tf(std::filesystem::path(ctx.out_dir) / name.str());
            write_trace(tf, trace);
        }
        ok = ok && trace.converged && rel_error <= cfg.tuning.rel_tolerance &&
             result.disturb.drift_after_each[t] < 0.01;
    }
    if (cfg.assertions && !ok) return kExitAssertionFailed;
    return kExitOk;
}

namespace {

struct DisturbRun {
    RoutingVariant routing;
    double v_d_inhibit;
    double max_nonselected_change = 0.0;
    double max_half_c_change = 0.0;
    double selected_change = 0.0;
};

// Programs the selected cell, then drives a full erase ramp (held at max
// amplitude until the selected cell is back at the erased rail) and records
// per-cell relative current changes.
DisturbRun run_disturb(const RunContext& ctx, RoutingVariant routing, double v_d_sel,
                       double v_d_inhibit, CsvWriter& out) {
    const ExperimentConfig& cfg = ctx.config;
    ArrayTopology topology = cfg.topology;
    topology.routing = routing;

    BiasProtocol protocol = cfg.protocol;
    protocol.erase_v_d_sel = v_d_sel;
    protocol.erase_v_d_unsel = v_d_inhibit;

    DeviceParams params = cfg.device;
    params.variability_sigma = 0.0;
    Rng rng(1);
    ArrayState array = make_array(topology, params, rng);

    const TerminalBiases rb{protocol.read_v_g, protocol.read_v_d, protocol.read_v_s};
    const CellCoord selected{0, 0};
    for (int r = 0; r < topology.rows; ++r)
        for (int c = 0; c < topology.cols; ++c)
            array.cell(r, c) = state_for_current(cfg.disturb.neighbor_target, rb, params);
    array.cell(0, 0) = state_for_current(cfg.disturb.selected_target, rb, params);

    Grid<double> before(topology.rows, topology.cols);
    for (int r = 0; r < topology.rows; ++r)
        for (int c = 0; c < topology.cols; ++c)
            before.at(r, c) = read_cell_ideal(array, {r, c}, protocol);

    const RampSchedule& ramp = cfg.tuning.erase_ramp;
    double amplitude = ramp.start_amplitude;
    for (int pulse = 0; pulse < cfg.disturb.max_pulses; ++pulse) {
        const auto grid = bias_map(topology, OpKind::Erase, selected, protocol, amplitude);
        apply_array_pulse(array, grid, ramp.pulse_duration);
        amplitude = std::min(ramp.max_amplitude, amplitude + ramp.step);
        const CellState& sel = array.cell(0, 0);
        if (sel.q >= sel.params.q_max - 0.01 * (sel.params.q_max - sel.params.q_min)) break;
    }

    DisturbRun run{routing, v_d_inhibit};
    for (int r = 0; r < topology.rows; ++r) {
        for (int c = 0; c < topology.cols; ++c) {
            const double after = read_cell_ideal(array, {r, c}, protocol);
            const double change = std::abs(after - before.at(r, c)) / before.at(r, c);
            const CellClass cls = classify(topology, OpKind::Erase, selected, {r, c});
            out.row(to_string(routing), v_d_inhibit, r, c, to_string(cls), before.at(r, c),
                    after, change);
            if (cls == CellClass::Selected) {
                run.selected_change = change;
            } else {
                run.max_nonselected_change = std::max(run.max_nonselected_change, change);
                if (cls == CellClass::HalfC)
                    run.max_half_c_change = std::max(run.max_half_c_change, change);
            }
        }
    }
    return run;
}

}  // namespace

int cmd_disturb(const RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.config;
    CsvWriter out(ctx, "disturb", "disturb.csv",
                  "routing,v_d_inhibit,row,col,class,current_before,current_after,rel_change");

    // Modified routing at the protocol defaults.
    const DisturbRun modified =
        run_disturb(ctx, RoutingVariant::Modified, cfg.protocol.erase_v_d_sel,
                    cfg.protocol.erase_v_d_unsel, out);

    // Original routing: the selected drain is grounded to give the inhibit
    // voltage its best case, and the inhibit rail is swept.
    bool original_always_disturbed = true;
    for (double vdi = cfg.disturb.inhibit_from; vdi <= cfg.disturb.inhibit_to + 1e-9;
         vdi += cfg.disturb.inhibit_step) {
        const DisturbRun run = run_disturb(ctx, RoutingVariant::Original, 0.0, vdi, out);
        original_always_disturbed = original_always_disturbed && run.max_half_c_change >= 0.10;
    }

    if (cfg.assertions &&
        (modified.max_nonselected_change >= 0.005 || !original_always_disturbed))
        return kExitAssertionFailed;
    return kExitOk;
}

int cmd_vmm(const RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.config;
    require_seed(cfg);
    if (cfg.vmm.weight_sets.empty()) throw ConfigError("vmm.weight_sets must be non-empty");

    CsvWriter transfer(ctx, "vmm", "vmm_transfer.csv",
                       "set,output,x_plus,x_minus,i_plus,i_minus,y");
    CsvWriter metrics(ctx, "vmm", "vmm_metrics.csv", "set,output,noisy,linearity_metric");

    bool ok = true;
    for (size_t set_id = 0; set_id < cfg.vmm.weight_sets.size(); ++set_id) {
        const auto& weights = cfg.vmm.weight_sets[set_id];
        const int m = static_cast<int>(weights.size());
        const int n = m > 0 ? static_cast<int>(weights[0].size()) : 0;
        if (m == 0 || n == 0) throw ConfigError("vmm weight set must be non-empty");

        ArrayTopology topology;
        topology.rows = 2 * m;
        topology.cols = std::max(2, 2 * n);
        topology.routing = RoutingVariant::Modified;

        Rng rng = make_rng(cfg, set_id);
        ArrayState array = make_array(topology, cfg.device, rng);
        const VmmProgram program = program_weights(array, weights, cfg.vmm.i_ref,
                                                   cfg.vmm.i_floor, cfg.tuning, cfg.protocol,
                                                   rng);
        const auto periphs = make_peripherals(cfg.device, cfg.vmm.i_ref, 2 * m);

        // Log-spaced input sweep; every input line driven by (x, i_floor).
        const int points = cfg.vmm.points;
        std::vector<double> xs(points);
        for (int i = 0; i < points; ++i) {
            xs[i] = cfg.vmm.x_min *
                    std::pow(cfg.vmm.x_max / cfg.vmm.x_min, static_cast<double>(i) / (points - 1));
        }

        std::vector<std::vector<double>> mean_y(n, std::vector<double>(points, 0.0));
        std::vector<std::vector<double>> mean_ip(n, std::vector<double>(points, 0.0));
        std::vector<std::vector<double>> mean_im(n, std::vector<double>(points, 0.0));
        const int reps = cfg.vmm.noisy ? cfg.vmm.noise_seeds : 1;
        for (int rep = 0; rep < reps; ++rep) {
            Rng noise_rng = make_rng(cfg, 1000 + set_id * 1000 + rep);
            for (int i = 0; i < points; ++i) {
                VmmInput input;
                input.lines.assign(m, {xs[i], cfg.vmm.i_floor});
                const VmmOutput o =
                    cfg.vmm.noisy
                        ? vmm_output_noisy(array, program, periphs, input, cfg.vmm.window,
                                           noise_rng)
                        : vmm_output(array, program, periphs, input);
                for (int k = 0; k < n; ++k) {
                    mean_y[k][i] += o.y[k] / reps;
                    mean_ip[k][i] += o.i_plus[k] / reps;
                    mean_im[k][i] += o.i_minus[k] / reps;
                }
            }
        }

        for (int k = 0; k < n; ++k) {
            std::vector<std::pair<double, double>> samples;
            for (int i = 0; i < points; ++i) {
                transfer.row(static_cast<int>(set_id), k, xs[i], cfg.vmm.i_floor, mean_ip[k][i],
                             mean_im[k][i], mean_y[k][i]);
                samples.emplace_back(xs[i], mean_y[k][i]);
            }
            // The metric needs a non-degenerate transfer curve; skip all-zero
            // weight columns in the assertion.
            double column_scale = 0.0;
            for (int j = 0; j < m; ++j) column_scale += std::abs(weights[j][k]);
            if (column_scale > 1e-9) {
                const double metric = linearity_metric(samples);
                metrics.row(static_cast<int>(set_id), k, cfg.vmm.noisy ? 1 : 0, metric);
                ok = ok && std::abs(metric) < (cfg.vmm.noisy ? 0.02 : 0.01);
            }
        }
    }
    if (cfg.assertions && !ok) return kExitAssertionFailed;
    return kExitOk;
}

int cmd_montecarlo(const RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.config;
    require_seed(cfg);
    CsvWriter out(ctx, "montecarlo", "montecarlo.csv",
                  "sigma,seed,cells,converged,success_rate,max_rel_error,mean_rel_error");
    CsvWriter agg(ctx, "montecarlo", "montecarlo_summary.csv",
                  "sigma,runs,success_mean,success_min,err_p50,err_p95");

    struct RunResult {
        int cells = 0;
        int converged = 0;
        double max_err = 0.0;
        double sum_err = 0.0;
    };

    const int n_seeds = cfg.montecarlo.seeds;
    for (size_t si = 0; si < cfg.montecarlo.sigmas.size(); ++si) {
        const double sigma = cfg.montecarlo.sigmas[si];
        std::vector<RunResult> results(n_seeds);

#pragma omp parallel for schedule(dynamic)
        for (int s = 0; s < n_seeds; ++s) {
            DeviceParams params = cfg.device;
            params.variability_sigma = sigma;
            Rng rng = make_rng(cfg, si * 100000 + s);
            ArrayState array = make_array(cfg.topology, params, rng);
            const auto tasks = all_cell_tasks(cfg.topology, cfg.montecarlo.targets);
            RunResult r;
            for (const auto& task : tasks) {
                TuningConfig tc = cfg.tuning;
                tc.target = task.target;
                TuningTrace trace;
                try {
                    trace = tune_cell(array, task.cell, tc, cfg.protocol, rng);
                } catch (const TargetRangeError&) {
                    // variability pushed the target out of this cell's range
                }
                ++r.cells;
                if (trace.converged) {
                    ++r.converged;
                    const double err = std::abs(trace.final_current - task.target) / task.target;
                    r.max_err = std::max(r.max_err, err);
                    r.sum_err += err;
                }
            }
            results[s] = r;
        }

        double success_sum = 0.0;
        double success_min = 1.0;
        std::vector<double> errors;
        for (int s = 0; s < n_seeds; ++s) {
            const RunResult& r = results[s];
            const double rate = r.cells > 0 ? static_cast<double>(r.converged) / r.cells : 0.0;
            const double mean_err = r.converged > 0 ? r.sum_err / r.converged : 0.0;
            out.row(sigma, s, r.cells, r.converged, rate, r.max_err, mean_err);
            success_sum += rate;
            success_min = std::min(success_min, rate);
            errors.push_back(r.max_err);
        }
        std::sort(errors.begin(), errors.end());
        auto quantile = [&](double q) {
            if (errors.empty()) return 0.0;
            const size_t idx = std::min(errors.size() - 1,
                                        static_cast<size_t>(q * (errors.size() - 1) + 0.5));
            return errors[idx];
        };
        agg.row(sigma, n_seeds, success_sum / n_seeds, success_min, quantile(0.5),
                quantile(0.95));
    }
    return kExitOk;
}

}  // namespace fgsim
