#include "fgsim/config.hpp"

#include <fstream>
#include <set>

namespace fgsim {

namespace {

using nlohmann::json;

class StrictReader {
public:
    StrictReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        consumed_.insert(key);
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(path_ + "." + key + ": " + e.what());
        }
    }

    bool has(const char* key) {
        return j_.find(key) != j_.end();
    }

    const json* sub(const char* key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        consumed_.insert(key);
        return &*it;
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!consumed_.count(it.key()))
                throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> consumed_;
};

RoutingVariant routing_from_string(const std::string& s) {
    if (s == "original") return RoutingVariant::Original;
    if (s == "modified") return RoutingVariant::Modified;
    throw ConfigError("routing must be 'original' or 'modified', got '" + s + "'");
}

OpKind op_from_string(const std::string& s) {
    if (s == "program") return OpKind::Program;
    if (s == "erase") return OpKind::Erase;
    if (s == "read") return OpKind::Read;
    throw ConfigError("op kind must be program/erase/read, got '" + s + "'");
}

void parse_device(const json& j, DeviceParams& p) {
    StrictReader r(j, "device");
    r.get("i_s0", p.i_s0);
    r.get("n_slope", p.n_slope);
    r.get("u_t", p.u_t);
    r.get("v_th0", p.v_th0);
    r.get("kappa_cg", p.kappa_cg);
    r.get("kappa_d", p.kappa_d);
    r.get("kappa_s", p.kappa_s);
    r.get("i_max", p.i_max);
    r.get("inj_rate0", p.inj_rate0);
    r.get("inj_slope", p.inj_slope);
    r.get("inj_vmin", p.inj_vmin);
    r.get("inj_gate_lo", p.inj_gate_lo);
    r.get("inj_gate_hi", p.inj_gate_hi);
    r.get("tun_rate0", p.tun_rate0);
    r.get("tun_slope", p.tun_slope);
    r.get("tun_vmin", p.tun_vmin);
    r.get("q_min", p.q_min);
    r.get("q_max", p.q_max);
    r.get("noise_a", p.noise_a);
    r.get("noise_b", p.noise_b);
    r.get("variability_sigma", p.variability_sigma);
    r.finish();
    p.validate();
}

json device_to_json(const DeviceParams& p) {
    return json{{"i_s0", p.i_s0},
                {"n_slope", p.n_slope},
                {"u_t", p.u_t},
                {"v_th0", p.v_th0},
                {"kappa_cg", p.kappa_cg},
                {"kappa_d", p.kappa_d},
                {"kappa_s", p.kappa_s},
                {"i_max", p.i_max},
                {"inj_rate0", p.inj_rate0},
                {"inj_slope", p.inj_slope},
                {"inj_vmin", p.inj_vmin},
                {"inj_gate_lo", p.inj_gate_lo},
                {"inj_gate_hi", p.inj_gate_hi},
                {"tun_rate0", p.tun_rate0},
                {"tun_slope", p.tun_slope},
                {"tun_vmin", p.tun_vmin},
                {"q_min", p.q_min},
                {"q_max", p.q_max},
                {"noise_a", p.noise_a},
                {"noise_b", p.noise_b},
                {"variability_sigma", p.variability_sigma}};
}

void parse_topology(const json& j, ArrayTopology& t) {
    StrictReader r(j, "topology");
    r.get("rows", t.rows);
    r.get("cols", t.cols);
    std::string routing = to_string(t.routing);
    r.get("routing", routing);
    t.routing = routing_from_string(routing);
    r.finish();
    t.validate();
}

json topology_to_json(const ArrayTopology& t) {
    return json{{"rows", t.rows}, {"cols", t.cols}, {"routing", to_string(t.routing)}};
}

void parse_protocol(const json& j, BiasProtocol& p) {
    StrictReader r(j, "protocol");
    r.get("prog_v_g_sel", p.prog_v_g_sel);
    r.get("prog_v_g_unsel_original", p.prog_v_g_unsel_original);
    r.get("prog_v_g_unsel_modified", p.prog_v_g_unsel_modified);
    r.get("prog_v_s_unsel", p.prog_v_s_unsel);
    r.get("prog_v_d_sel", p.prog_v_d_sel);
    r.get("prog_v_d_inhibit", p.prog_v_d_inhibit);
    r.get("prog_amp_max", p.prog_amp_max);
    r.get("erase_v_g_unsel", p.erase_v_g_unsel);
    r.get("erase_v_s_sel", p.erase_v_s_sel);
    r.get("erase_v_s_unsel", p.erase_v_s_unsel);
    r.get("erase_v_d_sel", p.erase_v_d_sel);
    r.get("erase_v_d_unsel", p.erase_v_d_unsel);
    r.get("erase_amp_max", p.erase_amp_max);
    r.get("read_v_g", p.read_v_g);
    r.get("read_v_d", p.read_v_d);
    r.get("read_v_s", p.read_v_s);
    r.finish();
    p.validate();
}

json protocol_to_json(const BiasProtocol& p) {
    return json{{"prog_v_g_sel", p.prog_v_g_sel},
                {"prog_v_g_unsel_original", p.prog_v_g_unsel_original},
                {"prog_v_g_unsel_modified", p.prog_v_g_unsel_modified},
                {"prog_v_s_unsel", p.prog_v_s_unsel},
                {"prog_v_d_sel", p.prog_v_d_sel},
                {"prog_v_d_inhibit", p.prog_v_d_inhibit},
                {"prog_amp_max", p.prog_amp_max},
                {"erase_v_g_unsel", p.erase_v_g_unsel},
                {"erase_v_s_sel", p.erase_v_s_sel},
                {"erase_v_s_unsel", p.erase_v_s_unsel},
                {"erase_v_d_sel", p.erase_v_d_sel},
                {"erase_v_d_unsel", p.erase_v_d_unsel},
                {"erase_amp_max", p.erase_amp_max},
                {"read_v_g", p.read_v_g},
                {"read_v_d", p.read_v_d},
                {"read_v_s", p.read_v_s}};
}

void parse_ramp(const json& j, const char* name, RampSchedule& s) {
    StrictReader r(j, name);
    r.get("start_amplitude", s.start_amplitude);
    r.get("step", s.step);
    r.get("max_amplitude", s.max_amplitude);
    r.get("pulse_duration", s.pulse_duration);
    r.finish();
    s.validate();
}

json ramp_to_json(const RampSchedule& s) {
    return json{{"start_amplitude", s.start_amplitude},
                {"step", s.step},
                {"max_amplitude", s.max_amplitude},
                {"pulse_duration", s.pulse_duration}};
}

void parse_tuning(const json& j, TuningConfig& t) {
    StrictReader r(j, "tuning");
    r.get("target", t.target);
    r.get("rel_tolerance", t.rel_tolerance);
    r.get("read_window", t.read_window);
    r.get("max_pulses", t.max_pulses);
    r.get("backoff_steps", t.backoff_steps);
    if (const json* s = r.sub("program_ramp")) parse_ramp(*s, "tuning.program_ramp", t.program_ramp);
    if (const json* s = r.sub("erase_ramp")) parse_ramp(*s, "tuning.erase_ramp", t.erase_ramp);
    r.finish();
    t.validate();
}

json tuning_to_json(const TuningConfig& t) {
    return json{{"target", t.target},
                {"rel_tolerance", t.rel_tolerance},
                {"read_window", t.read_window},
                {"max_pulses", t.max_pulses},
                {"backoff_steps", t.backoff_steps},
                {"program_ramp", ramp_to_json(t.program_ramp)},
                {"erase_ramp", ramp_to_json(t.erase_ramp)}};
}

void parse_sweep_spec(const json& j, const char* name, SweepSpec& s) {
    StrictReader r(j, name);
    r.get("from", s.from);
    r.get("to", s.to);
    r.get("step", s.step);
    r.get("fixed", s.fixed);
    r.finish();
    if (!(s.step > 0)) throw ConfigError(std::string(name) + ".step must be > 0");
}

json sweep_spec_to_json(const SweepSpec& s) {
    return json{{"from", s.from}, {"to", s.to}, {"step", s.step}, {"fixed", s.fixed}};
}

void parse_sweep(const json& j, SweepExperiment& s) {
    StrictReader r(j, "sweep");
    r.get("state_currents", s.state_currents);
    if (const json* g = r.sub("gate")) parse_sweep_spec(*g, "sweep.gate", s.gate);
    if (const json* d = r.sub("drain_source"))
        parse_sweep_spec(*d, "sweep.drain_source", s.drain_source);
    r.finish();
}

json sweep_to_json(const SweepExperiment& s) {
    return json{{"state_currents", s.state_currents},
                {"gate", sweep_spec_to_json(s.gate)},
                {"drain_source", sweep_spec_to_json(s.drain_source)}};
}

void parse_dynamics(const json& j, DynamicsExperiment& d) {
    StrictReader r(j, "dynamics");
    if (const json* trains = r.sub("trains")) {
        if (!trains->is_array()) throw ConfigError("dynamics.trains: expected an array");
        d.trains.clear();
        int i = 0;
        for (const auto& tj : *trains) {
            StrictReader tr(tj, "dynamics.trains[" + std::to_string(i++) + "]");
            PulseTrain t;
            std::string kind = "program";
            tr.get("kind", kind);
            t.kind = op_from_string(kind);
            if (t.kind == OpKind::Read) throw ConfigError("dynamics train kind must be program or erase");
            tr.get("start_amplitude", t.start_amplitude);
            tr.get("step", t.step);
            tr.get("count", t.count);
            tr.get("duration", t.duration);
            tr.get("start_state", t.start_state);
            tr.finish();
            if (t.start_state != "erased" && t.start_state != "programmed")
                throw ConfigError("dynamics train start_state must be erased or programmed");
            if (t.count < 0) throw ConfigError("dynamics train count must be >= 0");
            d.trains.push_back(t);
        }
    }
    r.finish();
}

json dynamics_to_json(const DynamicsExperiment& d) {
    json trains = json::array();
    for (const auto& t : d.trains) {
        trains.push_back(json{{"kind", to_string(t.kind)},
                              {"start_amplitude", t.start_amplitude},
                              {"step", t.step},
                              {"count", t.count},
                              {"duration", t.duration},
                              {"start_state", t.start_state}});
    }
    return json{{"trains", trains}};
}

void parse_tune(const json& j, TuneExperiment& t) {
    StrictReader r(j, "tune");
    r.get("targets", t.targets);
    r.get("write_traces", t.write_traces);
    r.finish();
}

json tune_to_json(const TuneExperiment& t) {
    return json{{"targets", t.targets}, {"write_traces", t.write_traces}};
}

void parse_disturb(const json& j, DisturbExperiment& d) {
    StrictReader r(j, "disturb");
    r.get("selected_target", d.selected_target);
    r.get("neighbor_target", d.neighbor_target);
    r.get("inhibit_from", d.inhibit_from);
    r.get("inhibit_to", d.inhibit_to);
    r.get("inhibit_step", d.inhibit_step);
    r.get("max_pulses", d.max_pulses);
    r.finish();
    if (!(d.inhibit_step > 0)) throw ConfigError("disturb.inhibit_step must be > 0");
    if (d.max_pulses < 1) throw ConfigError("disturb.max_pulses must be >= 1");
}

json disturb_to_json(const DisturbExperiment& d) {
    return json{{"selected_target", d.selected_target},
                {"neighbor_target", d.neighbor_target},
                {"inhibit_from", d.inhibit_from},
                {"inhibit_to", d.inhibit_to},
                {"inhibit_step", d.inhibit_step},
                {"max_pulses", d.max_pulses}};
}

void parse_vmm(const json& j, VmmExperiment& v) {
    StrictReader r(j, "vmm");
    r.get("weight_sets", v.weight_sets);
    r.get("i_ref", v.i_ref);
    r.get("i_floor", v.i_floor);
    r.get("x_min", v.x_min);
    r.get("x_max", v.x_max);
    r.get("points", v.points);
    r.get("noisy", v.noisy);
    r.get("window", v.window);
    r.get("noise_seeds", v.noise_seeds);
    r.finish();
    if (v.points < 10) throw ConfigError("vmm.points must be >= 10");
    if (!(v.x_min > 0) || !(v.x_max > v.x_min)) throw ConfigError("vmm sweep range invalid");
    if (v.noise_seeds < 1) throw ConfigError("vmm.noise_seeds must be >= 1");
}

json vmm_to_json(const VmmExperiment& v) {
    return json{{"weight_sets", v.weight_sets},
                {"i_ref", v.i_ref},
                {"i_floor", v.i_floor},
                {"x_min", v.x_min},
                {"x_max", v.x_max},
                {"points", v.points},
                {"noisy", v.noisy},
                {"window", v.window},
                {"noise_seeds", v.noise_seeds}};
}

void parse_montecarlo(const json& j, MonteCarloExperiment& m) {
    StrictReader r(j, "montecarlo");
    r.get("seeds", m.seeds);
    r.get("sigmas", m.sigmas);
    r.get("targets", m.targets);
    r.finish();
    if (m.seeds < 1) throw ConfigError("montecarlo.seeds must be >= 1");
    if (m.targets.empty()) throw ConfigError("montecarlo.targets must be non-empty");
}

json montecarlo_to_json(const MonteCarloExperiment& m) {
    return json{{"seeds", m.seeds}, {"sigmas", m.sigmas}, {"targets", m.targets}};
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig c;
    StrictReader r(j, "config");
    if (r.has("seed")) {
        c.has_seed = true;
        r.get("seed", c.seed);
    }
    r.get("assertions", c.assertions);
    if (const json* s = r.sub("device")) parse_device(*s, c.device);
    if (const json* s = r.sub("topology")) parse_topology(*s, c.topology);
    if (const json* s = r.sub("protocol")) parse_protocol(*s, c.protocol);
    if (const json* s = r.sub("tuning")) parse_tuning(*s, c.tuning);
    if (const json* s = r.sub("sweep")) parse_sweep(*s, c.sweep);
    if (const json* s = r.sub("dynamics")) parse_dynamics(*s, c.dynamics);
    if (const json* s = r.sub("tune")) parse_tune(*s, c.tune);
    if (const json* s = r.sub("disturb")) parse_disturb(*s, c.disturb);
    if (const json* s = r.sub("vmm")) parse_vmm(*s, c.vmm);
    if (const json* s = r.sub("montecarlo")) parse_montecarlo(*s, c.montecarlo);
    r.finish();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

nlohmann::json serialize_config(const ExperimentConfig& c) {
    nlohmann::json j{{"assertions", c.assertions},
                     {"device", device_to_json(c.device)},
                     {"topology", topology_to_json(c.topology)},
                     {"protocol", protocol_to_json(c.protocol)},
                     {"tuning", tuning_to_json(c.tuning)},
                     {"sweep", sweep_to_json(c.sweep)},
                     {"dynamics", dynamics_to_json(c.dynamics)},
                     {"tune", tune_to_json(c.tune)},
                     {"disturb", disturb_to_json(c.disturb)},
                     {"vmm", vmm_to_json(c.vmm)},
                     {"montecarlo", montecarlo_to_json(c.montecarlo)}};
    if (c.has_seed) j["seed"] = c.seed;
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    const std::string dump = serialize_config(config).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

nlohmann::json serialize_snapshot(const ArrayState& array, std::uint64_t seed) {
    array.validate();
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : array.cells.data) {
        cells.push_back(nlohmann::json{{"q", cell.q}, {"params", device_to_json(cell.params)}});
    }
    return nlohmann::json{{"topology", topology_to_json(array.topology)},
                          {"seed", seed},
                          {"cells", cells}};
}

ArrayState parse_snapshot(const nlohmann::json& j, std::uint64_t* seed_out) {
    StrictReader r(j, "snapshot");
    ArrayState array;
    if (const json* t = r.sub("topology")) {
        parse_topology(*t, array.topology);
    } else {
        throw ConfigError("snapshot: missing topology");
    }
    std::uint64_t seed = 0;
    r.get("seed", seed);
    if (seed_out) *seed_out = seed;
    const json* cells = r.sub("cells");
    if (!cells || !cells->is_array()) throw ConfigError("snapshot: missing cells array");
    r.finish();
    if (static_cast<int>(cells->size()) != array.topology.cell_count())
        throw ConfigError("snapshot: cell count does not match topology");
    array.cells = Grid<CellState>(array.topology.rows, array.topology.cols);
    size_t i = 0;
    for (const auto& cj : *cells) {
        StrictReader cr(cj, "snapshot.cells[" + std::to_string(i) + "]");
        CellState cell;
        cr.get("q", cell.q);
        if (const json* p = cr.sub("params")) parse_device(*p, cell.params);
        cr.finish();
        if (cell.q < cell.params.q_min || cell.q > cell.params.q_max)
            throw ConfigError("snapshot: cell charge outside [q_min, q_max]");
        array.cells.data[i++] = cell;
    }
    return array;
}

void save_snapshot(const std::string& path, const ArrayState& array, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write snapshot file: " + path);
    out << serialize_snapshot(array, seed).dump(2) << '\n';
}

ArrayState load_snapshot(const std::string& path, std::uint64_t* seed_out) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open snapshot file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_snapshot(j, seed_out);
}

}  // namespace fgsim
