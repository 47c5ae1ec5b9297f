#include "fgsim/array.hpp"

#include <stdexcept>
#include <string>

namespace fgsim {

const char* to_string(RoutingVariant routing) {
    return routing == RoutingVariant::Original ? "original" : "modified";
}

const char* to_string(OpKind op) {
    switch (op) {
        case OpKind::Program: return "program";
        case OpKind::Erase: return "erase";
        default: return "read";
    }
}

const char* to_string(CellClass cls) {
    switch (cls) {
        case CellClass::Selected: return "selected";
        case CellClass::HalfA: return "half_a";
        case CellClass::HalfB: return "half_b";
        case CellClass::HalfC: return "half_c";
        case CellClass::HalfD: return "half_d";
        case CellClass::HalfE: return "half_e";
        default: return "unselected";
    }
}

void ArrayTopology::validate() const {
    if (rows < 2 || cols < 2) throw std::invalid_argument("array must be at least 2x2");
    if (rows % 2 != 0) throw std::invalid_argument("rows must be even (supercell pairing)");
}

void BiasProtocol::validate() const {
    auto check = [](double v, const char* name) {
        if (!(v >= kVMin) || !(v <= kVMax))
            throw std::invalid_argument(std::string("protocol voltage out of safe range: ") + name);
    };
    check(prog_v_g_sel, "prog_v_g_sel");
    check(prog_v_g_unsel_original, "prog_v_g_unsel_original");
    check(prog_v_g_unsel_modified, "prog_v_g_unsel_modified");
    check(prog_v_s_unsel, "prog_v_s_unsel");
    check(prog_v_d_sel, "prog_v_d_sel");
    check(prog_v_d_inhibit, "prog_v_d_inhibit");
    check(prog_amp_max, "prog_amp_max");
    check(erase_v_g_unsel, "erase_v_g_unsel");
    check(erase_v_s_sel, "erase_v_s_sel");
    check(erase_v_s_unsel, "erase_v_s_unsel");
    check(erase_v_d_sel, "erase_v_d_sel");
    check(erase_v_d_unsel, "erase_v_d_unsel");
    check(erase_amp_max, "erase_amp_max");
    check(read_v_g, "read_v_g");
    check(read_v_d, "read_v_d");
    check(read_v_s, "read_v_s");
}

void ArrayState::validate() const {
    topology.validate();
    if (cells.rows != topology.rows || cells.cols != topology.cols)
        throw std::invalid_argument("cell grid dimensions do not match topology");
}

void check_coord(const ArrayTopology& topology, CellCoord coord) {
    if (coord.row < 0 || coord.row >= topology.rows || coord.col < 0 ||
        coord.col >= topology.cols) {
        throw std::out_of_range("cell coordinate out of range: (" + std::to_string(coord.row) +
                                "," + std::to_string(coord.col) + ")");
    }
}

ArrayState make_array(const ArrayTopology& topology, const DeviceParams& params, Rng& rng) {
    topology.validate();
    params.validate();
    ArrayState state;
    state.topology = topology;
    state.cells = Grid<CellState>(topology.rows, topology.cols);
    for (int r = 0; r < topology.rows; ++r)
        for (int c = 0; c < topology.cols; ++c) state.cells.at(r, c) = draw_cell(params, rng);
    return state;
}

CellClass classify(const ArrayTopology& topology, OpKind op, CellCoord selected,
                   CellCoord cell) {
    topology.validate();
    check_coord(topology, selected);
    check_coord(topology, cell);
    if (cell == selected) return CellClass::Selected;

    const bool same_gate = topology.gate_line(cell.row, cell.col) ==
                           topology.gate_line(selected.row, selected.col);
    const bool same_source = topology.source_line(cell.row, cell.col) ==
                             topology.source_line(selected.row, selected.col);

    if (op == OpKind::Program) {
        if (topology.routing == RoutingVariant::Original) {
            if (same_gate) return CellClass::HalfA;       // selected word line
            if (same_source) return CellClass::HalfB;     // shared source, other word line
        } else {
            if (same_source) return CellClass::HalfB;     // shared source line
            if (same_gate) return CellClass::HalfD;       // shared gate column
        }
    } else if (op == OpKind::Erase) {
        if (topology.routing == RoutingVariant::Original) {
            if (same_gate) return CellClass::HalfC;       // shares gate and source voltages
        } else {
            if (same_gate) return CellClass::HalfE;       // shared gate column
        }
    }
    return CellClass::Unselected;
}

Grid<TerminalBiases> bias_map(const ArrayTopology& topology, OpKind op, CellCoord selected,
                              const BiasProtocol& protocol, double pulse_amplitude) {
    topology.validate();
    protocol.validate();
    check_coord(topology, selected);

    if (op == OpKind::Program && (pulse_amplitude < 0.0 || pulse_amplitude > protocol.prog_amp_max))
        throw std::invalid_argument("program amplitude outside protocol bounds");
    if (op == OpKind::Erase && (pulse_amplitude < 0.0 || pulse_amplitude > protocol.erase_amp_max))
        throw std::invalid_argument("erase amplitude outside protocol bounds");

    // Per-line voltages; cells then inherit from their lines.
    std::vector<double> gate(topology.gate_line_count(), 0.0);
    std::vector<double> source(topology.source_line_count(), 0.0);
    std::vector<double> bit(topology.bit_line_count(), 0.0);

    const int sel_gate = topology.gate_line(selected.row, selected.col);
    const int sel_source = topology.source_line(selected.row, selected.col);
    const int sel_bit = topology.bit_line(selected.row, selected.col);

    switch (op) {
        case OpKind::Program:
            gate.assign(gate.size(), protocol.prog_v_g_unsel(topology.routing));
            gate[sel_gate] = protocol.prog_v_g_sel;
            source.assign(source.size(), protocol.prog_v_s_unsel);
            source[sel_source] = pulse_amplitude;
            bit.assign(bit.size(), protocol.prog_v_d_inhibit);
            bit[sel_bit] = protocol.prog_v_d_sel;
            break;
        case OpKind::Erase:
            gate.assign(gate.size(), protocol.erase_v_g_unsel);
            gate[sel_gate] = pulse_amplitude;
            source.assign(source.size(), protocol.erase_v_s_unsel);
            source[sel_source] = protocol.erase_v_s_sel;
            bit.assign(bit.size(), protocol.erase_v_d_unsel);
            bit[sel_bit] = protocol.erase_v_d_sel;
            break;
        case OpKind::Read:
            gate[sel_gate] = protocol.read_v_g;
            source[sel_source] = protocol.read_v_s;
            bit[sel_bit] = protocol.read_v_d;
            break;
    }

    Grid<TerminalBiases> grid(topology.rows, topology.cols);
    for (int r = 0; r < topology.rows; ++r) {
        for (int c = 0; c < topology.cols; ++c) {
            TerminalBiases& b = grid.at(r, c);
            b.v_g = gate[topology.gate_line(r, c)];
            b.v_s = source[topology.source_line(r, c)];
            b.v_d = bit[topology.bit_line(r, c)];
            b.validate();
        }
    }
    return grid;
}

Grid<UpdateReport> apply_array_pulse(ArrayState& state, const Grid<TerminalBiases>& biases,
                                     double duration, ExecMode mode) {
    state.validate();
    if (biases.rows != state.topology.rows || biases.cols != state.topology.cols)
        throw std::invalid_argument("bias grid dimensions do not match array");

    const int n = state.topology.cell_count();
    Grid<UpdateReport> reports(state.topology.rows, state.topology.cols);

    if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            Pulse pulse{biases.data[i], duration};
            auto [next, report] = pulse_update(state.cells.data[i], pulse);
            state.cells.data[i] = next;
            reports.data[i] = report;
        }
    } else {
        for (int i = 0; i < n; ++i) {
            Pulse pulse{biases.data[i], duration};
            auto [next, report] = pulse_update(state.cells.data[i], pulse);
            state.cells.data[i] = next;
            reports.data[i] = report;
        }
    }
    return reports;
}

double read_cell(const ArrayState& state, CellCoord cell, const BiasProtocol& protocol,
                 double window, Rng& rng) {
    state.validate();
    check_coord(state.topology, cell);
    const auto grid = bias_map(state.topology, OpKind::Read, cell, protocol, 0.0);
    return sample_readout(state.cell(cell.row, cell.col), grid.at(cell.row, cell.col), window,
                          rng);
}

double read_cell_ideal(const ArrayState& state, CellCoord cell, const BiasProtocol& protocol) {
    state.validate();
    check_coord(state.topology, cell);
    const auto grid = bias_map(state.topology, OpKind::Read, cell, protocol, 0.0);
    return read_current(state.cell(cell.row, cell.col), grid.at(cell.row, cell.col));
}

}  // namespace fgsim
