#ifndef FGSIM_ARRAY_HPP
#define FGSIM_ARRAY_HPP

#include <cstddef>
#include <vector>

#include "fgsim/device.hpp"

namespace fgsim {

enum class RoutingVariant { Original, Modified };
enum class OpKind { Program, Erase, Read };
enum class CellClass { Selected, HalfA, HalfB, HalfC, HalfD, HalfE, Unselected };

const char* to_string(RoutingVariant routing);
const char* to_string(OpKind op);
const char* to_string(CellClass cls);

struct CellCoord {
    int row = 0;
    int col = 0;
    bool operator==(const CellCoord&) const = default;
};

// Rows pair into supercells sharing one source line; rows must be even.
struct ArrayTopology {
    int rows = 2;
    int cols = 2;
    RoutingVariant routing = RoutingVariant::Modified;

    void validate() const;
    int cell_count() const { return rows * cols; }

    // Line ids.  Two cells share a terminal line iff the id matches.  The
    // modified routing runs two vertical gate lines per cell column, one for
    // each row of a supercell, so the common-source partner of a cell keeps
    // an independent gate.
    int gate_line(int row, int col) const {
        return routing == RoutingVariant::Original ? row : 2 * col + row % 2;
    }
    int source_line(int row, int /*col*/) const { return row / 2; }
    int bit_line(int /*row*/, int col) const { return col; }
    int gate_line_count() const { return routing == RoutingVariant::Original ? rows : 2 * cols; }
    int source_line_count() const { return rows / 2; }
    int bit_line_count() const { return cols; }
};

// Named role voltages of the program/erase/read protocols.  The ramped
// terminal (source for program, gate for erase) takes the per-pulse
// amplitude instead of a fixed entry.
struct BiasProtocol {
    // program
    double prog_v_g_sel = 1.6;
    double prog_v_g_unsel_original = 0.0;
    double prog_v_g_unsel_modified = -1.0;
    double prog_v_s_unsel = 0.0;
    double prog_v_d_sel = 0.0;
    double prog_v_d_inhibit = 2.7;
    double prog_amp_max = 9.0;
    // erase
    double erase_v_g_unsel = 0.0;
    double erase_v_s_sel = 0.0;
    double erase_v_s_unsel = 2.7;
    double erase_v_d_sel = 2.7;
    double erase_v_d_unsel = 2.7;
    double erase_amp_max = 10.0;
    // read
    double read_v_g = 2.5;
    double read_v_d = 1.0;
    double read_v_s = 0.0;

    void validate() const;
    double prog_v_g_unsel(RoutingVariant routing) const {
        return routing == RoutingVariant::Original ? prog_v_g_unsel_original
                                                   : prog_v_g_unsel_modified;
    }
};

template <typename T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c) {}
    T& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

struct ArrayState {
    ArrayTopology topology;
    Grid<CellState> cells;

    void validate() const;
    CellState& cell(int r, int c) { return cells.at(r, c); }
    const CellState& cell(int r, int c) const { return cells.at(r, c); }
};

// Homogeneous array with every cell fully erased (q = q_max).  With
// variability_sigma > 0 each cell gets its own parameter draw from `rng`.
ArrayState make_array(const ArrayTopology& topology, const DeviceParams& params, Rng& rng);

// Half-select classification of `cell` when `selected` undergoes `op`.
CellClass classify(const ArrayTopology& topology, OpKind op, CellCoord selected,
                   CellCoord cell);

// Per-cell terminal biases implied by line sharing: every cell on a shared
// line receives that line's voltage.  `pulse_amplitude` lands on the selected
// cell's ramped terminal; it is ignored for Read.
Grid<TerminalBiases> bias_map(const ArrayTopology& topology, OpKind op, CellCoord selected,
                              const BiasProtocol& protocol, double pulse_amplitude);

enum class ExecMode { Serial, Parallel };

// Every cell updated independently through pulse_update with its own biases.
Grid<UpdateReport> apply_array_pulse(ArrayState& state, const Grid<TerminalBiases>& biases,
                                     double duration, ExecMode mode = ExecMode::Parallel);

// Noisy averaged single-cell read at the protocol read biases.
double read_cell(const ArrayState& state, CellCoord cell, const BiasProtocol& protocol,
                 double window, Rng& rng);

// Noise-free single-cell read at the protocol read biases.
double read_cell_ideal(const ArrayState& state, CellCoord cell, const BiasProtocol& protocol);

void check_coord(const ArrayTopology& topology, CellCoord coord);

}  // namespace fgsim

#endif
