// Compares the serial and OpenMP array pulse kernels and checks that they
// agree bit-for-bit.
#include <chrono>
#include <cmath>
#include <cstdio>

#include "fgsim/array.hpp"

using namespace fgsim;

namespace {

double time_pulses(ArrayState array, const Grid<TerminalBiases>& biases, int reps,
                   ExecMode mode) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) apply_array_pulse(array, biases, 1e-6, mode);
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(end - start).count();
}

}  // namespace

int main() {
    const int sizes[] = {8, 32, 100};
    const int reps = 200;

    for (int size : sizes) {
        ArrayTopology topology{size, size, RoutingVariant::Modified};
        DeviceParams params;
        params.variability_sigma = 0.05;
        Rng rng(7);
        ArrayState array = make_array(topology, params, rng);
        const auto biases =
            bias_map(topology, OpKind::Erase, {0, 0}, BiasProtocol{}, 8.5);

        ArrayState serial = array;
        ArrayState parallel = array;
        apply_array_pulse(serial, biases, 1e-6, ExecMode::Serial);
        apply_array_pulse(parallel, biases, 1e-6, ExecMode::Parallel);
        bool identical = true;
        for (size_t i = 0; i < serial.cells.data.size(); ++i)
            identical = identical && serial.cells.data[i].q == parallel.cells.data[i].q;

        const double t_serial = time_pulses(array, biases, reps, ExecMode::Serial);
        const double t_parallel = time_pulses(array, biases, reps, ExecMode::Parallel);
        std::printf("%4dx%-4d cells  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
                    size, size, 1e3 * t_serial / reps, 1e3 * t_parallel / reps,
                    t_serial / t_parallel, identical ? "identical" : "MISMATCH");
        if (!identical) return 1;
    }
    return 0;
}
