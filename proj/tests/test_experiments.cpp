#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fgsim/experiments.hpp"

using namespace fgsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// data rows of a CSV file, comments and header stripped
std::vector<std::vector<std::string>> rows(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::vector<std::vector<std::string>> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        out.push_back(fields);
    }
    return out;
}

}  // namespace

TEST_CASE("output tables carry the comment block and header") {
    TempDir dir("fgsim_fmt_test");
    RunContext ctx;
    ctx.config.sweep.state_currents = {1e-7};
    ctx.out_dir = dir.path.string();
    REQUIRE(cmd_sweep(ctx) == kExitOk);

    std::ifstream in(dir.path / "sweep.csv");
    REQUIRE(in);
    std::string line;
    std::getline(in, line);
    CHECK(line == std::string("# fg-array-sim ") + kToolVersion);
    std::getline(in, line);
    CHECK(line == "# command: sweep");
    std::getline(in, line);
    char expected[64];
    std::snprintf(expected, sizeof(expected), "# config_hash: %016llx",
                  static_cast<unsigned long long>(config_hash(ctx.config)));
    CHECK(line == expected);
    std::getline(in, line);
    CHECK(line == "# seed: none");
    std::getline(in, line);
    CHECK(line == "sweep_kind,sweep_value,state_id,current");
}

TEST_CASE("experiments with noise demand a seed") {
    TempDir dir("fgsim_seed_test");
    RunContext ctx;  // default device has readout noise, no seed set
    ctx.out_dir = dir.path.string();
    CHECK_THROWS_AS(cmd_tune(ctx), ConfigError);
    CHECK_THROWS_AS(cmd_montecarlo(ctx), ConfigError);
}

TEST_CASE("dynamics pulse trains move the readout monotonically") {
    TempDir dir("fgsim_dyn_test");
    RunContext ctx;
    ctx.config.has_seed = true;
    ctx.config.seed = 1;
    ctx.config.dynamics.trains = {
        {OpKind::Program, 4.5, 0.05, 70, 5e-6, "erased"},
        {OpKind::Erase, 5.0, 0.05, 70, 0.6e-3, "programmed"},
    };
    ctx.out_dir = dir.path.string();
    REQUIRE(cmd_dynamics(ctx) == kExitOk);

    const auto data = rows(dir.path / "dynamics.csv");
    REQUIRE(data.size() == 2 * 71);
    double prev = -1.0;
    for (const auto& r : data) {
        const double current = std::stod(r[5]);
        if (r[0] == "0") {
            // program train: strictly decreasing from the first pulse
            if (prev >= 0.0) CHECK(current < prev);
            prev = current;
        }
    }
    prev = -1.0;
    for (const auto& r : data) {
        if (r[0] != "1") continue;
        const double current = std::stod(r[5]);
        if (prev >= 0.0) CHECK(current >= prev);  // erase train: non-decreasing
        prev = current;
    }
}

TEST_CASE("tune experiment output is byte-identical for a fixed seed") {
    RunContext ctx;
    ctx.config.has_seed = true;
    ctx.config.seed = 3;
    ctx.config.assertions = true;
    ctx.config.topology = {4, 2, RoutingVariant::Modified};
    ctx.config.tune.targets = {1e-6};

    TempDir a("fgsim_tune_a"), b("fgsim_tune_b");
    ctx.out_dir = a.path.string();
    REQUIRE(cmd_tune(ctx) == kExitOk);
    ctx.out_dir = b.path.string();
    REQUIRE(cmd_tune(ctx) == kExitOk);

    for (const auto& entry : fs::directory_iterator(a.path)) {
        const auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(b.path / name));
    }
    CHECK(fs::exists(a.path / "trace_0_r0c0.log"));
}

TEST_CASE("montecarlo output is byte-identical and convergence degrades with spread") {
    RunContext ctx;
    ctx.config.has_seed = true;
    ctx.config.seed = 5;
    ctx.config.topology = {4, 2, RoutingVariant::Modified};
    ctx.config.montecarlo.seeds = 20;
    ctx.config.montecarlo.sigmas = {0.0, 0.02, 0.05};
    ctx.config.montecarlo.targets = {1e-6, 1e-9};

    TempDir a("fgsim_mc_a"), b("fgsim_mc_b");
    ctx.out_dir = a.path.string();
    REQUIRE(cmd_montecarlo(ctx) == kExitOk);
    ctx.out_dir = b.path.string();
    REQUIRE(cmd_montecarlo(ctx) == kExitOk);
    CHECK(slurp(a.path / "montecarlo.csv") == slurp(b.path / "montecarlo.csv"));
    CHECK(slurp(a.path / "montecarlo_summary.csv") == slurp(b.path / "montecarlo_summary.csv"));

    const auto summary = rows(a.path / "montecarlo_summary.csv");
    REQUIRE(summary.size() == 3);
    double prev_rate = 2.0;
    for (const auto& r : summary) {
        const double rate = std::stod(r[2]);
        CHECK(rate <= prev_rate + 1e-12);
        prev_rate = rate;
    }
    // moderate device spread still tunes nearly everything
    CHECK(std::stod(summary[1][2]) >= 0.95);
}

TEST_CASE("vmm assertion failures surface through the exit code") {
    RunContext ctx;
    ctx.config.has_seed = true;
    ctx.config.seed = 2;
    ctx.config.assertions = true;
    ctx.config.vmm.noisy = true;
    // column sums near zero leave the differential output buried in rail
    // noise, so the linearity gate must trip
    ctx.config.vmm.weight_sets = {{{0.75, -0.3}, {-1.0, 0.5}}};

    TempDir dir("fgsim_vmm_fail");
    ctx.out_dir = dir.path.string();
    CHECK(cmd_vmm(ctx) == kExitAssertionFailed);

    ctx.config.vmm.weight_sets = {{{0.9, -0.8}, {0.7, -0.7}}};
    TempDir ok("fgsim_vmm_ok");
    ctx.out_dir = ok.path.string();
    CHECK(cmd_vmm(ctx) == kExitOk);
}

TEST_CASE("disturb experiment passes its own acceptance gate") {
    RunContext ctx;
    ctx.config.assertions = true;
    TempDir dir("fgsim_disturb_test");
    ctx.out_dir = dir.path.string();
    CHECK(cmd_disturb(ctx) == kExitOk);

    // every row classifies the cell and reports a finite relative change
    const auto data = rows(dir.path / "disturb.csv");
    const size_t runs = 1 + 31;  // modified + 0..3 V inhibit sweep
    CHECK(data.size() == runs * 16);
}
