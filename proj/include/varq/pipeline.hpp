#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "varq/estimation.hpp"
#include "varq/ingest.hpp"
#include "varq/qmodels.hpp"

namespace varq {

inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value run configuration; one master seed feeds named sub-streams
// so simulation, fitting and Monte Carlo p-values are independently
// reproducible.
struct RunConfig {
    std::string mode = "benchmark";  // simulate | benchmark | backtest | report
    std::vector<double> taus = {0.05};
    std::vector<std::string> models;  // empty = default set (Table-1 lag-1 models)
    std::uint64_t seed = 1;

    // simulation scale
    std::size_t sim_S = 100000;
    double sim_f = 0.0;  // 0 = derived as S / 5000 (preserve the cycle length)

    // estimation
    AnnealingSchedule schedule;
    int n_restarts = 20;

    // evaluation
    std::size_t n_mc = 100000;
    std::size_t block = 250;

    // backtest windows (index-based scheme)
    std::string input_path;
    std::size_t is_length = 1259;
    std::size_t oos_length = 251;
    std::size_t step = 251;

    // output
    std::string out_dir = ".";
    std::size_t plot_window = 5000;
    std::size_t plot_offset = 0;

    double f() const { return sim_f > 0.0 ? sim_f : static_cast<double>(sim_S) / 5000.0; }
    std::vector<std::string> model_list() const;
    void validate() const;
};

// key = value lines, '#' comments, unknown keys are errors.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::string& path);

// FNV-1a hash over a canonical serialization of the configuration.
std::string config_hash(const RunConfig& config);

// "# config_hash=... seed=... version=..." provenance line for output files.
std::string provenance_line(const RunConfig& config);

// Long-format plot CSV: index,series_name,value.
void emit_plot_data(const std::string& path, const RunConfig& config,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series);

// Exit codes: 0 success, 1 config error, 2 data error, 3 partial failure.
int run_simulate(const RunConfig& config);
int run_benchmark(const RunConfig& config);
int run_backtest(const RunConfig& config);
int run_report(const RunConfig& config);

// In-memory benchmark results (also used by tests and the acceptance suite).
struct BenchmarkRow {
    std::string model;
    double tau = 0.0;
    double rmse_true = 0.0;
    double mad = 0.0;
    double coverage = 0.0;
    double subcov_rmse = 0.0;
    bool fit_failed = false;
    std::string error;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    // per model: quantile path over the eval window, aligned with z
    std::map<std::string, std::vector<double>> c_hat;
    std::map<std::string, std::vector<double>> params;
    std::vector<double> z, c_true;
    std::size_t eval_from = 0;
    double tau = 0.0;
};

// Fits the requested models on one simulated path at a single tau. Models
// whose warm-up exceeds the sample (or whose fit fails) are flagged and the
// run continues.
BenchmarkResult benchmark_single_tau(const RunConfig& config, double tau);

}  // namespace varq
