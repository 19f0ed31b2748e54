#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "varq/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Conditional-quantile VaR toolkit: simulation benchmark and backtesting"};
    app.require_subcommand(1);

    std::string config_path, out_dir, input_path, models;
    std::vector<double> taus;
    std::uint64_t seed = 0;
    bool seed_set = false, desk = false, paper = false;
    int n_restarts = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file (key = value lines)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "master seed (overrides config)")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--tau", taus, "nominal level(s), repeatable");
        cmd->add_option("--models", models, "comma-separated model list");
        cmd->add_option("--restarts", n_restarts, "annealing restarts per fit");
        cmd->add_flag("--desk", desk, "desk scale: S=1e5, n_mc=1e5 (default)");
        cmd->add_flag("--paper", paper, "paper scale: S=1e7");
        return cmd;
    };

    auto* sim = add_common(app.add_subcommand("simulate", "dump one simulated path"));
    auto* bench = add_common(
        app.add_subcommand("benchmark", "fit models on simulated data (Table-1 style)"));
    auto* back =
        add_common(app.add_subcommand("backtest", "empirical rolling-window pipeline"));
    back->add_option("--input", input_path, "return panel CSV");
    auto* rep = add_common(app.add_subcommand("report", "re-aggregate a report.json"));
    rep->add_option("--input", input_path, "report.json from a previous backtest");

    CLI11_PARSE(app, argc, argv);

    varq::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = varq::parse_config_file(config_path);
        if (sim->parsed()) cfg.mode = "simulate";
        if (bench->parsed()) cfg.mode = "benchmark";
        if (back->parsed()) cfg.mode = "backtest";
        if (rep->parsed()) cfg.mode = "report";
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!input_path.empty()) cfg.input_path = input_path;
        if (!taus.empty()) cfg.taus = taus;
        if (!models.empty()) {
            cfg.models.clear();
            std::stringstream ss(models);
            std::string item;
            while (std::getline(ss, item, ',')) cfg.models.push_back(item);
        }
        if (seed_set) cfg.seed = seed;
        if (n_restarts > 0) cfg.n_restarts = n_restarts;
        if (desk && paper) throw varq::ConfigError("--desk and --paper are exclusive");
        if (paper) {
            cfg.sim_S = 10000000;
            cfg.sim_f = 2000.0;
        } else if (desk) {
            cfg.sim_S = 100000;
            cfg.sim_f = 0.0;
            cfg.n_mc = 100000;
        }
        cfg.validate();
    } catch (const varq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    if (cfg.mode == "simulate") return varq::run_simulate(cfg);
    if (cfg.mode == "benchmark") return varq::run_benchmark(cfg);
    if (cfg.mode == "backtest") return varq::run_backtest(cfg);
    return varq::run_report(cfg);
}
