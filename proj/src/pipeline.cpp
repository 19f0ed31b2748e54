#include "varq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "varq/evaluation.hpp"
#include "varq/rng.hpp"
#include "varq/simlab.hpp"
#include "varq/volfilter.hpp"

namespace varq {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kDefaultModels = {
    "const", "hs250", "hs1000", "whs95", "whs99",
    "garcq", "caviar", "qpi",    "tt",    "mt"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::ofstream open_out(const std::string& dir, const std::string& name,
                       const RunConfig& config) {
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + dir + "/" + name);
    out << provenance_line(config) << "\n";
    return out;
}

// Interpolated empirical quantile (same order statistics as hs_quantile).
double empirical_quantile(std::span<const double> sample, double tau) {
    return hs_quantile(sample, tau);
}

}  // namespace

std::vector<std::string> RunConfig::model_list() const {
    return models.empty() ? kDefaultModels : models;
}

void RunConfig::validate() const {
    static const std::set<std::string> kModes = {"simulate", "benchmark", "backtest",
                                                 "report"};
    if (!kModes.count(mode)) throw ConfigError("unknown mode: " + mode);
    if (taus.empty()) throw ConfigError("at least one tau required");
    for (double t : taus)
        if (!(t > 0.0 && t < 0.5)) throw ConfigError("tau must be in (0, 1/2)");
    for (const auto& m : model_list()) {
        try {
            (void)ModelSpec::parse(m);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (sim_S == 0) throw ConfigError("S must be positive");
    if (n_restarts < 1) throw ConfigError("n_restarts must be >= 1");
    if (n_mc < 1000) throw ConfigError("n_mc must be >= 1000");
    if (block < 2) throw ConfigError("block must be >= 2");
    if (mode == "backtest" || mode == "report") {
        if (input_path.empty()) throw ConfigError("input path required");
        if (is_length == 0 || oos_length == 0 || step == 0)
            throw ConfigError("window lengths must be positive");
    }
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "mode") cfg.mode = val;
            else if (key == "tau") {
                cfg.taus.clear();
                for (const auto& t : split_list(val)) cfg.taus.push_back(std::stod(t));
            } else if (key == "models") cfg.models = split_list(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "S") cfg.sim_S = std::stoull(val);
            else if (key == "f") cfg.sim_f = std::stod(val);
            else if (key == "n_restarts") cfg.n_restarts = std::stoi(val);
            else if (key == "n_mc") cfg.n_mc = std::stoull(val);
            else if (key == "block") cfg.block = std::stoull(val);
            else if (key == "input") cfg.input_path = val;
            else if (key == "out") cfg.out_dir = val;
            else if (key == "is_length") cfg.is_length = std::stoull(val);
            else if (key == "oos_length") cfg.oos_length = std::stoull(val);
            else if (key == "step") cfg.step = std::stoull(val);
            else if (key == "plot_window") cfg.plot_window = std::stoull(val);
            else if (key == "plot_offset") cfg.plot_offset = std::stoull(val);
            else if (key == "delta0") cfg.schedule.delta0 = std::stod(val);
            else if (key == "kappa") cfg.schedule.kappa = std::stoi(val);
            else if (key == "phi") cfg.schedule.phi = std::stod(val);
            else if (key == "lambda1") cfg.schedule.lambda1 = std::stod(val);
            else if (key == "lambda2") cfg.schedule.lambda2 = std::stod(val);
            else if (key == "delta_min") cfg.schedule.delta_min = std::stod(val);
            else if (key == "t0") cfg.schedule.t0 = std::stod(val);
            else if (key == "max_stall") cfg.schedule.max_stall = std::stoi(val);
            else
                throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
        } catch (const std::invalid_argument&) {
            throw ConfigError("line " + std::to_string(line_no) + ": bad value for '" + key +
                              "'");
        } catch (const std::out_of_range&) {
            throw ConfigError("line " + std::to_string(line_no) + ": value out of range for '" +
                              key + "'");
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

std::string config_hash(const RunConfig& c) {
    std::string s = c.mode + "|";
    for (double t : c.taus) s += fmt(t) + ",";
    s += "|";
    for (const auto& m : c.model_list()) s += m + ",";
    s += "|" + std::to_string(c.seed) + "|" + std::to_string(c.sim_S) + "|" + fmt(c.f()) +
         "|" + std::to_string(c.n_restarts) + "|" + std::to_string(c.n_mc) + "|" +
         std::to_string(c.block) + "|" + c.input_path + "|" + std::to_string(c.is_length) +
         "|" + std::to_string(c.oos_length) + "|" + std::to_string(c.step) + "|" +
         fmt(c.schedule.delta0) + "|" + std::to_string(c.schedule.kappa) + "|" +
         fmt(c.schedule.phi) + "|" + fmt(c.schedule.lambda1) + "|" + fmt(c.schedule.lambda2) +
         "|" + fmt(c.schedule.delta_min) + "|" + fmt(c.schedule.t0) + "|" +
         std::to_string(c.schedule.max_stall) + "|" + std::to_string(c.plot_window) + "|" +
         std::to_string(c.plot_offset);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(s)));
    return buf;
}

std::string provenance_line(const RunConfig& config) {
    return "# config_hash=" + config_hash(config) + " seed=" + std::to_string(config.seed) +
           " version=" + kVersion;
}

void emit_plot_data(const std::string& path, const RunConfig& config,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << provenance_line(config) << "\n";
    out << "index,series_name,value\n";
    for (const auto& [name, values] : series)
        for (std::size_t i = 0; i < values.size(); ++i)
            out << i << "," << name << "," << fmt(values[i]) << "\n";
}

int run_simulate(const RunConfig& config) {
    try {
        config.validate();
        const double tau = config.taus.front();
        SimConfig sc{tau, config.sim_S, config.f(), derive_seed(config.seed, "sim", 0)};
        const SimPath path = simulate(sc);
        auto out = open_out(config.out_dir, "sim.csv", config);
        out << "s,z,c_true,p\n";
        for (std::size_t i = 0; i < path.z.size(); ++i)
            out << i + 1 << "," << fmt(path.z[i]) << "," << fmt(path.c_true[i]) << ","
                << fmt(path.p[i]) << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}

BenchmarkResult benchmark_single_tau(const RunConfig& config, double tau) {
    BenchmarkResult res;
    res.tau = tau;
    const std::uint64_t tau_idx = static_cast<std::uint64_t>(std::lround(tau * 1e6));
    SimConfig sc{tau, config.sim_S, config.f(), derive_seed(config.seed, "sim", tau_idx)};
    SimPath path = simulate(sc);
    res.z = std::move(path.z);
    res.c_true = std::move(path.c_true);
    const std::size_t S = res.z.size();

    std::vector<ModelSpec> specs;
    std::vector<std::string> names = config.model_list();
    std::size_t eval_from = 0;
    bool need_proxy = false;
    for (const auto& name : names) {
        ModelSpec spec = ModelSpec::parse(name);
        specs.push_back(spec);
        if (spec.warm_up() + 10 <= S) eval_from = std::max(eval_from, spec.warm_up());
        if (spec.needs_proxy()) need_proxy = true;
    }
    res.eval_from = eval_from;

    std::vector<double> proxy;
    if (need_proxy)
        proxy = rolling_realized_quantiles(res.z, RealizedQuantileMethod::WHS, 0.99, tau);

    const double c0 = empirical_quantile(res.z, tau);
    const std::uint64_t fit_seed = derive_seed(config.seed, "fit", tau_idx);

    for (std::size_t m = 0; m < specs.size(); ++m) {
        BenchmarkRow row;
        row.model = names[m];
        row.tau = tau;
        const ModelSpec& spec = specs[m];
        if (spec.warm_up() + 10 > S) {
            row.fit_failed = true;
            row.error = "warm-up exceeds sample";
            res.rows.push_back(std::move(row));
            continue;
        }
        try {
            FitResult fit = fit_model(spec, res.z, tau, c0, eval_from, proxy, fit_seed,
                                      config.n_restarts, config.schedule);
            QuantilePath qp = spec.filter(fit.params, res.z, tau, c0, proxy);

            const std::size_t from = std::max(eval_from, qp.valid_from);
            const std::size_t n = S - from;
            row.rmse_true = rmse(std::span(qp.c_hat).subspan(from, n),
                                 std::span(res.c_true).subspan(from, n));
            row.mad = mad_tau(res.z, qp.c_hat, tau, from);
            row.coverage = coverage(std::span(qp.d).subspan(from, n));
            row.subcov_rmse =
                subsample_coverage_rmse(std::span(qp.d).subspan(from, n), tau, config.block);
            res.c_hat[row.model] = std::move(qp.c_hat);
            res.params[row.model] = fit.params;
        } catch (const std::exception& e) {
            row.fit_failed = true;
            row.error = e.what();
        }
        res.rows.push_back(std::move(row));
    }
    return res;
}

int run_benchmark(const RunConfig& config) {
    try {
        config.validate();
        bool partial = false;

        auto table = open_out(config.out_dir, "benchmark.csv", config);
        table << "model,tau,rmse_true,mad,coverage,subcov_rmse,error\n";
        auto agree = open_out(config.out_dir, "agreement.csv", config);
        agree << "tau,model_a,model_b,agreement,conditional_agreement\n";

        for (double tau : config.taus) {
            BenchmarkResult res = benchmark_single_tau(config, tau);
            for (const auto& row : res.rows) {
                partial = partial || row.fit_failed;
                table << row.model << "," << fmt(row.tau) << "," << fmt(row.rmse_true) << ","
                      << fmt(row.mad) << "," << fmt(row.coverage) << ","
                      << fmt(row.subcov_rmse) << "," << row.error << "\n";
            }

            // Per-block MAD and RMSE-vs-true losses for ranking agreement.
            const std::size_t S = res.z.size();
            const std::size_t n_blocks = (S - res.eval_from) / config.block;
            std::map<std::string, std::vector<double>> mad_blocks, rmse_blocks;
            for (const auto& [name, c_hat] : res.c_hat) {
                auto& mb = mad_blocks[name];
                auto& rb = rmse_blocks[name];
                for (std::size_t b = 0; b < n_blocks; ++b) {
                    const std::size_t off = res.eval_from + b * config.block;
                    mb.push_back(mad_tau(std::span(res.z).subspan(off, config.block),
                                         std::span(c_hat).subspan(off, config.block), tau));
                    rb.push_back(rmse(std::span(c_hat).subspan(off, config.block),
                                      std::span(res.c_true).subspan(off, config.block)));
                }
            }
            for (auto a = mad_blocks.begin(); a != mad_blocks.end(); ++a)
                for (auto b = std::next(a); b != mad_blocks.end(); ++b) {
                    const double ag = ranking_agreement(a->second, b->second,
                                                        rmse_blocks[a->first],
                                                        rmse_blocks[b->first]);
                    const double cond = conditional_ranking_agreement(
                        a->second, b->second, rmse_blocks[a->first], rmse_blocks[b->first]);
                    agree << fmt(tau) << "," << a->first << "," << b->first << "," << fmt(ag)
                          << "," << fmt(cond) << "\n";
                }

            // Wide plot slice: s, z, c_true, one column per fitted model.
            const std::size_t lo = std::min(config.plot_offset, S);
            const std::size_t len = std::min(config.plot_window, S - lo);
            auto plot = open_out(config.out_dir,
                                 "plot_tau" + std::to_string(static_cast<int>(
                                                  std::lround(tau * 100))) + ".csv",
                                 config);
            plot << "s,z,c_true";
            for (const auto& [name, c_hat] : res.c_hat) plot << "," << name;
            plot << "\n";
            for (std::size_t i = lo; i < lo + len; ++i) {
                plot << i + 1 << "," << fmt(res.z[i]) << "," << fmt(res.c_true[i]);
                for (const auto& [name, c_hat] : res.c_hat) plot << "," << fmt(c_hat[i]);
                plot << "\n";
            }
        }
        return partial ? 3 : 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}

namespace {

struct BacktestRow {
    std::string portfolio;
    std::size_t window = 0;
    std::string model;
    double tau = 0.0;
    double mad = 0.0;
    double coverage = 0.0;
    double subcov_rmse = 0.0;
    TestResult kupiec, slrt;
    double aic = 0.0, bic = 0.0;
    bool selected = false;
    Wtl wtl = Wtl::Tie;
    double delta_sum = 0.0, Delta_sum = 0.0;  // un-annualized pinball-difference sums
    std::size_t n_days = 0;
    std::string error;
};

const char* wtl_name(Wtl w) {
    switch (w) {
        case Wtl::Win:
            return "Win";
        case Wtl::Lose:
            return "Lose";
        default:
            return "Tie";
    }
}

double pinball(double x, double q, double tau) {
    return (x - q) * (tau - (x < q ? 1.0 : 0.0));
}

}  // namespace

int run_backtest(const RunConfig& config) {
    try {
        config.validate();

        std::ifstream in(config.input_path);
        if (!in) {
            std::cerr << "data error: cannot open " << config.input_path << "\n";
            return 2;
        }
        RawPanel panel;
        try {
            panel = parse_ff_csv(in);
        } catch (const ParseError& e) {
            std::cerr << "data error: " << e.what() << "\n";
            return 2;
        }

        const WindowScheme scheme =
            split_windows(panel.n_rows(), config.is_length, config.oos_length, config.step);
        if (scheme.windows.empty()) {
            std::cerr << "data error: no complete (IS, OOS) window fits the sample\n";
            return 2;
        }

        std::vector<std::string> names = config.model_list();
        std::vector<ModelSpec> specs;
        std::size_t eval_from = 0;
        bool need_proxy = false;
        for (const auto& n : names) {
            ModelSpec s = ModelSpec::parse(n);
            eval_from = std::max(eval_from, s.warm_up());
            need_proxy = need_proxy || s.needs_proxy();
            specs.push_back(s);
        }

        bool partial = false;
        std::vector<BacktestRow> rows;
        ordered_json skipped = ordered_json::array();
        std::map<std::pair<std::size_t, std::uint64_t>, SlrtNull> null_tables;

        for (double tau : config.taus) {
            const std::uint64_t tau_idx = static_cast<std::uint64_t>(std::lround(tau * 1e6));
            for (std::size_t j = 0; j < panel.n_cols(); ++j) {
                const std::string& pname = panel.names[j];

                // log returns with NaN at missing entries
                std::vector<double> logret(panel.n_rows(), kNaN);
                for (std::size_t t = 0; t < panel.n_rows(); ++t) {
                    if (panel.missing[j][t]) continue;
                    const double r = panel.columns[j][t];
                    if (r <= -100.0) continue;  // impossible net return; treat as missing
                    logret[t] = std::log1p(r / 100.0);
                }

                for (std::size_t w = 0; w < scheme.windows.size(); ++w) {
                    const auto& [is, oos] = scheme.windows[w];
                    bool missing = false;
                    for (std::size_t t = is.begin; t < oos.end && !missing; ++t)
                        missing = std::isnan(logret[t]);
                    if (missing) {
                        skipped.push_back({{"portfolio", pname},
                                           {"window", w},
                                           {"tau", tau},
                                           {"reason", "missing data"}});
                        std::cerr << "skip " << pname << " window " << w
                                  << ": missing data\n";
                        continue;
                    }
                    if (config.is_length <= eval_from + 50) {
                        skipped.push_back({{"portfolio", pname},
                                           {"window", w},
                                           {"tau", tau},
                                           {"reason", "in-sample too short for warm-up"}});
                        continue;
                    }

                    // demean by the IS mean
                    double mu = 0.0;
                    for (std::size_t t = is.begin; t < is.end; ++t) mu += logret[t];
                    mu /= static_cast<double>(is.size());
                    ReturnSeries demeaned;
                    demeaned.values.assign(logret.begin(), logret.end());
                    for (auto& v : demeaned.values) v -= mu;
                    demeaned.mean_is = mu;

                    const std::uint64_t wseed =
                        derive_seed(config.seed, "bt/" + pname, w * 1000003ull + tau_idx);

                    GjrParams gjr;
                    try {
                        gjr = fit_gjr(std::span(demeaned.values)
                                          .subspan(is.begin, is.size()),
                                      wseed);
                    } catch (const GjrFitError& e) {
                        skipped.push_back({{"portfolio", pname},
                                           {"window", w},
                                           {"tau", tau},
                                           {"reason", std::string("garch: ") + e.what()}});
                        partial = true;
                        continue;
                    }
                    const StandardizedSeries st = standardize(demeaned, gjr, is, oos);
                    const std::size_t split = st.split;
                    const std::span<const double> z(st.z);
                    const std::span<const double> z_is = z.subspan(0, split);

                    std::vector<double> proxy_full;
                    if (need_proxy)
                        proxy_full = rolling_realized_quantiles(
                            st.z, RealizedQuantileMethod::WHS, 0.99, tau);
                    const std::span<const double> proxy(proxy_full);

                    const double c0 = empirical_quantile(z_is, tau);
                    const std::size_t T_eval = split - eval_from;

                    // constant benchmark: the exact pinball minimizer in-sample
                    const double c_const =
                        empirical_quantile(z_is.subspan(eval_from), tau);
                    double const_loss = 0.0;
                    for (std::size_t t = eval_from; t < split; ++t)
                        const_loss += pinball(z[t], c_const, tau);
                    const_loss /= static_cast<double>(T_eval);

                    // OOS data in both spaces
                    const std::size_t H = oos.size();
                    std::vector<double> r_oos(H), q_const(H), c_const_path(H, c_const);
                    for (std::size_t h = 0; h < H; ++h) {
                        r_oos[h] = logret[oos.begin + h] ;
                        q_const[h] = mu + st.sigma[split + h] * c_const;
                    }

                    auto key = std::make_pair(H, tau_idx);
                    if (!null_tables.count(key))
                        null_tables.emplace(
                            key, SlrtNull(H, tau, config.n_mc,
                                          derive_seed(config.seed, "slrt-null", tau_idx)));
                    const SlrtNull& null_table = null_tables.at(key);

                    for (const ModelSpec& spec : specs) {
                        BacktestRow row;
                        row.portfolio = pname;
                        row.window = w;
                        row.model = spec.name();
                        row.tau = tau;

                        std::vector<double> c_oos(c_const_path);
                        bool selected = false;
                        if (spec.kind == ModelKind::Const) {
                            // the benchmark itself: closed-form fit, never "selected"
                            row.aic = info_criterion(const_loss, T_eval, 1, Penalty::AIC);
                            row.bic = info_criterion(const_loss, T_eval, 1, Penalty::BIC);
                        } else try {
                            FitResult fit =
                                fit_model(spec, z_is, tau, c0, eval_from,
                                          proxy.empty()
                                              ? proxy
                                              : proxy.subspan(0, split),
                                          wseed, config.n_restarts, config.schedule);
                            row.aic = info_criterion(fit.loss, T_eval, fit.k, Penalty::AIC);
                            row.bic = info_criterion(fit.loss, T_eval, fit.k, Penalty::BIC);
                            selected = select_model(fit.loss, fit.k, const_loss, T_eval,
                                                    Penalty::AIC) == ModelChoice::Dynamic;
                            if (selected) {
                                QuantilePath qp = spec.filter(fit.params, z, tau, c0, proxy);
                                for (std::size_t h = 0; h < H; ++h)
                                    c_oos[h] = qp.c_hat[split + h];
                            }
                        } catch (const std::exception& e) {
                            row.error = e.what();
                            partial = true;
                            selected = false;
                            c_oos = c_const_path;
                        }
                        row.selected = selected;

                        std::vector<std::uint8_t> d(H);
                        std::vector<double> q_model(H);
                        for (std::size_t h = 0; h < H; ++h) {
                            d[h] = z[split + h] < c_oos[h] ? 1 : 0;
                            q_model[h] = mu + st.sigma[split + h] * c_oos[h];
                        }
                        const std::span<const double> z_oos = z.subspan(split, H);
                        row.mad = mad_tau(z_oos, c_oos, tau);
                        const double mad_const = mad_tau(z_oos, c_const_path, tau);
                        row.coverage = coverage(d);
                        row.subcov_rmse =
                            H >= config.block
                                ? subsample_coverage_rmse(d, tau, config.block)
                                : kNaN;
                        row.kupiec = kupiec_test(d, tau);
                        bool degen = false;
                        const double stat = slrt_statistic(d, tau, &degen);
                        row.slrt = slrt_mc_pvalue(stat, degen, null_table);
                        row.wtl = win_tie_lose(row.mad, mad_const, selected);
                        for (std::size_t h = 0; h < H; ++h) {
                            row.delta_sum += pinball(z_oos[h], c_oos[h], tau) -
                                             pinball(z_oos[h], c_const, tau);
                            row.Delta_sum += pinball(r_oos[h], q_model[h], tau) -
                                             pinball(r_oos[h], q_const[h], tau);
                        }
                        row.n_days = H;
                        rows.push_back(std::move(row));
                    }
                }
            }
        }

        // report.csv
        auto report = open_out(config.out_dir, "report.csv", config);
        report << "portfolio,window,model,tau,mad,rmse_true,coverage,subcov_rmse,kupiec_stat,"
                  "kupiec_p,slrt_stat,slrt_p,aic,bic,selected,wtl,delta_mad_ann,Delta_mad_ann,"
                  "error\n";
        for (const auto& r : rows) {
            const double dn = static_cast<double>(r.n_days);
            report << r.portfolio << "," << r.window << "," << r.model << "," << fmt(r.tau)
                   << "," << fmt(r.mad) << ",," << fmt(r.coverage) << ","
                   << fmt(r.subcov_rmse) << "," << fmt(r.kupiec.statistic) << ","
                   << fmt(r.kupiec.pvalue) << "," << fmt(r.slrt.statistic) << ","
                   << fmt(r.slrt.pvalue) << "," << fmt(r.aic) << "," << fmt(r.bic) << ","
                   << (r.selected ? 1 : 0) << "," << wtl_name(r.wtl) << ","
                   << fmt(250.0 * r.delta_sum / dn) << "," << fmt(250.0 * r.Delta_sum / dn)
                   << "," << r.error << "\n";
        }

        // report.json
        ordered_json jrows = ordered_json::array();
        for (const auto& r : rows) {
            const double dn = static_cast<double>(r.n_days);
            jrows.push_back({{"portfolio", r.portfolio},
                             {"window", r.window},
                             {"model", r.model},
                             {"tau", r.tau},
                             {"mad", r.mad},
                             {"rmse_true", nullptr},
                             {"coverage", r.coverage},
                             {"subcov_rmse", std::isnan(r.subcov_rmse)
                                                 ? ordered_json(nullptr)
                                                 : ordered_json(r.subcov_rmse)},
                             {"kupiec_stat", r.kupiec.statistic},
                             {"kupiec_p", r.kupiec.pvalue},
                             {"slrt_stat", r.slrt.statistic},
                             {"slrt_p", r.slrt.pvalue},
                             {"slrt_degenerate", r.slrt.degenerate},
                             {"aic", r.aic},
                             {"bic", r.bic},
                             {"selected", r.selected},
                             {"wtl", wtl_name(r.wtl)},
                             {"delta_mad_ann", 250.0 * r.delta_sum / dn},
                             {"Delta_mad_ann", 250.0 * r.Delta_sum / dn},
                             {"n_days", r.n_days},
                             {"error", r.error}});
        }
        ordered_json jdoc = {{"config_hash", config_hash(config)},
                             {"seed", config.seed},
                             {"version", kVersion},
                             {"rows", jrows},
                             {"skipped", skipped}};
        {
            std::ofstream jf(config.out_dir + "/report.json", std::ios::binary);
            if (!jf) throw ConfigError("cannot open report.json");
            jf << jdoc.dump(2) << "\n";
        }

        // aggregates
        struct Agg {
            int win = 0, tie = 0, lose = 0, n = 0, on = 0;
            double delta = 0.0, Delta = 0.0;
            std::size_t days = 0;
        };
        std::map<std::pair<double, std::string>, Agg> aggs;
        std::map<std::pair<double, std::string>,
                 std::map<std::string, std::vector<std::uint8_t>>>
            cov_flags, ind_flags;
        for (const auto& r : rows) {
            auto& a = aggs[{r.tau, r.model}];
            ++a.n;
            a.on += r.selected ? 1 : 0;
            a.win += r.wtl == Wtl::Win;
            a.tie += r.wtl == Wtl::Tie;
            a.lose += r.wtl == Wtl::Lose;
            a.delta += r.delta_sum;
            a.Delta += r.Delta_sum;
            a.days += r.n_days;
            cov_flags[{r.tau, r.model}][r.portfolio].push_back(r.kupiec.pvalue < 0.05 ? 1
                                                                                      : 0);
            ind_flags[{r.tau, r.model}][r.portfolio].push_back(
                (!r.slrt.degenerate && r.slrt.pvalue < 0.05) ? 1 : 0);
        }

        auto wtl_out = open_out(config.out_dir, "wtl_summary.csv", config);
        wtl_out << "tau,model,n,on_frac,win,tie,lose,delta_mad_ann,Delta_mad_ann\n";
        for (const auto& [key, a] : aggs) {
            const double dn = static_cast<double>(a.days);
            wtl_out << fmt(key.first) << "," << key.second << "," << a.n << ","
                    << fmt(static_cast<double>(a.on) / a.n) << "," << a.win << "," << a.tie
                    << "," << a.lose << "," << fmt(250.0 * a.delta / dn) << ","
                    << fmt(250.0 * a.Delta / dn) << "\n";
        }

        auto ts_out = open_out(config.out_dir, "twostage.csv", config);
        ts_out << "tau,model,coverage_rejections,independence_rejections\n";
        for (const auto& [key, by_portfolio] : cov_flags) {
            std::vector<std::vector<std::uint8_t>> cov_grid, ind_grid;
            for (const auto& [p, flags] : by_portfolio) cov_grid.push_back(flags);
            for (const auto& [p, flags] : ind_flags[key]) ind_grid.push_back(flags);
            ts_out << fmt(key.first) << "," << key.second << ","
                   << two_stage_counts(cov_grid) << "," << two_stage_counts(ind_grid)
                   << "\n";
        }

        return partial ? 3 : 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}

int run_report(const RunConfig& config) {
    try {
        config.validate();
        std::ifstream in(config.input_path);
        if (!in) {
            std::cerr << "data error: cannot open " << config.input_path << "\n";
            return 2;
        }
        ordered_json doc;
        try {
            in >> doc;
        } catch (const std::exception& e) {
            std::cerr << "data error: " << e.what() << "\n";
            return 2;
        }

        struct Agg {
            int win = 0, tie = 0, lose = 0, n = 0, on = 0;
            double delta = 0.0, Delta = 0.0;
        };
        std::map<std::pair<double, std::string>, Agg> aggs;
        for (const auto& r : doc.at("rows")) {
            auto& a = aggs[{r.at("tau").get<double>(), r.at("model").get<std::string>()}];
            ++a.n;
            a.on += r.at("selected").get<bool>() ? 1 : 0;
            const std::string w = r.at("wtl").get<std::string>();
            a.win += w == "Win";
            a.tie += w == "Tie";
            a.lose += w == "Lose";
            a.delta += r.at("delta_mad_ann").get<double>();
            a.Delta += r.at("Delta_mad_ann").get<double>();
        }
        auto out = open_out(config.out_dir, "aggregate.csv", config);
        out << "tau,model,n,on_frac,win,tie,lose,mean_delta_mad_ann,mean_Delta_mad_ann\n";
        for (const auto& [key, a] : aggs)
            out << fmt(key.first) << "," << key.second << "," << a.n << ","
                << fmt(static_cast<double>(a.on) / a.n) << "," << a.win << "," << a.tie << ","
                << a.lose << "," << fmt(a.delta / a.n) << "," << fmt(a.Delta / a.n) << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace varq
