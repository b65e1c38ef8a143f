#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dcta/backtest.hpp"
#include "dcta/bayes_opt.hpp"
#include "dcta/dc_engine.hpp"
#include "dcta/hmm.hpp"
#include "dcta/ingest.hpp"
#include "dcta/metrics.hpp"
#include "dcta/strategy.hpp"
#include "dcta/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dcta;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::map<std::string, std::string> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput(fmt::format("cannot open config file '{}'", path.string()));
    std::map<std::string, std::string> values;
    std::string line;
    for (int line_no = 1; std::getline(in, line); ++line_no) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(fmt::format("{}:{}: expected 'key = value'", path.string(), line_no));
        }
        values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return values;
}

// Fills options of `sub` that were not given on the command line.
void apply_config(CLI::App& sub, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw UsageError(fmt::format("config key '{}' is not an option of '{}'", key, sub.get_name()));
        }
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(fmt::format("{}: '{}' is not a number", what, item));
        }
    }
    return out;
}

Interval parse_bounds(const std::string& text, const char* what) {
    const auto v = parse_list(text, what);
    if (v.size() != 2) throw UsageError(fmt::format("{}: expected 'lo,hi'", what));
    return {v[0], v[1]};
}

std::vector<StrategyKind> parse_strategies(const std::string& text) {
    std::vector<StrategyKind> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto kind = parse_strategy_kind(item);
        if (!kind) throw UsageError(fmt::format("--strategies: unknown strategy '{}'", item));
        out.push_back(*kind);
    }
    if (out.empty()) throw UsageError("--strategies: empty selection");
    return out;
}

ParsedTicks load(const std::string& input, std::string instrument) {
    if (input.empty()) throw UsageError("--input is required");
    if (!fs::exists(input)) throw MissingInput(fmt::format("input file '{}' does not exist", input));
    if (instrument.empty()) instrument = fs::path(input).stem().string();
    auto parsed = parse_ticks_file(input, std::move(instrument));
    const auto& s = parsed.summary;
    std::cerr << fmt::format("{}: {} rows, {} rejected, {} out of order\n", input, s.rows_read, s.rows_rejected,
                             s.rows_dropped);
    return parsed;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    return out;
}

void print_aggregate(const BacktestReport& report) {
    std::cout << fmt::format("{:<12} {:>14} {:>16} {:>14} {:>9}\n", "strategy", "mean_crr_pct", "chained_crr_pct",
                             "mean_mdd_pct", "avg_rank");
    for (const auto& r : report.aggregate) {
        std::cout << fmt::format("{:<12} {:>14.4f} {:>16.4f} {:>14.4f} {:>9}\n", r.strategy, r.mean_crr_pct,
                                 r.chained_crr_pct, r.mean_mdd_pct,
                                 r.avg_rank ? fmt::format("{:.4f}", *r.avg_rank) : std::string{"-"});
    }
    if (report.friedman_crr) {
        const auto& f = *report.friedman_crr;
        std::cout << fmt::format("friedman crr: chi2 = {:.4f}, p = {:.4g}, critical(0.05) = {:.4f}\n", f.statistic,
                                 f.p_value, f.critical_value);
    }
}

struct HmmFlags {
    int max_iters = 200;
    double tol = 1e-6;
    int restarts = 5;

    void add(CLI::App& sub) {
        sub.add_option("--hmm-max-iters", max_iters, "Baum-Welch iteration cap")->capture_default_str();
        sub.add_option("--hmm-tol", tol, "Baum-Welch log-likelihood tolerance")->capture_default_str();
        sub.add_option("--hmm-restarts", restarts, "Baum-Welch restarts")->capture_default_str();
    }
    HmmFitOptions options(std::uint64_t seed) const {
        HmmFitOptions o;
        o.max_iters = max_iters;
        o.tol = tol;
        o.restarts = restarts;
        o.seed = seed;
        return o;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Directional-change trading toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key = value file; command-line flags take precedence");

    std::string input, instrument, out, theta_bounds = "0.0003,0.003", alpha_bounds = "0.1,1";
    std::string strategies = "FT,OPT_T,IDC,ITA", fixed_thresholds, force_regime, strategy = "IDC";
    double theta = 0.001, alpha = 1.0;
    int iters = 100, init = 10, window_months = 2, stride_months = 1;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    HmmFlags hmm_flags;
    SyntheticSpec syn;
    std::string syn_start = "2019-01";

    auto add_input = [&](CLI::App* sub) {
        sub->add_option("--input", input, "tick CSV (timestamp,bid,ask)");
        sub->add_option("--instrument", instrument, "instrument name (default: input file stem)");
    };

    auto* summarize = app.add_subcommand("summarize", "detect DC events and write event and R_DC dumps");
    add_input(summarize);
    summarize->add_option("--theta", theta, "upturn threshold")->capture_default_str();
    summarize->add_option("--alpha", alpha, "downturn decay coefficient")->capture_default_str();
    summarize->add_option("--out", out, "output directory for events.csv and rdc.csv");

    auto* optimize_cmd = app.add_subcommand("optimize", "search (theta, alpha) maximizing the strategy return");
    add_input(optimize_cmd);
    optimize_cmd->add_option("--strategy", strategy, "OPT_T (theta only) or IDC (theta and alpha)")
        ->capture_default_str();
    optimize_cmd->add_option("--theta-bounds", theta_bounds, "lo,hi")->capture_default_str();
    optimize_cmd->add_option("--alpha-bounds", alpha_bounds, "lo,hi")->capture_default_str();
    optimize_cmd->add_option("--iters", iters, "total objective evaluations")->capture_default_str();
    optimize_cmd->add_option("--init", init, "initial design size")->capture_default_str();
    optimize_cmd->add_option("--seed", seed, "root seed (required)");
    optimize_cmd->add_option("--out", out, "trial history CSV");

    auto* regimes = app.add_subcommand("regimes", "fit the two-state regime model on R_DC and decode it");
    add_input(regimes);
    regimes->add_option("--theta", theta, "upturn threshold")->capture_default_str();
    regimes->add_option("--alpha", alpha, "downturn decay coefficient")->capture_default_str();
    regimes->add_option("--seed", seed, "restart seed")->capture_default_str();
    hmm_flags.add(*regimes);
    regimes->add_option("--out", out, "output directory for model.txt and regimes.csv");

    auto* backtest = app.add_subcommand("backtest", "sliding-window train/test backtest of the selected strategies");
    add_input(backtest);
    backtest->add_option("--theta-bounds", theta_bounds, "lo,hi")->capture_default_str();
    backtest->add_option("--alpha-bounds", alpha_bounds, "lo,hi")->capture_default_str();
    backtest->add_option("--iters", iters, "optimizer evaluations per window")->capture_default_str();
    backtest->add_option("--init", init, "initial design size")->capture_default_str();
    backtest->add_option("--seed", seed, "root seed (required)");
    backtest->add_option("--window-months", window_months, "window length in months")->capture_default_str();
    backtest->add_option("--stride-months", stride_months, "window stride in months")->capture_default_str();
    backtest->add_option("--strategies", strategies, "comma-separated subset of FT,OPT_T,IDC,ITA")
        ->capture_default_str();
    backtest->add_option("--fixed-thresholds", fixed_thresholds, "comma-separated FT thresholds");
    backtest->add_option("--force-regime", force_regime, "debug: pin the ITA regime")
        ->check(CLI::IsMember({"normal", "abnormal"}));
    backtest->add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();
    hmm_flags.add(*backtest);
    backtest->add_option("--out", out, "report directory");

    auto* gen = app.add_subcommand("gen-synthetic", "generate a tick CSV with planted volatility bursts");
    gen->add_option("--seed", syn.seed, "generator seed")->capture_default_str();
    gen->add_option("--months", syn.months, "calendar months to cover")->capture_default_str();
    gen->add_option("--start", syn_start, "first month, YYYY-MM")->capture_default_str();
    gen->add_option("--start-price", syn.start_price)->capture_default_str();
    gen->add_option("--tick-seconds", syn.tick_seconds, "mean tick spacing")->capture_default_str();
    gen->add_option("--daily-vol", syn.daily_vol, "calm log-volatility per day")->capture_default_str();
    gen->add_option("--daily-drift", syn.daily_drift, "calm log-drift per day")->capture_default_str();
    gen->add_option("--burst-fraction", syn.burst_fraction, "share of time in bursts")->capture_default_str();
    gen->add_option("--burst-vol-mult", syn.burst_vol_mult, "burst volatility multiplier")->capture_default_str();
    gen->add_option("--burst-drift", syn.burst_daily_drift, "burst log-drift per day")->capture_default_str();
    gen->add_option("--min-burst-hours", syn.min_burst_hours)->capture_default_str();
    gen->add_option("--max-burst-hours", syn.max_burst_hours)->capture_default_str();
    gen->add_option("--spread", syn.spread, "ask - bid")->capture_default_str();
    gen->add_option("--out", out, "output CSV (default: stdout)");

    auto* report = app.add_subcommand("report", "rebuild aggregate.csv and friedman.csv from per_window.csv");
    report->add_option("--out", out, "report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!config_path.empty()) apply_config(*sub, read_config(config_path));
        const bool seed_given = sub->get_option_no_throw("--seed") && sub->get_option("--seed")->count() > 0;

        if (sub == summarize) {
            const auto parsed = load(input, instrument);
            const DcConfig config{theta, alpha};
            const auto summary = dcta::summarize(parsed.series.prices, config);
            const auto rdc = summary.extremes.size() >= 2 ? rdc_series(summary.extremes, parsed.series.timestamps)
                                                          : RdcSeries{};
            if (!out.empty()) {
                fs::create_directories(out);
                auto ev = open_out(fs::path(out) / "events.csv");
                write_event_csv(ev, summary.events);
                auto rd = open_out(fs::path(out) / "rdc.csv");
                write_rdc_csv(rd, rdc.points);
            }
            std::cout << fmt::format("{} events\n", summary.events.size());
            std::cout << fmt::format("{} confirmations, {} extremes, {} R_DC values ({} skipped)\n",
                                     summary.confirmations().size(), summary.extremes.size(), rdc.points.size(),
                                     rdc.skipped);
        } else if (sub == optimize_cmd) {
            if (!seed_given) throw UsageError("--seed is required");
            const auto parsed = load(input, instrument);
            const auto kind = parse_strategy_kind(strategy);
            if (!kind || (*kind != StrategyKind::OPT_T && *kind != StrategyKind::IDC)) {
                throw UsageError("--strategy must be OPT_T or IDC");
            }
            SearchSpace space;
            space.theta = parse_bounds(theta_bounds, "--theta-bounds");
            space.alpha = parse_bounds(alpha_bounds, "--alpha-bounds");
            OptimizeOptions options;
            options.n_iters = iters;
            options.n_init = init;
            options.seed = seed;
            const auto objective = [&](double t, double a) { return training_crr(parsed.series, {t, a}); };
            const auto result = *kind == StrategyKind::OPT_T ? optimize_theta_only(objective, space, options)
                                                             : optimize(objective, space, options);
            if (!out.empty()) {
                auto f = open_out(out);
                write_trials_csv(f, result.history);
            }
            std::cout << fmt::format("best theta = {}, alpha = {}, crr_pct = {} (iteration {})\n", result.best.theta,
                                     result.best.alpha, result.best.objective, result.best.iteration);
        } else if (sub == regimes) {
            const auto parsed = load(input, instrument);
            const DcConfig config{theta, alpha};
            const auto summary = dcta::summarize(parsed.series.prices, config);
            if (summary.extremes.size() < 2) throw std::runtime_error("fewer than two DC extremes; no R_DC data");
            const auto rdc = rdc_series(summary.extremes, parsed.series.timestamps);
            const auto values = rdc_values(rdc);
            const auto fit = fit_baum_welch(values, hmm_flags.options(seed));
            const auto map = label_regimes(fit.model);
            const auto path = viterbi(fit.model, values);
            std::size_t abnormal = 0;
            for (auto s : path) abnormal += map(s) == RegimeLabel::Abnormal;
            if (!out.empty()) {
                fs::create_directories(out);
                auto m = open_out(fs::path(out) / "model.txt");
                write_model(m, fit.model, map);
                auto r = open_out(fs::path(out) / "regimes.csv");
                r << "timestamp,rdc,state,regime\n";
                for (std::size_t i = 0; i < path.size(); ++i) {
                    const auto& p = rdc.points[i];
                    r << fmt::format("{},{},{},{}\n", format_timestamp(parsed.series.timestamps[p.to_extreme]),
                                     p.value, path[i], to_string(map(path[i])));
                }
            }
            std::cout << fmt::format("{} R_DC values, log-likelihood {:.6f} after {} iterations\n", values.size(),
                                     fit.log_likelihood, fit.iterations);
            for (std::size_t k = 0; k < fit.model.n_states(); ++k) {
                std::cout << fmt::format("state {} ({}): mean {:.6e}, variance {:.6e}\n", k, to_string(map(k)),
                                         fit.model.means[k], fit.model.variances[k]);
            }
            std::cout << fmt::format("{} of {} observations decoded Abnormal\n", abnormal, path.size());
        } else if (sub == backtest) {
            if (!seed_given) throw UsageError("--seed is required");
            if (out.empty()) throw UsageError("--out is required");
            const auto parsed = load(input, instrument);
            BacktestConfig config;
            config.window_months = window_months;
            config.stride_months = stride_months;
            config.space.theta = parse_bounds(theta_bounds, "--theta-bounds");
            config.space.alpha = parse_bounds(alpha_bounds, "--alpha-bounds");
            config.boa_iters = iters;
            config.boa_init = init;
            config.seed = seed;
            config.hmm = hmm_flags.options(seed);
            config.strategies = parse_strategies(strategies);
            if (!fixed_thresholds.empty()) config.fixed_thresholds = parse_list(fixed_thresholds, "--fixed-thresholds");
            if (!force_regime.empty()) {
                config.force_regime = force_regime == "abnormal" ? RegimeLabel::Abnormal : RegimeLabel::Normal;
            }
            config.jobs = jobs;
            const auto started = std::chrono::steady_clock::now();
            const auto result = run_backtest(parsed.series, config);
            if (result.windows.empty()) throw std::runtime_error("input spans no complete window");
            write_backtest_outputs(result, out);
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
            std::cerr << fmt::format("{} windows in {:.1f} s\n", result.windows.size(), elapsed.count());
            print_aggregate(result.report);
        } else if (sub == gen) {
            unsigned y = 0, m = 0;
            if (std::sscanf(syn_start.c_str(), "%u-%u", &y, &m) != 2 || m < 1 || m > 12) {
                throw UsageError("--start must be YYYY-MM");
            }
            syn.start_year = static_cast<int>(y);
            syn.start_month = m;
            const auto ticks = generate_synthetic(syn);
            if (out.empty()) {
                write_synthetic_csv(std::cout, ticks);
            } else {
                auto f = open_out(out);
                write_synthetic_csv(f, ticks);
                std::size_t bursts = 0;
                for (const auto& t : ticks) bursts += t.burst;
                std::cerr << fmt::format("{} ticks, {} in bursts\n", ticks.size(), bursts);
            }
        } else if (sub == report) {
            if (out.empty()) throw UsageError("--out is required");
            if (!fs::exists(fs::path(out) / "per_window.csv")) {
                throw MissingInput(fmt::format("'{}' does not exist", (fs::path(out) / "per_window.csv").string()));
            }
            print_aggregate(rebuild_report(out));
        }
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
