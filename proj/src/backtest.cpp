#include "dcta/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "dcta/dc_engine.hpp"

namespace dcta {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    return out;
}

constexpr std::size_t kEquityPlotPoints = 2000;

std::string ft_label(double theta) { return fmt::format("FT@{}", theta); }

StrategyOutcome make_outcome(std::string label, StrategyKind kind, const DcConfig& config, StrategyRun run) {
    StrategyOutcome o;
    o.label = std::move(label);
    o.kind = kind;
    o.config = config;
    o.crr_pct = crr(run.equity.initial_capital, run.equity.final_value());
    o.mdd_pct = run.equity.empty() ? 0.0 : mdd(run.equity);
    o.run = std::move(run);
    return o;
}

std::vector<double> training_rdc(const PriceSeries& train, const DcConfig& config) {
    const auto summary = summarize(train.prices, config);
    if (summary.extremes.size() < 2) return {};
    return rdc_values(rdc_series(summary.extremes, train.timestamps));
}

WindowOutcome run_window(const PriceSeries& series, const WindowSplit& split, const BacktestConfig& config) {
    WindowOutcome out;
    out.split = split;
    const PriceSeries train = series.slice(split.train_range.begin, split.train_range.end);
    const PriceSeries test = series.slice(split.test_range.begin, split.test_range.end);
    if (train.empty() || test.empty()) throw std::runtime_error("window has an empty train or test half");

    const auto has = [&](StrategyKind k) {
        return std::find(config.strategies.begin(), config.strategies.end(), k) != config.strategies.end();
    };
    const std::uint64_t seed = window_seed(config.seed, split.window_id);
    OptimizeOptions boa;
    boa.n_iters = config.boa_iters;
    boa.n_init = config.boa_init;
    boa.seed = seed;

    if (has(StrategyKind::FT)) {
        auto suite = run_ft_suite(test, config.fixed_thresholds, config.initial_capital);
        for (auto& r : suite.results) {
            out.outcomes.push_back(
                make_outcome(ft_label(r.theta), StrategyKind::FT, DcConfig{r.theta, 1.0}, std::move(r.run)));
        }
    }

    if (has(StrategyKind::OPT_T)) {
        auto objective = [&](double theta, double alpha) { return training_crr(train, {theta, alpha}, config.initial_capital); };
        out.theta_search = optimize_theta_only(objective, config.space, boa);
        const DcConfig best{out.theta_search->best.theta, out.theta_search->best.alpha};
        out.outcomes.push_back(make_outcome("OPT_T", StrategyKind::OPT_T, best,
                                            run_strategy(test, best, StrategyKind::OPT_T, nullptr, {},
                                                         config.initial_capital)));
    }

    if (has(StrategyKind::IDC) || has(StrategyKind::ITA)) {
        auto objective = [&](double theta, double alpha) { return training_crr(train, {theta, alpha}, config.initial_capital); };
        SearchSpace space = config.space;
        space.alpha_fixed.reset();
        out.pair_search = optimize(objective, space, boa);
        const DcConfig best{out.pair_search->best.theta, out.pair_search->best.alpha};

        if (has(StrategyKind::IDC)) {
            out.outcomes.push_back(make_outcome(
                "IDC", StrategyKind::IDC, best,
                run_strategy(test, best, StrategyKind::IDC, nullptr, {}, config.initial_capital)));
        }
        if (has(StrategyKind::ITA)) {
            auto history = training_rdc(train, best);
            RegimeGate gate = RegimeGate::always(RegimeLabel::Normal);
            if (config.force_regime) {
                gate = RegimeGate::always(*config.force_regime);
            } else {
                HmmFitOptions hmm = config.hmm;
                hmm.seed = seed;
                out.regime_fit = fit_baum_welch(history, hmm);
                gate = RegimeGate::from_model(out.regime_fit->model);
                out.regime_map = gate.regime_map();
            }
            out.outcomes.push_back(make_outcome(
                "ITA", StrategyKind::ITA, best,
                run_strategy(test, best, StrategyKind::ITA, &gate, std::move(history), config.initial_capital)));
        }
    }
    return out;
}

}  // namespace

std::uint64_t window_seed(std::uint64_t root, std::size_t window_id) {
    return root ^ static_cast<std::uint64_t>(window_id);
}

double training_crr(const PriceSeries& train, const DcConfig& config, double initial_capital) {
    const auto run = run_strategy(train, config, StrategyKind::IDC, nullptr, {}, initial_capital);
    return crr(run.equity.initial_capital, run.equity.final_value());
}

BacktestResult run_backtest(const PriceSeries& series, const BacktestConfig& config) {
    if (config.strategies.empty()) throw std::domain_error("run_backtest: no strategies selected");
    BacktestResult result;
    result.windows = sliding_windows(series, config.window_months, config.stride_months, config.split);
    const std::size_t n = result.windows.size();
    result.outcomes.resize(n);

    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                result.outcomes[i] = run_window(series, result.windows[i], config);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned jobs = config.jobs ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
    {
        std::vector<std::jthread> pool;
        for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("window {}: {}", result.windows[i].window_id, e.what()));
        }
    }

    std::vector<WindowRow> rows;
    for (const auto& w : result.outcomes) {
        for (const auto& o : w.outcomes) {
            rows.push_back({w.split.window_id, o.label, o.crr_pct, o.mdd_pct, o.run.trades.size()});
        }
    }
    if (!rows.empty()) result.report = build_report(std::move(rows));
    return result;
}

void write_backtest_outputs(const BacktestResult& result, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const char* sub : {"trades", "equity", "trials", "models"}) fs::create_directories(dir / sub);

    {
        auto out = open_output(dir / "windows.csv");
        write_window_manifest(out, result.windows);
    }
    {
        auto out = open_output(dir / "per_window.csv");
        write_per_window_csv(out, result.report.per_window);
    }
    {
        auto out = open_output(dir / "aggregate.csv");
        write_aggregate_csv(out, result.report.aggregate);
    }
    {
        auto out = open_output(dir / "friedman.csv");
        write_friedman_csv(out, result.report);
    }

    for (const auto& w : result.outcomes) {
        const std::string prefix = fmt::format("w{:02}", w.split.window_id);
        for (const auto& o : w.outcomes) {
            auto trades = open_output(dir / "trades" / fmt::format("{}_{}.csv", prefix, o.label));
            write_trades_csv(trades, o.run.trades);
            auto equity = open_output(dir / "equity" / fmt::format("{}_{}.csv", prefix, o.label));
            write_equity_csv(equity, o.run.equity, kEquityPlotPoints);
        }
        if (w.theta_search) {
            auto out = open_output(dir / "trials" / fmt::format("{}_OPT_T.csv", prefix));
            write_trials_csv(out, w.theta_search->history);
        }
        if (w.pair_search) {
            auto out = open_output(dir / "trials" / fmt::format("{}_IDC.csv", prefix));
            write_trials_csv(out, w.pair_search->history);
        }
        if (w.regime_fit && w.regime_map) {
            auto out = open_output(dir / "models" / fmt::format("{}_ITA.txt", prefix));
            write_model(out, w.regime_fit->model, *w.regime_map);
        }
    }
}

BacktestReport rebuild_report(const std::filesystem::path& dir) {
    std::ifstream in(dir / "per_window.csv");
    if (!in) throw IoError(fmt::format("cannot open '{}'", (dir / "per_window.csv").string()));
    auto report = build_report(read_per_window_csv(in));
    {
        auto out = open_output(dir / "aggregate.csv");
        write_aggregate_csv(out, report.aggregate);
    }
    {
        auto out = open_output(dir / "friedman.csv");
        write_friedman_csv(out, report);
    }
    return report;
}

}  // namespace dcta
