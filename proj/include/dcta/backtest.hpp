#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcta/bayes_opt.hpp"
#include "dcta/hmm.hpp"
#include "dcta/ingest.hpp"
#include "dcta/metrics.hpp"
#include "dcta/strategy.hpp"

namespace dcta {

struct BacktestConfig {
    int window_months = 2;
    int stride_months = 1;
    SplitRatio split{};
    SearchSpace space{};
    int boa_iters = 100;
    int boa_init = 10;
    std::uint64_t seed = 0;
    HmmFitOptions hmm{};
    std::vector<StrategyKind> strategies{StrategyKind::FT, StrategyKind::OPT_T, StrategyKind::IDC, StrategyKind::ITA};
    std::vector<double> fixed_thresholds{std::begin(kFixedThresholds), std::end(kFixedThresholds)};
    std::optional<RegimeLabel> force_regime;  // debug: replaces the fitted gate for ITA
    double initial_capital = kDefaultCapital;
    unsigned jobs = 0;                        // 0 = hardware concurrency
};

struct StrategyOutcome {
    std::string label;  // "FT@0.001", "OPT_T", "IDC", "ITA"
    StrategyKind kind = StrategyKind::FT;
    DcConfig config;
    StrategyRun run;
    double crr_pct = 0.0;
    double mdd_pct = 0.0;
};

struct WindowOutcome {
    WindowSplit split;
    std::vector<StrategyOutcome> outcomes;
    std::optional<OptimizeResult> theta_search;  // OPT_T
    std::optional<OptimizeResult> pair_search;   // IDC and ITA
    std::optional<HmmFit> regime_fit;            // ITA
    std::optional<RegimeMap> regime_map;
};

struct BacktestResult {
    std::vector<WindowSplit> windows;
    std::vector<WindowOutcome> outcomes;
    BacktestReport report;
};

/// Seed used for window `window_id`'s optimizer and HMM restarts.
std::uint64_t window_seed(std::uint64_t root, std::size_t window_id);

/// Training-half objective: CRR (percent) of the ungated strategy.
double training_crr(const PriceSeries& train, const DcConfig& config, double initial_capital = kDefaultCapital);

/// Optimize on each window's train half, fit the regime model for ITA, trade
/// the test half. Windows run on a worker pool; results are ordered by window.
/// A failing window throws std::runtime_error naming the window id.
BacktestResult run_backtest(const PriceSeries& series, const BacktestConfig& config);

/// Writes windows.csv, per_window.csv, aggregate.csv, friedman.csv and the
/// per-window trade, equity, trial and model dumps under `dir`.
void write_backtest_outputs(const BacktestResult& result, const std::filesystem::path& dir);

/// Rebuilds aggregate.csv and friedman.csv from `dir`/per_window.csv.
BacktestReport rebuild_report(const std::filesystem::path& dir);

}  // namespace dcta
