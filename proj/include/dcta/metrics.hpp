#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dcta {

struct EquityCurve;

/// Cumulative return in percent: (final - initial) / initial * 100.
double crr(double initial, double final_value);
double crr(const EquityCurve& equity);

/// Maximum drawdown in percent: the largest (P_x - P_y) / P_x over x < y,
/// 0 for a curve that never falls. One pass with a running maximum.
double mdd(std::span<const double> values);
double mdd(const EquityCurve& equity);

/// Ranks within one dataset, 1 = best, ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values, bool higher_is_better);

struct FriedmanResult {
    std::vector<double> average_ranks;  // one per strategy
    double statistic = 0.0;             // tie-corrected chi-square, k - 1 dof
    double p_value = 1.0;
    double critical_value = 0.0;        // chi-square quantile at the 0.05 level
};

/// `results[s][d]` is strategy s on dataset d. Needs >= 2 strategies, >= 2
/// datasets and a finite value in every cell.
FriedmanResult friedman_ranks(const std::vector<std::vector<double>>& results, bool higher_is_better);

struct WindowRow {
    std::size_t window_id = 0;
    std::string strategy;  // FT rows carry their threshold as "FT@0.001"
    double crr_pct = 0.0;
    double mdd_pct = 0.0;
    std::size_t trades = 0;
};

struct AggregateRow {
    std::string strategy;
    double mean_crr_pct = 0.0;
    double chained_crr_pct = 0.0;
    double mean_mdd_pct = 0.0;
    std::optional<double> avg_rank;  // Friedman average CRR rank
};

struct BacktestReport {
    std::vector<WindowRow> per_window;
    std::vector<AggregateRow> aggregate;
    std::optional<FriedmanResult> friedman_crr;
    std::optional<FriedmanResult> friedman_mdd;
    std::vector<std::string> ranked_strategies;  // order of the Friedman vectors
};

/// Compounds per-window returns: (prod(1 + r_i / 100) - 1) * 100.
double chain_returns(std::span<const double> crr_pcts);

/// Per-window rows in; aggregates out. Strategy families are reported in the
/// order FT, OPT_T, IDC, ITA, followed by the individual FT thresholds. The
/// FT family row averages its thresholds within each window; its chained CRR
/// is the mean of the per-threshold chained CRRs.
BacktestReport build_report(std::vector<WindowRow> rows);

// `window_id,strategy,crr_pct,mdd_pct,trades`
void write_per_window_csv(std::ostream& out, std::span<const WindowRow> rows);
std::vector<WindowRow> read_per_window_csv(std::istream& in);
// `strategy,mean_crr_pct,chained_crr_pct,mean_mdd_pct,avg_rank`
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows);
// `metric,strategy,avg_rank` rows followed by the test statistics
void write_friedman_csv(std::ostream& out, const BacktestReport& report);

}  // namespace dcta
