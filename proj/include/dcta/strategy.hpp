#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcta/dc_engine.hpp"
#include "dcta/hmm.hpp"
#include "dcta/ingest.hpp"

namespace dcta {

// FT: fixed theta, alpha = 1. OPT_T: optimized theta, alpha = 1.
// IDC: optimized (theta, alpha). ITA: IDC plus regime gating on entries.
enum class StrategyKind { FT, OPT_T, IDC, ITA };

std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy_kind(std::string_view text);

inline constexpr double kDefaultCapital = 10'000.0;
inline constexpr double kFixedThresholds[] = {0.0003, 0.0005, 0.0008, 0.001, 0.0015, 0.002, 0.0025, 0.003};

enum class Side { Buy, Sell };

std::string_view to_string(Side side);

// Rule that fired a trade. Liquidation at the end of the data is rule 0.
enum class TradeRule : int { EndOfData = 0, UpturnEntry = 1, ProfitTarget = 2, DownturnExit = 3 };

struct TradeEntry {
    Timestamp timestamp;
    std::size_t index = 0;
    Side side = Side::Buy;
    double price = 0.0;
    double capital_after = 0.0;
    TradeRule rule = TradeRule::UpturnEntry;
    RegimeLabel regime = RegimeLabel::Normal;  // label seen at the entry decision

    friend bool operator==(const TradeEntry&, const TradeEntry&) = default;
};

struct EquityCurve {
    double initial_capital = kDefaultCapital;
    std::vector<Timestamp> timestamps;
    std::vector<double> values;

    bool empty() const noexcept { return values.empty(); }
    double final_value() const noexcept { return values.empty() ? initial_capital : values.back(); }
};

/// Answers "which regime are we in" from the R_DC history seen so far.
class RegimeGate {
public:
    static RegimeGate always(RegimeLabel label);
    static RegimeGate from_model(GaussianHmm model);

    RegimeLabel query(std::span<const double> rdc_history) const;

    const GaussianHmm* model() const noexcept { return model_ ? &*model_ : nullptr; }
    const RegimeMap& regime_map() const noexcept { return map_; }

private:
    std::optional<GaussianHmm> model_;
    RegimeMap map_{};
    RegimeLabel forced_ = RegimeLabel::Normal;
};

struct StrategyRun {
    std::vector<TradeEntry> trades;
    EquityCurve equity;
    std::vector<double> rdc_history;  // input history plus values formed during the run
    std::size_t regime_queries = 0;
    double min_units = 0.0;           // smallest position held at any tick
};

/// Long-only all-in/all-out DC trading over `series`.
///
/// Entry on an upturn confirmation when flat and the regime is Normal
/// (only ITA consults `gate`; the baselines always see Normal). Exit on a new
/// high once high >= (1 + 2*theta) * low, or on a downturn confirmation.
/// Fills are at the triggering price with no costs. A position still open at
/// the last tick is closed there as rule 0. R_DC values from extreme pairs
/// confirmed during the run are appended to the history before any query.
StrategyRun run_strategy(const PriceSeries& series, const DcConfig& config, StrategyKind kind,
                         const RegimeGate* gate = nullptr, std::vector<double> rdc_history = {},
                         double initial_capital = kDefaultCapital);

struct FtResult {
    double theta = 0.0;
    StrategyRun run;
    double crr_pct = 0.0;
    double mdd_pct = 0.0;
};

struct FtSuite {
    std::vector<FtResult> results;  // ascending theta
    double average_crr_pct = 0.0;
};

FtSuite run_ft_suite(const PriceSeries& series, std::span<const double> thresholds = kFixedThresholds,
                     double initial_capital = kDefaultCapital);

// `timestamp,side,price,capital_after,rule`
void write_trades_csv(std::ostream& out, std::span<const TradeEntry> trades);
// `timestamp,capital`
/// With `max_points` > 0 the curve is thinned to an even stride; the last point is always kept.
void write_equity_csv(std::ostream& out, const EquityCurve& equity, std::size_t max_points = 0);

}  // namespace dcta
