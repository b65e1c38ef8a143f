#include "dcta/strategy.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "dcta/metrics.hpp"

namespace dcta {

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::FT: return "FT";
        case StrategyKind::OPT_T: return "OPT_T";
        case StrategyKind::IDC: return "IDC";
        case StrategyKind::ITA: return "ITA";
    }
    return "?";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view text) {
    for (auto k : {StrategyKind::FT, StrategyKind::OPT_T, StrategyKind::IDC, StrategyKind::ITA}) {
        const auto name = to_string(k);
        if (std::ranges::equal(text, name, [](char a, char b) { return std::toupper(static_cast<unsigned char>(a)) == b; })) {
            return k;
        }
    }
    return std::nullopt;
}

std::string_view to_string(Side side) { return side == Side::Buy ? "BUY" : "SELL"; }

RegimeGate RegimeGate::always(RegimeLabel label) {
    RegimeGate g;
    g.forced_ = label;
    return g;
}

RegimeGate RegimeGate::from_model(GaussianHmm model) {
    RegimeGate g;
    g.map_ = label_regimes(model);
    g.model_ = std::move(model);
    return g;
}

RegimeLabel RegimeGate::query(std::span<const double> rdc_history) const {
    if (!model_) return forced_;
    return predict_regime(*model_, map_, rdc_history);
}

StrategyRun run_strategy(const PriceSeries& series, const DcConfig& config, StrategyKind kind,
                         const RegimeGate* gate, std::vector<double> rdc_history, double initial_capital) {
    config.validate();
    if (!(initial_capital > 0.0)) throw std::domain_error("run_strategy: initial capital must be positive");
    const bool gated = kind == StrategyKind::ITA;
    if (gated && gate == nullptr) throw std::domain_error("run_strategy: ITA needs a regime gate");
    if (gated && gate->model() && rdc_history.empty()) {
        throw std::domain_error("run_strategy: ITA needs a non-empty R_DC history");
    }

    StrategyRun run;
    run.rdc_history = std::move(rdc_history);
    run.equity.initial_capital = initial_capital;
    run.equity.timestamps.reserve(series.size());
    run.equity.values.reserve(series.size());

    DcTracker tracker(config);
    std::optional<Extreme> previous_extreme;
    double cash = initial_capital;
    double units = 0.0;

    auto record_extreme = [&](const Extreme& ext) {
        if (previous_extreme) {
            auto p = rdc_point(*previous_extreme, ext, series.timestamps[previous_extreme->index],
                               series.timestamps[ext.index]);
            if (p) run.rdc_history.push_back(p->value);
        }
        previous_extreme = ext;
    };
    auto buy = [&](std::size_t t, RegimeLabel regime) {
        const double price = series.prices[t];
        units = cash / price;
        cash = 0.0;
        run.trades.push_back({series.timestamps[t], t, Side::Buy, price, units * price, TradeRule::UpturnEntry, regime});
    };
    auto sell = [&](std::size_t t, TradeRule rule) {
        const double price = series.prices[t];
        cash = units * price;
        units = 0.0;
        run.trades.push_back({series.timestamps[t], t, Side::Sell, price, cash, rule, RegimeLabel::Normal});
    };

    for (std::size_t t = 0; t < series.size(); ++t) {
        const double price = series.prices[t];
        switch (tracker.update(t, price)) {
            case DcSignal::UpturnConfirmed: {
                record_extreme(*tracker.last_extreme());
                RegimeLabel regime = RegimeLabel::Normal;
                if (gated) {
                    regime = gate->query(run.rdc_history);
                    ++run.regime_queries;
                }
                if (regime == RegimeLabel::Normal && units == 0.0) buy(t, regime);
                break;
            }
            case DcSignal::DownturnConfirmed:
                record_extreme(*tracker.last_extreme());
                if (units > 0.0) sell(t, TradeRule::DownturnExit);
                break;
            case DcSignal::NewHigh:
                if (tracker.trend() == Trend::Up && units > 0.0 &&
                    tracker.high() >= (1.0 + 2.0 * config.theta) * tracker.low()) {
                    sell(t, TradeRule::ProfitTarget);
                }
                break;
            case DcSignal::NewLow:
            case DcSignal::None:
                break;
        }
        run.min_units = std::min(run.min_units, units);
        run.equity.timestamps.push_back(series.timestamps[t]);
        run.equity.values.push_back(cash + units * price);
    }
    if (units > 0.0) sell(series.size() - 1, TradeRule::EndOfData);
    return run;
}

FtSuite run_ft_suite(const PriceSeries& series, std::span<const double> thresholds, double initial_capital) {
    if (series.empty()) throw std::domain_error("run_ft_suite: empty series");
    std::vector<double> sorted(thresholds.begin(), thresholds.end());
    std::sort(sorted.begin(), sorted.end());

    FtSuite suite;
    double total = 0.0;
    for (double theta : sorted) {
        FtResult r;
        r.theta = theta;
        r.run = run_strategy(series, DcConfig{theta, 1.0}, StrategyKind::FT, nullptr, {}, initial_capital);
        r.crr_pct = crr(r.run.equity);
        r.mdd_pct = mdd(r.run.equity);
        total += r.crr_pct;
        suite.results.push_back(std::move(r));
    }
    if (!suite.results.empty()) suite.average_crr_pct = total / static_cast<double>(suite.results.size());
    return suite;
}

void write_trades_csv(std::ostream& out, std::span<const TradeEntry> trades) {
    out << "timestamp,side,price,capital_after,rule\n";
    for (const auto& t : trades) {
        out << fmt::format("{},{},{},{},{}\n", format_timestamp(t.timestamp), to_string(t.side), t.price,
                           t.capital_after, static_cast<int>(t.rule));
    }
}

void write_equity_csv(std::ostream& out, const EquityCurve& equity, std::size_t max_points) {
    out << "timestamp,capital\n";
    const std::size_t n = equity.values.size();
    const std::size_t m = std::max<std::size_t>(max_points, 2);
    const std::size_t stride = max_points == 0 || n <= m ? 1 : (n - 1 + m - 2) / (m - 1);
    for (std::size_t i = 0; i < n; i += stride) {
        if (i + stride >= n) break;
        out << fmt::format("{},{}\n", format_timestamp(equity.timestamps[i]), equity.values[i]);
    }
    if (n > 0) out << fmt::format("{},{}\n", format_timestamp(equity.timestamps[n - 1]), equity.values[n - 1]);
}

}  // namespace dcta
