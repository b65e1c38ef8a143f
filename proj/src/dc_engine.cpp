#include "dcta/dc_engine.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace dcta {

void DcConfig::validate() const {
    if (!(theta > 0.0) || !(theta < alpha) || !(alpha <= 1.0)) {
        throw std::domain_error(
            fmt::format("invalid DC config theta={} alpha={} (need theta > 0, theta < alpha <= 1)", theta, alpha));
    }
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::UpturnDC: return "UpturnDC";
        case EventKind::DownturnDC: return "DownturnDC";
        case EventKind::UpOS: return "UpOS";
        case EventKind::DownOS: return "DownOS";
    }
    return "?";
}

std::string_view to_string(ExtremeKind kind) {
    return kind == ExtremeKind::Peak ? "peak" : "trough";
}

DcTracker::DcTracker(DcConfig config) : config_(config) { config_.validate(); }

DcSignal DcTracker::update(std::size_t index, double price) {
    if (!started_) {
        started_ = true;
        high_ = low_ = price;
        high_index_ = low_index_ = index;
        return DcSignal::None;
    }

    auto confirm_upturn = [&] {
        last_extreme_ = Extreme{low_index_, low_, ExtremeKind::Trough};
        trend_ = Trend::Up;
        high_ = price;
        high_index_ = index;
        return DcSignal::UpturnConfirmed;
    };
    auto confirm_downturn = [&] {
        last_extreme_ = Extreme{high_index_, high_, ExtremeKind::Peak};
        trend_ = Trend::Down;
        low_ = price;
        low_index_ = index;
        return DcSignal::DownturnConfirmed;
    };

    switch (trend_) {
        case Trend::Up:
            if (price <= high_ * config_.downturn_factor()) return confirm_downturn();
            if (high_ < price) {
                high_ = price;
                high_index_ = index;
                return DcSignal::NewHigh;
            }
            return DcSignal::None;
        case Trend::Down:
            if (price >= low_ * config_.upturn_factor()) return confirm_upturn();
            if (low_ > price) {
                low_ = price;
                low_index_ = index;
                return DcSignal::NewLow;
            }
            return DcSignal::None;
        case Trend::Undetermined:
            if (price >= low_ * config_.upturn_factor()) return confirm_upturn();
            if (price <= high_ * config_.downturn_factor()) return confirm_downturn();
            if (high_ < price) {
                high_ = price;
                high_index_ = index;
                return DcSignal::NewHigh;
            }
            if (low_ > price) {
                low_ = price;
                low_index_ = index;
                return DcSignal::NewLow;
            }
            return DcSignal::None;
    }
    return DcSignal::None;
}

std::vector<std::size_t> DcSummary::confirmations() const {
    std::vector<std::size_t> out;
    for (const auto& e : events) {
        if (e.kind == EventKind::UpturnDC || e.kind == EventKind::DownturnDC) out.push_back(e.end_index);
    }
    return out;
}

DcSummary summarize(std::span<const double> prices, const DcConfig& config) {
    if (prices.empty()) throw std::domain_error("summarize: empty price series");
    DcTracker tracker(config);
    DcSummary out;

    std::optional<std::size_t> last_confirmation;
    for (std::size_t t = 0; t < prices.size(); ++t) {
        const DcSignal signal = tracker.update(t, prices[t]);
        if (signal != DcSignal::UpturnConfirmed && signal != DcSignal::DownturnConfirmed) continue;

        const Extreme& ext = *tracker.last_extreme();
        const bool up = signal == DcSignal::UpturnConfirmed;

        // The overshoot of the previous trend runs from just after its
        // confirmation to just before the extreme that starts this event.
        if (last_confirmation && ext.index >= *last_confirmation + 2) {
            const std::size_t os_start = *last_confirmation + 1;
            const std::size_t os_end = ext.index - 1;
            out.events.push_back({up ? EventKind::DownOS : EventKind::UpOS, os_start, os_end, prices[os_start],
                                  prices[os_end]});
        }
        out.events.push_back({up ? EventKind::UpturnDC : EventKind::DownturnDC, ext.index, t, ext.price, prices[t]});
        out.extremes.push_back(ext);
        last_confirmation = t;
    }
    return out;
}

std::optional<RdcPoint> rdc_point(const Extreme& from, const Extreme& to, Timestamp from_ts, Timestamp to_ts) {
    const double seconds = std::chrono::duration<double>(to_ts - from_ts).count();
    if (!(seconds > 0.0)) return std::nullopt;
    RdcPoint p;
    p.from_extreme = from.index;
    p.to_extreme = to.index;
    p.interval_seconds = seconds;
    p.value = std::abs(to.price - from.price) / (from.price * seconds);
    return p;
}

RdcSeries rdc_series(std::span<const Extreme> extremes, std::span<const Timestamp> timestamps) {
    if (extremes.size() < 2) throw std::domain_error("rdc_series: need at least two extremes");
    RdcSeries out;
    for (std::size_t i = 0; i + 1 < extremes.size(); ++i) {
        const auto& a = extremes[i];
        const auto& b = extremes[i + 1];
        if (a.kind == b.kind) throw std::domain_error("rdc_series: extremes do not alternate");
        if (b.index >= timestamps.size()) throw std::out_of_range("rdc_series: extreme index beyond timestamps");
        if (auto p = rdc_point(a, b, timestamps[a.index], timestamps[b.index])) {
            out.points.push_back(*p);
        } else {
            ++out.skipped;
        }
    }
    return out;
}

std::vector<double> rdc_values(const RdcSeries& series) {
    std::vector<double> out;
    out.reserve(series.points.size());
    for (const auto& p : series.points) out.push_back(p.value);
    return out;
}

void write_event_csv(std::ostream& out, std::span<const DcEventRecord> events) {
    out << "kind,start_index,end_index,start_price,end_price\n";
    for (const auto& e : events) {
        out << fmt::format("{},{},{},{},{}\n", to_string(e.kind), e.start_index, e.end_index, e.start_price,
                           e.end_price);
    }
}

void write_rdc_csv(std::ostream& out, std::span<const RdcPoint> points) {
    out << "from_index,to_index,interval_seconds,value\n";
    for (const auto& p : points) {
        out << fmt::format("{},{},{},{}\n", p.from_extreme, p.to_extreme, p.interval_seconds, p.value);
    }
}

}  // namespace dcta
