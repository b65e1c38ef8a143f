#include "dcta/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace dcta {

namespace {

constexpr double kMsPerDay = 86'400'000.0;
constexpr double kMsPerHour = 3'600'000.0;

struct Segment {
    Timestamp end;
    bool burst = false;
};

double round5(double x) { return std::round(x * 1e5) / 1e5; }

// Calm gaps and bursts laid out back to back across [start, end).
std::vector<Segment> plan_segments(const SyntheticSpec& spec, Timestamp start, Timestamp end, std::mt19937_64& rng) {
    const double total_ms = static_cast<double>((end - start).count());
    const double burst_budget = std::clamp(spec.burst_fraction, 0.0, 1.0) * total_ms;

    std::vector<double> bursts;
    std::uniform_real_distribution<double> burst_len(spec.min_burst_hours * kMsPerHour, spec.max_burst_hours * kMsPerHour);
    for (double used = 0.0; used < burst_budget;) {
        const double len = std::min(burst_len(rng), burst_budget - used);
        bursts.push_back(len);
        used += len;
    }
    std::shuffle(bursts.begin(), bursts.end(), rng);

    std::exponential_distribution<double> weight(1.0);
    std::vector<double> gaps(bursts.size() + 1);
    double weight_sum = 0.0;
    for (auto& g : gaps) weight_sum += (g = weight(rng));
    const double calm_total = total_ms - burst_budget;
    for (auto& g : gaps) g = calm_total * g / weight_sum;

    std::vector<Segment> segments;
    double cursor = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        cursor += gaps[i];
        segments.push_back({start + std::chrono::milliseconds{std::llround(cursor)}, false});
        if (i < bursts.size()) {
            cursor += bursts[i];
            segments.push_back({start + std::chrono::milliseconds{std::llround(cursor)}, true});
        }
    }
    segments.back().end = end;
    return segments;
}

}  // namespace

std::vector<SyntheticTick> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.months < 1) throw std::domain_error("generate_synthetic: months must be at least 1");
    if (!(spec.tick_seconds > 0.0) || !(spec.start_price > 0.0)) {
        throw std::domain_error("generate_synthetic: tick spacing and start price must be positive");
    }
    using namespace std::chrono;
    const year_month first{year{spec.start_year}, month{spec.start_month}};
    const Timestamp start{sys_days{first / 1}.time_since_epoch()};
    const Timestamp end{sys_days{(first + months{spec.months}) / 1}.time_since_epoch()};

    std::mt19937_64 rng(spec.seed);
    const auto segments = plan_segments(spec, start, end, rng);

    std::exponential_distribution<double> spacing(1.0 / (spec.tick_seconds * 1000.0));
    std::normal_distribution<double> shock(0.0, 1.0);

    std::vector<SyntheticTick> ticks;
    ticks.reserve(static_cast<std::size_t>(static_cast<double>((end - start).count()) / (spec.tick_seconds * 1000.0) * 1.1));
    double log_price = std::log(spec.start_price);
    Timestamp t = start;
    std::size_t seg = 0;
    for (;;) {
        const auto step = std::max<long long>(1, std::llround(spacing(rng)));
        t += milliseconds{step};
        if (t >= end) break;
        while (segments[seg].end <= t) ++seg;
        const bool burst = segments[seg].burst;

        const double dt_days = static_cast<double>(step) / kMsPerDay;
        const double vol = spec.daily_vol * (burst ? spec.burst_vol_mult : 1.0);
        const double drift = burst ? spec.burst_daily_drift : spec.daily_drift;
        log_price += drift * dt_days + vol * std::sqrt(dt_days) * shock(rng);

        const double mid = std::exp(log_price);
        ticks.push_back({t, round5(mid - spec.spread / 2.0), round5(mid + spec.spread / 2.0), burst});
    }
    return ticks;
}

void write_synthetic_csv(std::ostream& out, const std::vector<SyntheticTick>& ticks) {
    out << "timestamp,bid,ask,burst\n";
    for (const auto& t : ticks) {
        out << fmt::format("{},{:.5f},{:.5f},{}\n", format_timestamp(t.timestamp), t.bid, t.ask, t.burst ? 1 : 0);
    }
}

}  // namespace dcta
