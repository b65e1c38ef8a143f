#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dcta/ingest.hpp"

namespace dcta {

// Geometric random walk with planted high-volatility bursts.
struct SyntheticSpec {
    std::uint64_t seed = 0;
    int months = 10;
    int start_year = 2019;
    unsigned start_month = 1;
    double start_price = 1.1;
    double tick_seconds = 60.0;     // mean of the exponential inter-arrival time
    double daily_vol = 0.004;       // log-price volatility per day, calm regime
    double daily_drift = 0.0;       // log-price drift per day, calm regime
    double burst_fraction = 0.2;    // share of calendar time spent in bursts
    double burst_vol_mult = 4.0;
    double burst_daily_drift = -0.02;
    double min_burst_hours = 6.0;
    double max_burst_hours = 36.0;
    double spread = 0.0002;         // quoted ask - bid, price units
};

struct SyntheticTick {
    Timestamp timestamp;
    double bid = 0.0;
    double ask = 0.0;
    bool burst = false;
};

/// Deterministic given the spec. Quotes are rounded to 5 decimals.
std::vector<SyntheticTick> generate_synthetic(const SyntheticSpec& spec);

// `timestamp,bid,ask,burst`
void write_synthetic_csv(std::ostream& out, const std::vector<SyntheticTick>& ticks);

}  // namespace dcta
