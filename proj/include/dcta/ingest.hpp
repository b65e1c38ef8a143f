#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dcta {

// UTC instant, millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptySeriesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tick {
    Timestamp timestamp;
    double bid = 0.0;
    double ask = 0.0;
};

/// Mid-price of a quote pair. Throws std::domain_error on non-positive quotes.
double mid_price(double bid, double ask);

/// A mid-price stream for one instrument. `timestamps` and `prices` are
/// parallel arrays; timestamps are non-decreasing.
struct PriceSeries {
    std::string instrument;
    std::vector<Timestamp> timestamps;
    std::vector<double> prices;

    std::size_t size() const noexcept { return prices.size(); }
    bool empty() const noexcept { return prices.empty(); }

    /// Copy of the half-open index range [begin, end).
    PriceSeries slice(std::size_t begin, std::size_t end) const;
};

struct ParseSummary {
    std::size_t rows_read = 0;      // data rows seen (header excluded)
    std::size_t rows_rejected = 0;  // malformed or non-positive quotes
    std::size_t rows_dropped = 0;   // out-of-order timestamps

    std::size_t rows_accepted() const noexcept { return rows_read - rows_rejected - rows_dropped; }
};

struct ParsedTicks {
    PriceSeries series;
    ParseSummary summary;
};

// Tick CSV: `timestamp,bid,ask[,...]`, timestamp as `YYYYMMDD HHMMSSmmm` UTC.
// The header row is optional. Extra trailing columns are ignored.
ParsedTicks parse_ticks(std::istream& in, std::string instrument);
ParsedTicks parse_ticks_file(const std::filesystem::path& path, std::string instrument);

/// Writes `timestamp,bid,ask` rows with bid = ask = mid, so that parsing the
/// output reproduces the series exactly.
void write_series_csv(std::ostream& out, const PriceSeries& series);

/// Parses `YYYYMMDD HHMMSSmmm`. Throws std::invalid_argument when malformed.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    std::size_t size() const noexcept { return end - begin; }
    bool empty() const noexcept { return begin == end; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct WindowSplit {
    std::size_t window_id = 0;
    Timestamp window_start;
    Timestamp window_end;  // exclusive
    Timestamp train_end;   // first instant of the test half
    IndexRange train_range;
    IndexRange test_range;
};

struct SplitRatio {
    unsigned train = 1;
    unsigned test = 1;
};

/// Calendar-month sliding windows anchored at the first tick's month.
/// A window is kept only if it ends no later than the end of the last tick's
/// month. The train/test boundary sits at the given fraction of the window's
/// length measured in calendar months.
std::vector<WindowSplit> sliding_windows(const PriceSeries& series, int window_months = 2,
                                         int stride_months = 1, SplitRatio ratio = {});

/// Window manifest CSV: `window_id,window_start,window_end,train_end`.
void write_window_manifest(std::ostream& out, const std::vector<WindowSplit>& windows);

}  // namespace dcta
