#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dcta/ingest.hpp"

namespace dcta {

/// Asymmetric directional-change thresholds. An upturn is confirmed by a rise
/// of `theta` from the running low, a downturn by a fall of `alpha * theta`
/// from the running high.
struct DcConfig {
    double theta = 0.001;
    double alpha = 1.0;

    /// Throws std::domain_error unless theta > 0 and theta < alpha <= 1.
    void validate() const;

    double upturn_factor() const noexcept { return 1.0 + theta; }
    double downturn_factor() const noexcept { return 1.0 - alpha * theta; }
};

enum class Trend { Undetermined, Up, Down };
enum class ExtremeKind { Peak, Trough };
enum class EventKind { UpturnDC, DownturnDC, UpOS, DownOS };

std::string_view to_string(EventKind kind);
std::string_view to_string(ExtremeKind kind);

struct Extreme {
    std::size_t index = 0;
    double price = 0.0;
    ExtremeKind kind = ExtremeKind::Trough;

    friend bool operator==(const Extreme&, const Extreme&) = default;
};

struct DcEventRecord {
    EventKind kind = EventKind::UpturnDC;
    std::size_t start_index = 0;
    std::size_t end_index = 0;
    double start_price = 0.0;
    double end_price = 0.0;

    friend bool operator==(const DcEventRecord&, const DcEventRecord&) = default;
};

enum class DcSignal { None, UpturnConfirmed, DownturnConfirmed, NewHigh, NewLow };

// Incremental DC state machine, one price at a time.
//
// Before the first confirmation the trend is undetermined and both the running
// high and low are tracked from the first price, so the first confirmed event
// may go either way. Afterwards the machine alternates: in an uptrend only the
// high moves (strict new highs) until a downturn confirms at
// p <= high * (1 - alpha*theta); in a downtrend only the low moves until an
// upturn confirms at p >= low * (1 + theta). At a confirmation the opposite
// running extreme becomes the confirmed extreme and the other one restarts at
// the confirming price.
class DcTracker {
public:
    explicit DcTracker(DcConfig config);

    DcSignal update(std::size_t index, double price);

    const DcConfig& config() const noexcept { return config_; }
    Trend trend() const noexcept { return trend_; }
    bool started() const noexcept { return started_; }
    double high() const noexcept { return high_; }
    double low() const noexcept { return low_; }
    std::size_t high_index() const noexcept { return high_index_; }
    std::size_t low_index() const noexcept { return low_index_; }

    /// Extreme fixed by the most recent confirmation: the trough for an
    /// upturn, the peak for a downturn.
    const std::optional<Extreme>& last_extreme() const noexcept { return last_extreme_; }

private:
    DcConfig config_;
    Trend trend_ = Trend::Undetermined;
    bool started_ = false;
    double high_ = 0.0;
    double low_ = 0.0;
    std::size_t high_index_ = 0;
    std::size_t low_index_ = 0;
    std::optional<Extreme> last_extreme_;
};

struct DcSummary {
    std::vector<DcEventRecord> events;
    std::vector<Extreme> extremes;

    /// Indices at which a DC event was confirmed, in order.
    std::vector<std::size_t> confirmations() const;
};

/// Decomposes a price sequence into DC/OS events and confirmed extremes in one
/// pass. The trend still open at the end of the data produces no event.
DcSummary summarize(std::span<const double> prices, const DcConfig& config);

struct RdcPoint {
    double value = 0.0;             // 1/seconds
    std::size_t from_extreme = 0;   // series index of the earlier extreme
    std::size_t to_extreme = 0;
    double interval_seconds = 0.0;
};

struct RdcSeries {
    std::vector<RdcPoint> points;
    std::size_t skipped = 0;  // pairs sharing a timestamp
};

/// |to - from| / (from * T), T in seconds. Empty when T is not positive.
std::optional<RdcPoint> rdc_point(const Extreme& from, const Extreme& to, Timestamp from_ts, Timestamp to_ts);

RdcSeries rdc_series(std::span<const Extreme> extremes, std::span<const Timestamp> timestamps);

std::vector<double> rdc_values(const RdcSeries& series);

// `kind,start_index,end_index,start_price,end_price`
void write_event_csv(std::ostream& out, std::span<const DcEventRecord> events);
// `from_index,to_index,interval_seconds,value`
void write_rdc_csv(std::ostream& out, std::span<const RdcPoint> points);

}  // namespace dcta
