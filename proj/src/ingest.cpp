#include "dcta/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace dcta {

namespace {

using std::chrono::days;
using std::chrono::milliseconds;
using std::chrono::months;
using std::chrono::sys_days;
using std::chrono::year_month;
using std::chrono::year_month_day;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_digits(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

// Splits at most `n` comma-separated fields; returns the number found.
std::size_t split_fields(std::string_view line, std::string_view* fields, std::size_t n) {
    std::size_t count = 0;
    while (count < n) {
        auto pos = line.find(',');
        fields[count++] = line.substr(0, pos);
        if (pos == std::string_view::npos) break;
        line.remove_prefix(pos + 1);
    }
    return count;
}

year_month month_of(Timestamp ts) {
    year_month_day ymd{std::chrono::floor<days>(ts)};
    return ymd.year() / ymd.month();
}

Timestamp month_start(year_month ym) {
    return Timestamp{sys_days{ym / 1}.time_since_epoch()};
}

}  // namespace

double mid_price(double bid, double ask) {
    if (!(bid > 0.0) || !(ask > 0.0)) {
        throw std::domain_error(fmt::format("mid_price: quotes must be positive (bid={}, ask={})", bid, ask));
    }
    return (bid + ask) / 2.0;
}

PriceSeries PriceSeries::slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size());
    begin = std::min(begin, end);
    PriceSeries out;
    out.instrument = instrument;
    out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    out.prices.assign(prices.begin() + static_cast<std::ptrdiff_t>(begin),
                      prices.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

Timestamp parse_timestamp(std::string_view text) {
    text = trim(text);
    // YYYYMMDD HHMMSSmmm
    if (text.size() != 18 || text[8] != ' ') {
        throw std::invalid_argument(fmt::format("bad timestamp '{}'", text));
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    if (!parse_digits(text.substr(0, 4), y) || !parse_digits(text.substr(4, 2), mo) ||
        !parse_digits(text.substr(6, 2), d) || !parse_digits(text.substr(9, 2), h) ||
        !parse_digits(text.substr(11, 2), mi) || !parse_digits(text.substr(13, 2), s) ||
        !parse_digits(text.substr(15, 3), ms)) {
        throw std::invalid_argument(fmt::format("bad timestamp '{}'", text));
    }
    year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                       std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
        throw std::invalid_argument(fmt::format("bad timestamp '{}'", text));
    }
    return Timestamp{sys_days{ymd}.time_since_epoch()} + std::chrono::hours{h} +
           std::chrono::minutes{mi} + std::chrono::seconds{s} + milliseconds{ms};
}

std::string format_timestamp(Timestamp ts) {
    auto day = std::chrono::floor<days>(ts);
    year_month_day ymd{day};
    auto ms = (ts - day).count();
    return fmt::format("{:04}{:02}{:02} {:02}{:02}{:02}{:03}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       ms / 3'600'000, (ms / 60'000) % 60, (ms / 1000) % 60, ms % 1000);
}

ParsedTicks parse_ticks(std::istream& in, std::string instrument) {
    if (!in) throw IoError("tick stream is not readable");

    ParsedTicks out;
    out.series.instrument = std::move(instrument);
    auto& summary = out.summary;

    std::string line;
    bool first_line = true;
    while (std::getline(in, line)) {
        std::string_view view = trim(line);
        if (view.empty()) continue;

        std::string_view fields[3];
        std::size_t n = split_fields(view, fields, 3);

        Timestamp ts;
        bool ts_ok = true;
        try {
            ts = parse_timestamp(fields[0]);
        } catch (const std::invalid_argument&) {
            ts_ok = false;
        }
        if (first_line && !ts_ok) {
            first_line = false;  // header
            continue;
        }
        first_line = false;
        ++summary.rows_read;

        double bid = 0.0, ask = 0.0;
        if (!ts_ok || n < 3 || !parse_double(fields[1], bid) || !parse_double(fields[2], ask) ||
            !(bid > 0.0) || !(ask > 0.0)) {
            ++summary.rows_rejected;
            continue;
        }
        if (!out.series.timestamps.empty() && ts < out.series.timestamps.back()) {
            ++summary.rows_dropped;
            continue;
        }
        out.series.timestamps.push_back(ts);
        out.series.prices.push_back(mid_price(bid, ask));
    }
    if (in.bad()) throw IoError("error while reading tick stream");
    if (out.series.empty()) {
        throw EmptySeriesError(fmt::format("no valid tick rows ({} read, {} rejected, {} dropped)",
                                           summary.rows_read, summary.rows_rejected, summary.rows_dropped));
    }
    return out;
}

ParsedTicks parse_ticks_file(const std::filesystem::path& path, std::string instrument) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return parse_ticks(in, std::move(instrument));
}

void write_series_csv(std::ostream& out, const PriceSeries& series) {
    out << "timestamp,bid,ask\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        auto ts = format_timestamp(series.timestamps[i]);
        out << fmt::format("{},{},{}\n", ts, series.prices[i], series.prices[i]);
    }
}

std::vector<WindowSplit> sliding_windows(const PriceSeries& series, int window_months, int stride_months,
                                         SplitRatio ratio) {
    if (series.empty()) throw std::domain_error("sliding_windows: empty series");
    if (window_months < 1 || stride_months < 1) {
        throw std::domain_error("sliding_windows: window and stride must be at least one month");
    }
    if (ratio.train + ratio.test == 0) throw std::domain_error("sliding_windows: bad split ratio");

    const year_month first = month_of(series.timestamps.front());
    const Timestamp data_end = month_start(month_of(series.timestamps.back()) + months{1});

    // Train length in months as the exact fraction window_months*train/(train+test).
    const unsigned parts = ratio.train + ratio.test;
    const long long train_num = static_cast<long long>(window_months) * ratio.train;
    const long long whole_months = train_num / parts;
    const long long rem = train_num % parts;

    std::vector<WindowSplit> windows;
    for (std::size_t k = 0;; ++k) {
        const year_month start_month = first + months{static_cast<long long>(k) * stride_months};
        const Timestamp start = month_start(start_month);
        const Timestamp end = month_start(start_month + months{window_months});
        if (end > data_end) break;

        const year_month split_month = start_month + months{whole_months};
        Timestamp split = month_start(split_month);
        if (rem != 0) {
            const auto month_len = month_start(split_month + months{1}) - split;
            split += milliseconds{month_len.count() * rem / parts};
        }

        auto lower = [&](Timestamp t) {
            return static_cast<std::size_t>(
                std::lower_bound(series.timestamps.begin(), series.timestamps.end(), t) -
                series.timestamps.begin());
        };
        WindowSplit w;
        w.window_id = k;
        w.window_start = start;
        w.window_end = end;
        w.train_end = split;
        w.train_range = {lower(start), lower(split)};
        w.test_range = {lower(split), lower(end)};
        windows.push_back(w);
    }
    return windows;
}

void write_window_manifest(std::ostream& out, const std::vector<WindowSplit>& windows) {
    out << "window_id,window_start,window_end,train_end\n";
    for (const auto& w : windows) {
        out << fmt::format("{},{},{},{}\n", w.window_id, format_timestamp(w.window_start),
                           format_timestamp(w.window_end), format_timestamp(w.train_end));
    }
}

}  // namespace dcta
