#include <doctest.h>

#include <sstream>

#include "dcta/ingest.hpp"
#include "helpers.hpp"

using namespace dcta;
using testing::at;

TEST_CASE("mid_price is the average of the quotes") {
    CHECK(mid_price(1.10, 1.12) == doctest::Approx(1.11).epsilon(1e-15));
    CHECK(mid_price(1.0, 1.0) == 1.0);
    CHECK(mid_price(1.2345, 1.2347) == doctest::Approx(1.2346).epsilon(1e-15));
    CHECK_THROWS_AS(mid_price(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(mid_price(1.0, -1.0), std::domain_error);
}

TEST_CASE("timestamps round-trip at millisecond resolution") {
    const auto ts = parse_timestamp("20190701 000000123");
    CHECK(ts == at(2019, 7, 1) + std::chrono::milliseconds{123});
    CHECK(format_timestamp(ts) == "20190701 000000123");
    CHECK(format_timestamp(parse_timestamp("20201231 235959999")) == "20201231 235959999");
    CHECK_THROWS_AS(parse_timestamp("2019-07-01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_timestamp("20191301 000000000"), std::invalid_argument);
}

TEST_CASE("a single row yields one tick with its mid price") {
    std::istringstream in("20190701 000000123,1.10000,1.10020\n");
    const auto parsed = parse_ticks(in, "EURUSD");
    REQUIRE(parsed.series.size() == 1);
    CHECK(parsed.series.prices[0] == doctest::Approx(1.10010).epsilon(1e-15));
    CHECK(parsed.series.instrument == "EURUSD");
    CHECK(parsed.summary.rows_read == 1);
}

TEST_CASE("empty input is an empty-series error") {
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_ticks(empty, "X"), EmptySeriesError);
    std::istringstream header_only("timestamp,bid,ask\n");
    CHECK_THROWS_AS(parse_ticks(header_only, "X"), EmptySeriesError);
    std::istringstream all_bad("20190701 000000000,abc,1.1\n20190701 000000001,-1,1.1\n");
    CHECK_THROWS_AS(parse_ticks(all_bad, "X"), EmptySeriesError);
}

TEST_CASE("out-of-order rows are dropped and counted") {
    std::istringstream in(
        "20190701 000001000,1.1,1.1\n"
        "20190701 000000000,1.2,1.2\n"
        "20190701 000002000,1.3,1.3\n");
    const auto parsed = parse_ticks(in, "X");
    CHECK(parsed.series.size() == 2);
    CHECK(parsed.summary.rows_dropped == 1);
    CHECK(parsed.series.prices[1] == doctest::Approx(1.3));
}

TEST_CASE("malformed rows are rejected and parsing continues") {
    std::istringstream in(
        "timestamp,bid,ask\n"
        "20190701 000000000,1.1,1.1\n"
        "20190701 000000500,nan?,1.1\n"
        "garbage\n"
        "20190701 000001000,0,1.1\n"
        "20190701 000002000,1.2,1.2,extra,columns\n");
    const auto parsed = parse_ticks(in, "X");
    CHECK(parsed.series.size() == 2);
    CHECK(parsed.summary.rows_read == 5);
    CHECK(parsed.summary.rows_rejected == 3);
    CHECK(parsed.summary.rows_accepted() == 2);
}

TEST_CASE("equal timestamps are kept") {
    std::istringstream in("20190701 000000000,1.1,1.1\n20190701 000000000,1.2,1.2\n");
    CHECK(parse_ticks(in, "X").series.size() == 2);
}

TEST_CASE("missing file is an I/O error") {
    CHECK_THROWS_AS(parse_ticks_file("/nonexistent/ticks.csv", "X"), IoError);
}

TEST_CASE("series CSV round-trips exactly") {
    auto s = testing::series_of({1.1, 1.10001, 0.987654321, 1.5});
    std::stringstream buf;
    write_series_csv(buf, s);
    const auto back = parse_ticks(buf, "TEST").series;
    CHECK(back.timestamps == s.timestamps);
    CHECK(back.prices == s.prices);
}

namespace {

// One tick at noon every day between the two dates inclusive.
PriceSeries daily(Timestamp first, Timestamp last) {
    PriceSeries s;
    for (auto t = first + std::chrono::hours{12}; t <= last + std::chrono::hours{12}; t += std::chrono::hours{24}) {
        s.timestamps.push_back(t);
        s.prices.push_back(1.0);
    }
    return s;
}

}  // namespace

TEST_CASE("22 months of data give 21 two-month windows") {
    const auto s = daily(at(2019, 1, 1), at(2020, 10, 31));
    const auto w = sliding_windows(s);
    REQUIRE(w.size() == 21);
    CHECK(w.front().window_start == at(2019, 1, 1));
    CHECK(w.front().window_end == at(2019, 3, 1));
    CHECK(w.back().window_start == at(2020, 9, 1));
    CHECK(w.back().window_end == at(2020, 11, 1));
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i].window_id == i);
}

TEST_CASE("one month of data gives no window") {
    CHECK(sliding_windows(daily(at(2019, 3, 1), at(2019, 3, 31))).empty());
}

TEST_CASE("two months give one window split at the second month") {
    const auto s = daily(at(2019, 1, 1), at(2019, 2, 28));
    const auto w = sliding_windows(s);
    REQUIRE(w.size() == 1);
    CHECK(w[0].train_end == at(2019, 2, 1));
    CHECK(s.timestamps[w[0].test_range.begin] == at(2019, 2, 1) + std::chrono::hours{12});
    CHECK(w[0].train_range.size() == 31);
    CHECK(w[0].test_range.size() == 28);
}

TEST_CASE("train and test ranges partition the ticks inside each window") {
    const auto s = testing::synthetic_series({.seed = 5, .months = 5, .tick_seconds = 600.0});
    for (const auto& w : sliding_windows(s)) {
        CHECK(w.train_range.end == w.test_range.begin);
        CHECK(w.train_range.begin <= w.train_range.end);
        std::size_t inside = 0;
        for (auto t : s.timestamps) inside += t >= w.window_start && t < w.window_end;
        CHECK(w.train_range.size() + w.test_range.size() == inside);
        for (auto i = w.train_range.begin; i < w.train_range.end; ++i) CHECK(s.timestamps[i] < w.train_end);
        for (auto i = w.test_range.begin; i < w.test_range.end; ++i) {
            CHECK(s.timestamps[i] >= w.train_end);
            CHECK(s.timestamps[i] < w.window_end);
        }
    }
}

TEST_CASE("invalid window arguments are rejected") {
    const auto s = daily(at(2019, 1, 1), at(2019, 6, 30));
    CHECK_THROWS_AS(sliding_windows(s, 0, 1), std::domain_error);
    CHECK_THROWS_AS(sliding_windows(s, 2, 0), std::domain_error);
}
