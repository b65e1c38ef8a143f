#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "dcta/metrics.hpp"
#include "oracles.hpp"

using namespace dcta;

TEST_CASE("CRR spot values") {
    CHECK(crr(10000.0, 12000.0) == doctest::Approx(20.0));
    CHECK(crr(10000.0, 10000.0) == 0.0);
    CHECK(crr(10000.0, 9500.0) == doctest::Approx(-5.0));
    CHECK_THROWS_AS(crr(0.0, 1.0), std::domain_error);
}

TEST_CASE("CRR is unchanged by scaling the curve") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double a = u(rng), b = u(rng), c = u(rng) * 100.0;
        CHECK(crr(a * c, b * c) == doctest::Approx(crr(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("MDD spot values") {
    CHECK(mdd(std::vector<double>{100, 120, 90, 110}) == doctest::Approx(25.0));
    CHECK(mdd(std::vector<double>{1, 2, 3, 4, 5}) == 0.0);
    CHECK(mdd(std::vector<double>{100, 50}) == doctest::Approx(50.0));
    CHECK(mdd(std::vector<double>{7}) == 0.0);
    CHECK_THROWS_AS(mdd(std::vector<double>{}), std::domain_error);
    CHECK_THROWS_AS(mdd(std::vector<double>{1.0, -1.0}), std::domain_error);
}

TEST_CASE("one-pass MDD equals the pairwise maximum") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> len(1, 200);
    std::uniform_real_distribution<double> u(1.0, 1000.0);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> v(static_cast<std::size_t>(len(rng)));
        for (auto& x : v) x = u(rng);
        REQUIRE(mdd(v) == oracle::brute_force_mdd(v));
    }
}

TEST_CASE("appending values above the running peak never lowers MDD") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1.0, 100.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> v(50);
        for (auto& x : v) x = u(rng);
        const double before = mdd(v);
        v.push_back(*std::max_element(v.begin(), v.end()) * 1.1);
        CHECK(mdd(v) == before);
        CHECK(mdd(v) == oracle::brute_force_mdd(v));
    }
}

TEST_CASE("average ranks") {
    CHECK(average_ranks(std::vector<double>{3.0, 1.0, 2.0}, true) == std::vector<double>{1.0, 3.0, 2.0});
    CHECK(average_ranks(std::vector<double>{3.0, 1.0, 2.0}, false) == std::vector<double>{3.0, 1.0, 2.0});
    CHECK(average_ranks(std::vector<double>{5.0, 5.0, 1.0, 0.0}, true) == std::vector<double>{1.5, 1.5, 3.0, 4.0});
}

TEST_CASE("Friedman ranks on a hand-built fixture") {
    // Rows are strategies, columns datasets; lower is better so the value is the rank.
    const std::vector<std::vector<double>> r{{1, 2, 1}, {2, 1, 3}, {3, 3, 2}};
    const auto f = friedman_ranks(r, false);
    CHECK(std::abs(f.average_ranks[0] - 4.0 / 3.0) < 1e-12);
    CHECK(std::abs(f.average_ranks[1] - 2.0) < 1e-12);
    CHECK(std::abs(f.average_ranks[2] - 8.0 / 3.0) < 1e-12);
    // 12/(n k (k+1)) * sum R_j^2 - 3 n (k+1) with rank sums 4, 6, 8.
    CHECK(f.statistic == doctest::Approx(12.0 / 36.0 * (16 + 36 + 64) - 36.0));
    CHECK(f.critical_value == doctest::Approx(5.991464547).epsilon(1e-8));
    CHECK(f.p_value == doctest::Approx(std::exp(-f.statistic / 2.0)).epsilon(1e-10));
}

TEST_CASE("Friedman: unanimous winner and ties") {
    const std::vector<std::vector<double>> best{{9, 9, 9}, {1, 2, 3}, {3, 1, 2}, {2, 3, 1}};
    CHECK(friedman_ranks(best, true).average_ranks[0] == 1.0);
    const std::vector<std::vector<double>> tied{{5, 1}, {5, 2}, {1, 3}, {0, 4}};
    const auto f = friedman_ranks(tied, true);
    CHECK(f.average_ranks[0] == doctest::Approx((1.5 + 4.0) / 2.0));
    CHECK(f.average_ranks[1] == doctest::Approx((1.5 + 3.0) / 2.0));
}

TEST_CASE("Friedman mean rank is (k+1)/2") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> u(0, 5);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t k = 2 + rep % 5, n = 2 + rep % 7;
        std::vector<std::vector<double>> m(k, std::vector<double>(n));
        for (auto& row : m) {
            for (auto& x : row) x = u(rng);
        }
        const auto f = friedman_ranks(m, rep % 2 == 0);
        const double mean = std::accumulate(f.average_ranks.begin(), f.average_ranks.end(), 0.0) / k;
        CHECK(mean == doctest::Approx((k + 1) / 2.0).epsilon(1e-12));
        CHECK(f.statistic >= 0.0);
    }
}

TEST_CASE("Friedman preconditions") {
    CHECK_THROWS_AS(friedman_ranks({{1, 2}}, true), std::domain_error);
    CHECK_THROWS_AS(friedman_ranks({{1}, {2}}, true), std::domain_error);
    CHECK_THROWS_AS(friedman_ranks({{1, 2}, {2}}, true), std::domain_error);
    CHECK_THROWS_AS(friedman_ranks({{1, 2}, {2, NAN}}, true), std::domain_error);
}

TEST_CASE("chained returns compound") {
    CHECK(chain_returns(std::vector<double>{10.0, -10.0}) == doctest::Approx(-1.0));
    CHECK(chain_returns(std::vector<double>{}) == 0.0);
}

TEST_CASE("report: single run") {
    const auto r = build_report({{0, "IDC", 4.0, 1.0, 6}});
    REQUIRE(r.per_window.size() == 1);
    REQUIRE(r.aggregate.size() == 1);
    CHECK(r.aggregate[0].mean_crr_pct == 4.0);
    CHECK(r.aggregate[0].chained_crr_pct == doctest::Approx(4.0));
    CHECK_FALSE(r.friedman_crr);
}

TEST_CASE("report: aggregate CRR is the mean over windows") {
    const auto r = build_report({{0, "ITA", 10.0, 1.0, 2}, {1, "ITA", -4.0, 3.0, 2}});
    CHECK(r.aggregate[0].mean_crr_pct == doctest::Approx(3.0));
    CHECK(r.aggregate[0].chained_crr_pct == doctest::Approx(5.6));
    CHECK(r.aggregate[0].mean_mdd_pct == doctest::Approx(2.0));
}

TEST_CASE("report: fixed family order and FT averaging") {
    std::vector<WindowRow> rows;
    for (std::size_t w = 0; w < 3; ++w) {
        rows.push_back({w, "ITA", 3.0, 1.0, 1});
        rows.push_back({w, "IDC", 2.0, 1.0, 1});
        rows.push_back({w, "FT@0.002", 0.0, 1.0, 1});
        rows.push_back({w, "FT@0.001", 2.0, 1.0, 1});
        rows.push_back({w, "OPT_T", 1.5, 1.0, 1});
    }
    const auto r = build_report(rows);
    REQUIRE(r.aggregate.size() == 6);
    CHECK(r.aggregate[0].strategy == "FT");
    CHECK(r.aggregate[1].strategy == "OPT_T");
    CHECK(r.aggregate[2].strategy == "IDC");
    CHECK(r.aggregate[3].strategy == "ITA");
    CHECK(r.aggregate[4].strategy == "FT@0.001");
    CHECK(r.aggregate[5].strategy == "FT@0.002");
    CHECK(r.aggregate[0].mean_crr_pct == doctest::Approx(1.0));
    CHECK(r.aggregate[0].chained_crr_pct == doctest::Approx((chain_returns(std::vector<double>{2, 2, 2}) + 0.0) / 2));
    REQUIRE(r.friedman_crr);
    CHECK(r.ranked_strategies == std::vector<std::string>{"FT", "OPT_T", "IDC", "ITA"});
    CHECK(*r.aggregate[3].avg_rank == 1.0);
    CHECK(*r.aggregate[0].avg_rank == 4.0);
    CHECK(r.per_window[0].strategy == "FT@0.001");
}

TEST_CASE("per-window CSV round-trips") {
    const std::vector<WindowRow> rows{{0, "FT@0.0003", -1.25, 2.5, 4}, {0, "ITA", 0.1, 0.2, 2}};
    std::stringstream buf;
    write_per_window_csv(buf, rows);
    const auto back = read_per_window_csv(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[0].strategy == "FT@0.0003");
    CHECK(back[0].crr_pct == -1.25);
    CHECK(back[1].trades == 2);
    std::stringstream bad("window_id,strategy,crr_pct,mdd_pct,trades\n0,ITA,x\n");
    CHECK_THROWS(read_per_window_csv(bad));
}
