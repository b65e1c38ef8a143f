#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCli = DCTA_CLI;
const fs::path kFixtures = DCTA_FIXTURES;
const fs::path kWork = fs::path(DCTA_WORK) / "cli";

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result cli(const std::string& args) {
    fs::create_directories(kWork);
    const auto out = kWork / "stdout.txt", err = kWork / "stderr.txt";
    const int status = std::system(("'" + kCli.string() + "' " + args + " >'" + out.string() + "' 2>'" +
                                    err.string() + "'").c_str());
    return {WEXITSTATUS(status), testing::slurp(out), testing::slurp(err)};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("summarize on constant prices reports zero events and empty dumps") {
    const auto out = kWork / "constant";
    const auto r = cli("summarize --input " + q(kFixtures / "constant.csv") + " --out " + q(out));
    CHECK(r.code == 0);
    CHECK(r.out.rfind("0 events\n", 0) == 0);
    CHECK(lines(testing::slurp(out / "events.csv")) == 1);
    CHECK(lines(testing::slurp(out / "rdc.csv")) == 1);
}

TEST_CASE("summarize on the five-tick fixture finds two confirmations") {
    const auto out = kWork / "five";
    const auto r = cli("summarize --input " + q(kFixtures / "five_ticks.csv") + " --theta 0.001 --alpha 0.5 --out " +
                        q(out));
    CHECK(r.code == 0);
    CHECK(r.out.rfind("2 events\n", 0) == 0);
    const auto events = testing::slurp(out / "events.csv");
    CHECK(events.find("UpturnDC,0,2,") != std::string::npos);
    CHECK(events.find("DownturnDC,3,4,") != std::string::npos);
}

TEST_CASE("missing input exits 2 and names the path") {
    const auto r = cli("summarize --input /no/such/ticks.csv");
    CHECK(r.code == 2);
    CHECK(r.err.find("/no/such/ticks.csv") != std::string::npos);
    CHECK(lines(r.err) == 1);
}

TEST_CASE("failures exit nonzero with a one-line diagnostic") {
    auto r = cli("summarize --input " + q(kFixtures / "five_ticks.csv") + " --theta 0.5 --alpha 0.4");
    CHECK(r.code != 0);
    CHECK(r.err.find("error:") != std::string::npos);
    r = cli("backtest --input " + q(kFixtures / "five_ticks.csv") + " --out " + q(kWork / "x"));
    CHECK(r.code != 0);
    CHECK(r.err.find("--seed") != std::string::npos);
    r = cli("frobnicate");
    CHECK(r.code != 0);
}

TEST_CASE("gen-synthetic is reproducible and honours the burst share") {
    const auto a = kWork / "a.csv", b = kWork / "b.csv", none = kWork / "none.csv";
    CHECK(cli("gen-synthetic --seed 5 --months 2 --out " + q(a)).code == 0);
    CHECK(cli("gen-synthetic --seed 5 --months 2 --out " + q(b)).code == 0);
    CHECK(testing::slurp(a) == testing::slurp(b));
    CHECK(cli("gen-synthetic --seed 5 --months 2 --burst-fraction 0 --out " + q(none)).code == 0);
    const auto text = testing::slurp(none);
    CHECK(text.find(",1\n") == std::string::npos);
    CHECK(lines(text) > 1000);
}

TEST_CASE("config file values apply unless overridden on the command line") {
    const auto ticks = kWork / "m3.csv";
    REQUIRE(cli("gen-synthetic --seed 3 --months 3 --tick-seconds 300 --out " + q(ticks)).code == 0);
    testing::spit(kWork / "ft.cfg", "seed = 1\nstrategies = IDC\n# comment\nfixed-thresholds = 0.001, 0.002\n");

    auto r = cli("--config " + q(kWork / "ft.cfg") + " backtest --input " + q(ticks) +
                  " --strategies FT --out " + q(kWork / "ft"));
    REQUIRE(r.code == 0);
    const auto per_window = testing::slurp(kWork / "ft" / "per_window.csv");
    CHECK(lines(per_window) == 1 + 2 * 2);
    CHECK(per_window.find("FT@0.002") != std::string::npos);
    CHECK(per_window.find("IDC") == std::string::npos);

    testing::spit(kWork / "bad.cfg", "no-such-flag = 1\n");
    CHECK(cli("--config " + q(kWork / "bad.cfg") + " backtest --input " + q(ticks)).code != 0);
}

TEST_CASE("three-month FT backtest gives two windows of eight rows; report rebuilds") {
    const auto ticks = kWork / "m3.csv";
    REQUIRE(cli("gen-synthetic --seed 3 --months 3 --tick-seconds 300 --out " + q(ticks)).code == 0);
    const auto out = kWork / "ft8";
    REQUIRE(cli("backtest --input " + q(ticks) + " --seed 1 --strategies FT --out " + q(out)).code == 0);
    CHECK(lines(testing::slurp(out / "per_window.csv")) == 1 + 16);
    CHECK(lines(testing::slurp(out / "windows.csv")) == 1 + 2);
    const auto before = testing::slurp(out / "aggregate.csv");
    fs::remove(out / "aggregate.csv");
    CHECK(cli("report --out " + q(out)).code == 0);
    CHECK(testing::slurp(out / "aggregate.csv") == before);
}

TEST_CASE("forced-Abnormal ITA backtest trades nothing and reruns identically") {
    const auto ticks = kWork / "m3.csv";
    REQUIRE(cli("gen-synthetic --seed 3 --months 3 --tick-seconds 300 --out " + q(ticks)).code == 0);
    const std::string args = "backtest --input " + q(ticks) + " --seed 2 --iters 12 --strategies ITA --force-regime abnormal --out ";
    REQUIRE(cli(args + q(kWork / "ab1")).code == 0);
    REQUIRE(cli(args + q(kWork / "ab2")).code == 0);
    const auto per_window = testing::slurp(kWork / "ab1" / "per_window.csv");
    CHECK(per_window == testing::slurp(kWork / "ab2" / "per_window.csv"));
    CHECK(per_window.find("ITA,0,0,0\n") != std::string::npos);
    CHECK(lines(per_window) == 3);
}

TEST_CASE("optimize and regimes subcommands") {
    const auto ticks = kWork / "m3.csv";
    REQUIRE(cli("gen-synthetic --seed 3 --months 3 --tick-seconds 300 --out " + q(ticks)).code == 0);
    auto r = cli("optimize --input " + q(ticks) + " --seed 1 --iters 15 --out " + q(kWork / "trials.csv"));
    CHECK(r.code == 0);
    CHECK(r.out.find("best theta") != std::string::npos);
    CHECK(lines(testing::slurp(kWork / "trials.csv")) == 16);
    r = cli("optimize --input " + q(ticks) + " --iters 15");
    CHECK(r.code != 0);

    r = cli("regimes --input " + q(ticks) + " --theta 0.001 --alpha 0.5 --out " + q(kWork / "reg"));
    CHECK(r.code == 0);
    CHECK(testing::slurp(kWork / "reg" / "model.txt").find("abnormal_state = ") != std::string::npos);
    CHECK(lines(testing::slurp(kWork / "reg" / "regimes.csv")) > 10);
}
