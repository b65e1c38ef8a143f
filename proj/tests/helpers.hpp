#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "dcta/ingest.hpp"
#include "dcta/synthetic.hpp"

namespace testing {

inline dcta::Timestamp at(int y, unsigned m, unsigned d, int seconds = 0) {
    using namespace std::chrono;
    return dcta::Timestamp{sys_days{year{y} / month{m} / day{d}}.time_since_epoch() + std::chrono::seconds{seconds}};
}

// One price per second starting at `start`.
inline dcta::PriceSeries series_of(const std::vector<double>& prices, dcta::Timestamp start = at(2019, 1, 1)) {
    dcta::PriceSeries s;
    s.instrument = "TEST";
    for (std::size_t i = 0; i < prices.size(); ++i) {
        s.timestamps.push_back(start + std::chrono::seconds{static_cast<long long>(i)});
        s.prices.push_back(prices[i]);
    }
    return s;
}

inline dcta::PriceSeries synthetic_series(const dcta::SyntheticSpec& spec) {
    dcta::PriceSeries s;
    s.instrument = "SYN";
    for (const auto& t : dcta::generate_synthetic(spec)) {
        s.timestamps.push_back(t.timestamp);
        s.prices.push_back(dcta::mid_price(t.bid, t.ask));
    }
    return s;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

}  // namespace testing
