#include "dcta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "dcta/strategy.hpp"

namespace dcta {

namespace {

constexpr const char* kFamilies[] = {"FT", "OPT_T", "IDC", "ITA"};

std::string family_of(const std::string& label) {
    auto at = label.find('@');
    return at == std::string::npos ? label : label.substr(0, at);
}

int family_rank(const std::string& family) {
    for (int i = 0; i < 4; ++i) {
        if (family == kFamilies[i]) return i;
    }
    return 4;
}

double threshold_of(const std::string& label) {
    auto at = label.find('@');
    return at == std::string::npos ? 0.0 : std::stod(label.substr(at + 1));
}

double mean(std::span<const double> xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

double crr(double initial, double final_value) {
    if (!(initial > 0.0)) throw std::domain_error("crr: initial capital must be positive");
    return (final_value - initial) / initial * 100.0;
}

double crr(const EquityCurve& equity) {
    if (equity.empty()) throw std::domain_error("crr: empty equity curve");
    return crr(equity.initial_capital, equity.values.back());
}

double mdd(std::span<const double> values) {
    if (values.empty()) throw std::domain_error("mdd: empty curve");
    double peak = values.front();
    double worst = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) throw std::domain_error("mdd: capital must stay positive");
        if (v > peak) {
            peak = v;
        } else {
            worst = std::max(worst, (peak - v) / peak);
        }
    }
    return worst * 100.0;
}

double mdd(const EquityCurve& equity) { return mdd(std::span<const double>(equity.values)); }

std::vector<double> average_ranks(std::span<const double> values, bool higher_is_better) {
    const std::size_t k = values.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return higher_is_better ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<double> ranks(k);
    for (std::size_t i = 0; i < k;) {
        std::size_t j = i;
        while (j + 1 < k && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
        i = j + 1;
    }
    return ranks;
}

FriedmanResult friedman_ranks(const std::vector<std::vector<double>>& results, bool higher_is_better) {
    const std::size_t k = results.size();
    if (k < 2) throw std::domain_error("friedman_ranks: need at least two strategies");
    const std::size_t n = results.front().size();
    if (n < 2) throw std::domain_error("friedman_ranks: need at least two datasets");
    for (const auto& row : results) {
        if (row.size() != n) throw std::domain_error("friedman_ranks: missing cell");
        for (double v : row) {
            if (!std::isfinite(v)) throw std::domain_error("friedman_ranks: missing cell");
        }
    }

    std::vector<double> rank_sums(k, 0.0);
    double sum_sq = 0.0;
    std::vector<double> column(k);
    for (std::size_t d = 0; d < n; ++d) {
        for (std::size_t s = 0; s < k; ++s) column[s] = results[s][d];
        const auto r = average_ranks(column, higher_is_better);
        for (std::size_t s = 0; s < k; ++s) {
            rank_sums[s] += r[s];
            sum_sq += r[s] * r[s];
        }
    }

    FriedmanResult out;
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    for (double rs : rank_sums) out.average_ranks.push_back(rs / nn);

    double numer = 0.0;
    for (double rs : rank_sums) numer += (rs - nn * (kk + 1.0) / 2.0) * (rs - nn * (kk + 1.0) / 2.0);
    const double denom = sum_sq - nn * kk * (kk + 1.0) * (kk + 1.0) / 4.0;
    out.statistic = denom > 0.0 ? (kk - 1.0) * numer / denom : 0.0;

    const boost::math::chi_squared dist(kk - 1.0);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
    out.critical_value = boost::math::quantile(boost::math::complement(dist, 0.05));
    return out;
}

double chain_returns(std::span<const double> crr_pcts) {
    double growth = 1.0;
    for (double r : crr_pcts) growth *= 1.0 + r / 100.0;
    return (growth - 1.0) * 100.0;
}

BacktestReport build_report(std::vector<WindowRow> rows) {
    if (rows.empty()) throw std::domain_error("build_report: no runs");

    std::stable_sort(rows.begin(), rows.end(), [](const WindowRow& a, const WindowRow& b) {
        if (a.window_id != b.window_id) return a.window_id < b.window_id;
        const auto fa = family_of(a.strategy), fb = family_of(b.strategy);
        if (family_rank(fa) != family_rank(fb)) return family_rank(fa) < family_rank(fb);
        if (fa != fb) return fa < fb;
        return threshold_of(a.strategy) < threshold_of(b.strategy);
    });

    std::vector<std::size_t> windows;
    for (const auto& r : rows) {
        if (windows.empty() || windows.back() != r.window_id) windows.push_back(r.window_id);
    }

    // label -> window -> row
    std::map<std::string, std::map<std::size_t, const WindowRow*>> by_label;
    std::map<std::string, std::vector<std::string>> labels_of_family;
    for (const auto& r : rows) {
        auto& slot = by_label[r.strategy];
        if (slot.empty()) labels_of_family[family_of(r.strategy)].push_back(r.strategy);
        slot[r.window_id] = &r;
    }

    std::vector<std::string> families;
    for (const auto& [family, labels] : labels_of_family) families.push_back(family);
    std::stable_sort(families.begin(), families.end(), [](const std::string& a, const std::string& b) {
        return family_rank(a) != family_rank(b) ? family_rank(a) < family_rank(b) : a < b;
    });

    BacktestReport report;
    std::vector<std::vector<double>> crr_matrix, mdd_matrix;

    for (const auto& family : families) {
        const auto& labels = labels_of_family[family];
        std::vector<double> window_crr, window_mdd;
        bool complete = true;
        for (std::size_t w : windows) {
            std::vector<double> c, m;
            for (const auto& label : labels) {
                auto it = by_label[label].find(w);
                if (it == by_label[label].end()) continue;
                c.push_back(it->second->crr_pct);
                m.push_back(it->second->mdd_pct);
            }
            if (c.empty()) {
                complete = false;
                continue;
            }
            window_crr.push_back(mean(c));
            window_mdd.push_back(mean(m));
        }

        AggregateRow row;
        row.strategy = family;
        row.mean_crr_pct = mean(window_crr);
        row.mean_mdd_pct = mean(window_mdd);
        if (labels.size() == 1) {
            row.chained_crr_pct = chain_returns(window_crr);
        } else {
            std::vector<double> chained;
            for (const auto& label : labels) {
                std::vector<double> c;
                for (const auto& [w, r] : by_label[label]) c.push_back(r->crr_pct);
                chained.push_back(chain_returns(c));
            }
            row.chained_crr_pct = mean(chained);
        }
        report.aggregate.push_back(row);
        if (complete) {
            crr_matrix.push_back(window_crr);
            mdd_matrix.push_back(window_mdd);
            report.ranked_strategies.push_back(family);
        }
    }

    if (crr_matrix.size() >= 2 && windows.size() >= 2) {
        report.friedman_crr = friedman_ranks(crr_matrix, true);
        report.friedman_mdd = friedman_ranks(mdd_matrix, false);
        for (std::size_t s = 0; s < report.ranked_strategies.size(); ++s) {
            for (auto& row : report.aggregate) {
                if (row.strategy == report.ranked_strategies[s]) row.avg_rank = report.friedman_crr->average_ranks[s];
            }
        }
    }

    // Individual FT thresholds after the families.
    if (auto it = labels_of_family.find("FT"); it != labels_of_family.end() && it->second.size() > 1) {
        for (const auto& label : it->second) {
            std::vector<double> c, m;
            for (const auto& [w, r] : by_label[label]) {
                c.push_back(r->crr_pct);
                m.push_back(r->mdd_pct);
            }
            report.aggregate.push_back({label, mean(c), chain_returns(c), mean(m), std::nullopt});
        }
    }

    report.per_window = std::move(rows);
    return report;
}

void write_per_window_csv(std::ostream& out, std::span<const WindowRow> rows) {
    out << "window_id,strategy,crr_pct,mdd_pct,trades\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{}\n", r.window_id, r.strategy, r.crr_pct, r.mdd_pct, r.trades);
    }
}

std::vector<WindowRow> read_per_window_csv(std::istream& in) {
    std::vector<WindowRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("window_id", 0) == 0) continue;
        std::stringstream ss(line);
        std::string f[5];
        for (auto& field : f) {
            if (!std::getline(ss, field, ',')) {
                throw std::runtime_error(fmt::format("per_window.csv line {}: expected 5 fields", line_no));
            }
        }
        try {
            rows.push_back({std::stoul(f[0]), f[1], std::stod(f[2]), std::stod(f[3]), std::stoul(f[4])});
        } catch (const std::exception&) {
            throw std::runtime_error(fmt::format("per_window.csv line {}: malformed row", line_no));
        }
    }
    return rows;
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows) {
    out << "strategy,mean_crr_pct,chained_crr_pct,mean_mdd_pct,avg_rank\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{}\n", r.strategy, r.mean_crr_pct, r.chained_crr_pct, r.mean_mdd_pct,
                           r.avg_rank ? fmt::format("{}", *r.avg_rank) : std::string{});
    }
}

void write_friedman_csv(std::ostream& out, const BacktestReport& report) {
    out << "metric,strategy,avg_rank\n";
    auto emit = [&](const char* metric, const std::optional<FriedmanResult>& f) {
        if (!f) return;
        for (std::size_t s = 0; s < report.ranked_strategies.size(); ++s) {
            out << fmt::format("{},{},{}\n", metric, report.ranked_strategies[s], f->average_ranks[s]);
        }
        out << fmt::format("{},chi_square,{}\n{},p_value,{}\n{},critical_0.05,{}\n", metric, f->statistic, metric,
                           f->p_value, metric, f->critical_value);
    };
    emit("crr", report.friedman_crr);
    emit("mdd", report.friedman_mdd);
}

}  // namespace dcta
