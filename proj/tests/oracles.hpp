#pragma once

// Reference implementations used only by the tests. Each one is written
// directly from the definition and trades speed for obviousness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dcta/dc_engine.hpp"
#include "dcta/hmm.hpp"

namespace oracle {

struct DcScan {
    std::vector<dcta::DcEventRecord> events;
    std::vector<dcta::Extreme> extremes;
};

// First index of the maximum (or minimum) of prices[from, to).
inline std::size_t first_argmax(std::span<const double> p, std::size_t from, std::size_t to) {
    std::size_t best = from;
    for (std::size_t i = from; i < to; ++i) {
        if (p[i] > p[best]) best = i;
    }
    return best;
}

inline std::size_t first_argmin(std::span<const double> p, std::size_t from, std::size_t to) {
    std::size_t best = from;
    for (std::size_t i = from; i < to; ++i) {
        if (p[i] < p[best]) best = i;
    }
    return best;
}

// Rescans the whole segment since the last confirmation at every tick.
// Upturn at t: p[t] >= min(p[c..t-1]) * (1 + theta).
// Downturn at t: p[t] <= max(p[c..t-1]) * (1 - alpha * theta).
// Before the first confirmation both tests apply from index 0, upturn first.
inline DcScan brute_force_dc(std::span<const double> p, double theta, double alpha) {
    const double up = 1.0 + theta;
    const double down = 1.0 - alpha * theta;
    DcScan out;
    enum { None, Up, Down } trend = None;
    std::size_t c = 0;
    std::optional<std::size_t> last_conf;
    for (std::size_t t = 1; t < p.size(); ++t) {
        const std::size_t lo = first_argmin(p, c, t);
        const std::size_t hi = first_argmax(p, c, t);
        std::optional<dcta::Extreme> ext;
        bool upturn = false;
        if (trend != Up && p[t] >= p[lo] * up) {
            ext = dcta::Extreme{lo, p[lo], dcta::ExtremeKind::Trough};
            upturn = true;
        } else if (trend != Down && p[t] <= p[hi] * down) {
            ext = dcta::Extreme{hi, p[hi], dcta::ExtremeKind::Peak};
        }
        if (!ext) continue;
        if (last_conf && ext->index >= *last_conf + 2) {
            out.events.push_back({upturn ? dcta::EventKind::DownOS : dcta::EventKind::UpOS, *last_conf + 1,
                                  ext->index - 1, p[*last_conf + 1], p[ext->index - 1]});
        }
        out.events.push_back(
            {upturn ? dcta::EventKind::UpturnDC : dcta::EventKind::DownturnDC, ext->index, t, ext->price, p[t]});
        out.extremes.push_back(*ext);
        trend = upturn ? Up : Down;
        last_conf = t;
        c = t;
    }
    return out;
}

// Classic single-threshold detector: one reference extreme and a mode flag.
struct SymmetricEvent {
    bool upturn = false;
    std::size_t extreme_index = 0;
    std::size_t confirm_index = 0;
};

inline std::vector<SymmetricEvent> symmetric_dc(std::span<const double> p, double theta) {
    std::vector<SymmetricEvent> out;
    if (p.empty()) return out;
    int mode = 0;  // 0 unknown, +1 rising, -1 falling
    double hi = p[0], lo = p[0];
    std::size_t hi_i = 0, lo_i = 0;
    for (std::size_t t = 1; t < p.size(); ++t) {
        const double x = p[t];
        if (mode != 1 && x >= lo * (1.0 + theta)) {
            out.push_back({true, lo_i, t});
            mode = 1;
            hi = x;
            hi_i = t;
        } else if (mode != -1 && x <= hi * (1.0 - theta)) {
            out.push_back({false, hi_i, t});
            mode = -1;
            lo = x;
            lo_i = t;
        } else {
            if (mode != -1 && x > hi) {
                hi = x;
                hi_i = t;
            }
            if (mode != 1 && x < lo) {
                lo = x;
                lo_i = t;
            }
        }
    }
    return out;
}

// Exhaustive search over all n^T paths. Scores accumulate in time order;
// among equal scores the path that is smallest when compared from the last
// step backwards wins.
inline std::vector<std::size_t> enumerate_viterbi(const dcta::GaussianHmm& m, std::span<const double> obs) {
    const std::size_t n = m.n_states();
    const std::size_t T = obs.size();
    std::vector<std::size_t> path(T, 0), best_path;
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        double s = std::log(m.initial[path[0]]) + dcta::log_emission(m, path[0], obs[0]);
        for (std::size_t t = 1; t < T; ++t) {
            s = s + std::log(m.transition(path[t - 1], path[t]));
            s = s + dcta::log_emission(m, path[t], obs[t]);
        }
        bool take = best_path.empty() || s > best;
        if (!take && s == best) {
            take = std::lexicographical_compare(path.rbegin(), path.rend(), best_path.rbegin(), best_path.rend());
        }
        if (take) {
            best = s;
            best_path = path;
        }
        std::size_t t = 0;
        while (t < T && ++path[t] == n) path[t++] = 0;
        if (t == T) break;
    }
    return best_path;
}

// max over x < y of (v[x] - v[y]) / v[x], in percent; 0 when never positive.
inline double brute_force_mdd(std::span<const double> v) {
    double worst = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) {
        for (std::size_t y = x + 1; y < v.size(); ++y) worst = std::max(worst, (v[x] - v[y]) / v[x]);
    }
    return worst * 100.0;
}

// Geometric random walk, optionally rounded to 5 decimals to create ties.
inline std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n, double step_sd, bool round5) {
    std::normal_distribution<double> z(0.0, step_sd);
    std::vector<double> p(n);
    double x = 1.0;
    for (auto& v : p) {
        v = round5 ? std::round(x * 1e5) / 1e5 : x;
        x *= std::exp(z(rng));
    }
    return p;
}

// Two-state Markov-switching Gaussian sample, absolute-valued so it stays
// non-negative like R_DC.
struct TwoRegimeSample {
    std::vector<double> values;
    std::vector<int> states;
};

inline TwoRegimeSample two_regime_sample(std::mt19937_64& rng, std::size_t n, double mu0, double sd0, double mu1,
                                         double sd1, double stay) {
    TwoRegimeSample out;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    int s = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0 && u(rng) > stay) s = 1 - s;
        out.states.push_back(s);
        out.values.push_back(std::abs(s == 0 ? mu0 + sd0 * z(rng) : mu1 + sd1 * z(rng)));
    }
    return out;
}

}  // namespace oracle
