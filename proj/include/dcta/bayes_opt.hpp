#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace dcta {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// Box over (theta, alpha). With `alpha_fixed` set, only theta is searched.
struct SearchSpace {
    Interval theta{0.0003, 0.003};
    Interval alpha{0.1, 1.0};
    std::optional<double> alpha_fixed;

    void validate() const;
    bool contains(double theta_value, double alpha_value) const;
};

inline constexpr double kInvalidObjective = -1e300;

struct Trial {
    int iteration = 0;  // 0-based evaluation ordinal
    double theta = 0.0;
    double alpha = 0.0;
    double objective = 0.0;
    bool valid = true;  // false when the objective was not finite

    friend bool operator==(const Trial&, const Trial&) = default;
};

struct OptimizeOptions {
    int n_iters = 100;  // total objective evaluations, initial design included
    int n_init = 10;
    std::uint64_t seed = 0;
    double nugget = 1e-6;
    int n_candidates = 256;
};

struct OptimizeResult {
    Trial best;
    std::vector<Trial> history;
};

using Objective = std::function<double(double theta, double alpha)>;

/// GP/expected-improvement maximization of `objective` over `space`.
/// The first n_init points come from a seeded Latin hypercube; every later
/// point maximizes EI under a GP fitted to all finite observations so far.
/// Inputs are normalized to the unit box. The best trial is the highest
/// objective, earliest on ties.
OptimizeResult optimize(const Objective& objective, const SearchSpace& space, const OptimizeOptions& options = {});

/// One-dimensional search over theta with alpha pinned (1 unless the space
/// already fixes it).
OptimizeResult optimize_theta_only(const Objective& objective, SearchSpace space, const OptimizeOptions& options = {});

// `iteration,theta,alpha,objective`
void write_trials_csv(std::ostream& out, std::span<const Trial> trials);

}  // namespace dcta
