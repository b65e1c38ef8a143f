#include "dcta/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "dcta/gaussian_process.hpp"

namespace dcta {

namespace {

constexpr int kLocalStarts = 5;
constexpr double kLocalStep = 0.05;
constexpr double kLocalMinStep = 1e-4;

class Problem {
public:
    Problem(const Objective& objective, const SearchSpace& space) : objective_(objective), space_(space) {}

    std::size_t dim() const { return space_.alpha_fixed ? 1 : 2; }

    Trial evaluate(const Eigen::VectorXd& u, int iteration) const {
        Trial t;
        t.iteration = iteration;
        t.theta = space_.theta.lo + std::clamp(u(0), 0.0, 1.0) * space_.theta.width();
        t.alpha = space_.alpha_fixed ? *space_.alpha_fixed
                                     : space_.alpha.lo + std::clamp(u(1), 0.0, 1.0) * space_.alpha.width();
        if (t.theta >= t.alpha) {
            // Only reachable with a box that lets alpha fall to theta.
            t.alpha = std::min(space_.alpha.hi, std::nextafter(t.theta, 2.0));
        }
        const double y = objective_(t.theta, t.alpha);
        t.valid = std::isfinite(y);
        t.objective = t.valid ? y : kInvalidObjective;
        return t;
    }

    Eigen::VectorXd to_unit(const Trial& t) const {
        Eigen::VectorXd u(static_cast<Eigen::Index>(dim()));
        u(0) = (t.theta - space_.theta.lo) / space_.theta.width();
        if (!space_.alpha_fixed) u(1) = (t.alpha - space_.alpha.lo) / space_.alpha.width();
        return u;
    }

private:
    const Objective& objective_;
    const SearchSpace& space_;
};

Eigen::VectorXd wrap_unit(Eigen::VectorXd u) {
    for (Eigen::Index d = 0; d < u.size(); ++d) u(d) -= std::floor(u(d));
    return u;
}

// Compass search on the acquisition inside the unit box.
Eigen::VectorXd refine(const std::function<double(const Eigen::VectorXd&)>& acq, Eigen::VectorXd x, double& fx) {
    for (double step = kLocalStep; step >= kLocalMinStep; step /= 2.0) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (Eigen::Index d = 0; d < x.size(); ++d) {
                for (double sign : {1.0, -1.0}) {
                    Eigen::VectorXd cand = x;
                    cand(d) = std::clamp(cand(d) + sign * step, 0.0, 1.0);
                    const double v = acq(cand);
                    if (v > fx) {
                        fx = v;
                        x = std::move(cand);
                        improved = true;
                    }
                }
            }
        }
    }
    return x;
}

Trial best_of(const std::vector<Trial>& history) {
    Trial best = history.front();
    for (const auto& t : history) {
        if (t.objective > best.objective) best = t;
    }
    return best;
}

}  // namespace

void SearchSpace::validate() const {
    if (!(theta.lo > 0.0) || !(theta.lo <= theta.hi)) throw std::domain_error("SearchSpace: bad theta bounds");
    if (alpha_fixed) {
        if (!(*alpha_fixed > theta.hi) || !(*alpha_fixed <= 1.0)) {
            throw std::domain_error("SearchSpace: fixed alpha must exceed theta and be at most 1");
        }
        if (!alpha.contains(*alpha_fixed) && *alpha_fixed != 1.0) {
            throw std::domain_error("SearchSpace: fixed alpha outside alpha bounds");
        }
    } else if (!(alpha.lo <= alpha.hi) || !(alpha.hi <= 1.0) || !(alpha.lo > 0.0)) {
        throw std::domain_error("SearchSpace: bad alpha bounds");
    }
}

bool SearchSpace::contains(double theta_value, double alpha_value) const {
    if (!theta.contains(theta_value)) return false;
    if (alpha_fixed) return alpha_value == *alpha_fixed;
    return alpha.contains(alpha_value);
}

OptimizeResult optimize(const Objective& objective, const SearchSpace& space, const OptimizeOptions& options) {
    space.validate();
    if (options.n_init < 1 || options.n_iters < options.n_init) {
        throw std::domain_error("optimize: need n_iters >= n_init >= 1");
    }
    const Problem problem(objective, space);
    const auto dim = static_cast<Eigen::Index>(problem.dim());
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    OptimizeResult result;
    const Eigen::MatrixXd design = latin_hypercube(static_cast<std::size_t>(options.n_init), problem.dim(), rng);
    for (int i = 0; i < options.n_init; ++i) {
        result.history.push_back(problem.evaluate(design.row(i).transpose(), i));
    }

    GaussianProcess gp(options.nugget);
    for (int it = options.n_init; it < options.n_iters; ++it) {
        std::vector<const Trial*> valid;
        for (const auto& t : result.history) {
            if (t.valid) valid.push_back(&t);
        }

        Eigen::VectorXd shift(dim);
        for (Eigen::Index d = 0; d < dim; ++d) shift(d) = unit(rng);

        Eigen::VectorXd next;
        if (valid.empty()) {
            next = wrap_unit(halton_point(1, problem.dim()) + shift);
        } else {
            Eigen::MatrixXd x(static_cast<Eigen::Index>(valid.size()), dim);
            Eigen::VectorXd y(static_cast<Eigen::Index>(valid.size()));
            double incumbent = valid.front()->objective;
            for (std::size_t i = 0; i < valid.size(); ++i) {
                x.row(static_cast<Eigen::Index>(i)) = problem.to_unit(*valid[i]).transpose();
                y(static_cast<Eigen::Index>(i)) = valid[i]->objective;
                incumbent = std::max(incumbent, valid[i]->objective);
            }
            gp.fit(x, y);
            auto acq = [&](const Eigen::VectorXd& u) {
                const auto p = gp.predict(u);
                return expected_improvement(p.mean, p.stddev, incumbent);
            };

            std::vector<Eigen::VectorXd> candidates;
            std::vector<double> scores;
            for (int k = 1; k <= options.n_candidates; ++k) {
                candidates.push_back(wrap_unit(halton_point(static_cast<std::size_t>(k), problem.dim()) + shift));
                scores.push_back(acq(candidates.back()));
            }
            std::vector<std::size_t> order(candidates.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

            std::vector<Eigen::VectorXd> starts;
            for (std::size_t k = 0; k < order.size() && starts.size() < kLocalStarts; ++k) {
                starts.push_back(candidates[order[k]]);
            }
            for (const auto* t : valid) {
                if (t->objective == incumbent) {
                    starts.push_back(problem.to_unit(*t));
                    break;
                }
            }

            double best_score = -1.0;
            for (const auto& s : starts) {
                double fx = acq(s);
                Eigen::VectorXd x_local = refine(acq, s, fx);
                if (fx > best_score) {
                    best_score = fx;
                    next = std::move(x_local);
                }
            }
        }
        result.history.push_back(problem.evaluate(next, it));
    }

    result.best = best_of(result.history);
    return result;
}

OptimizeResult optimize_theta_only(const Objective& objective, SearchSpace space, const OptimizeOptions& options) {
    if (!space.alpha_fixed) space.alpha_fixed = 1.0;
    return optimize(objective, space, options);
}

void write_trials_csv(std::ostream& out, std::span<const Trial> trials) {
    out << "iteration,theta,alpha,objective\n";
    for (const auto& t : trials) {
        out << fmt::format("{},{},{},{}\n", t.iteration, t.theta, t.alpha, t.objective);
    }
}

}  // namespace dcta
