#include "dcta/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include <fmt/format.h>

namespace dcta {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_normal(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

// Posterior statistics from one E step.
struct EStep {
    double log_likelihood = 0.0;
    std::vector<double> gamma;       // T x n
    std::vector<double> xi_sum;      // n x n, summed over t
};

EStep expectation(const GaussianHmm& model, std::span<const double> obs, bool want_xi) {
    const std::size_t n = model.n_states();
    const std::size_t T = obs.size();
    constexpr double kTiny = std::numeric_limits<double>::min();

    // Emissions rescaled by their per-step maximum; the offsets go back into
    // the log-likelihood.
    std::vector<double> b(T * n);
    std::vector<double> offset(T);
    for (std::size_t t = 0; t < T; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            b[t * n + k] = log_emission(model, k, obs[t]);
            mx = std::max(mx, b[t * n + k]);
        }
        offset[t] = mx;
        for (std::size_t k = 0; k < n; ++k) b[t * n + k] = std::max(std::exp(b[t * n + k] - mx), kTiny);
    }

    std::vector<double> alpha(T * n), beta(T * n), scale(T);
    double ll = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double c = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double a = 0.0;
            if (t == 0) {
                a = model.initial[j];
            } else {
                for (std::size_t i = 0; i < n; ++i) a += alpha[(t - 1) * n + i] * model.transition(i, j);
            }
            a *= b[t * n + j];
            alpha[t * n + j] = a;
            c += a;
        }
        c = std::max(c, kTiny);
        scale[t] = c;
        for (std::size_t j = 0; j < n; ++j) alpha[t * n + j] /= c;
        ll += std::log(c) + offset[t];
    }

    for (std::size_t k = 0; k < n; ++k) beta[(T - 1) * n + k] = 1.0;
    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s += model.transition(i, j) * b[(t + 1) * n + j] * beta[(t + 1) * n + j];
            }
            beta[t * n + i] = s / scale[t + 1];
        }
    }

    EStep out;
    out.log_likelihood = ll;
    out.gamma.resize(T * n);
    for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += alpha[t * n + k] * beta[t * n + k];
        for (std::size_t k = 0; k < n; ++k) out.gamma[t * n + k] = alpha[t * n + k] * beta[t * n + k] / s;
    }
    if (want_xi) {
        out.xi_sum.assign(n * n, 0.0);
        std::vector<double> xi(n * n);
        for (std::size_t t = 0; t + 1 < T; ++t) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    xi[i * n + j] = alpha[t * n + i] * model.transition(i, j) * b[(t + 1) * n + j] *
                                    beta[(t + 1) * n + j];
                    s += xi[i * n + j];
                }
            }
            for (std::size_t k = 0; k < n * n; ++k) out.xi_sum[k] += xi[k] / s;
        }
    }
    return out;
}

GaussianHmm maximization(const GaussianHmm& current, const EStep& e, std::span<const double> obs) {
    const std::size_t n = current.n_states();
    const std::size_t T = obs.size();
    GaussianHmm next = current;

    for (std::size_t k = 0; k < n; ++k) next.initial[k] = e.gamma[k];

    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += e.xi_sum[i * n + j];
        if (row > 0.0) {
            for (std::size_t j = 0; j < n; ++j) next.transitions[i * n + j] = e.xi_sum[i * n + j] / row;
        }
    }

    for (std::size_t k = 0; k < n; ++k) {
        double w = 0.0, m = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            w += e.gamma[t * n + k];
            m += e.gamma[t * n + k] * obs[t];
        }
        if (!(w > 0.0)) continue;  // unused state keeps its parameters
        m /= w;
        double v = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double d = obs[t] - m;
            v += e.gamma[t * n + k] * d * d;
        }
        next.means[k] = m;
        next.variances[k] = std::max(v / w, kVarianceFloor);
    }
    return next;
}

struct Standardizer {
    double mean = 0.0;
    double sd = 1.0;

    static Standardizer of(std::span<const double> xs) {
        Standardizer s;
        const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
        if (*lo == *hi) {
            s.mean = *lo;
            s.sd = 0.0;
            return s;
        }
        s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size()));
        return s;
    }

    std::vector<double> apply(std::span<const double> xs) const {
        std::vector<double> z(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) z[i] = (xs[i] - mean) / sd;
        return z;
    }

    GaussianHmm to_original(GaussianHmm m) const {
        for (auto& mu : m.means) mu = mu * sd + mean;
        for (auto& v : m.variances) v *= sd * sd;
        return m;
    }
};

void check_observations(std::span<const double> obs) {
    for (double o : obs) {
        if (!std::isfinite(o) || o < 0.0) {
            throw std::domain_error(fmt::format("fit_baum_welch: observation {} is not finite and non-negative", o));
        }
    }
}

GaussianHmm initial_standardized(std::span<const double> z, std::size_t n, int restart, std::uint64_t seed) {
    std::vector<double> sorted(z.begin(), z.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t T = sorted.size();

    GaussianHmm m;
    m.initial.assign(n, 1.0 / static_cast<double>(n));
    m.transitions.assign(n * n, n > 1 ? 0.1 / static_cast<double>(n - 1) : 1.0);
    for (std::size_t k = 0; k < n; ++k) m.transitions[k * n + k] = n > 1 ? 0.9 : 1.0;

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k * T / n;
        const std::size_t hi = (k + 1) * T / n;
        double mean = 0.0;
        for (std::size_t i = lo; i < hi; ++i) mean += sorted[i];
        mean /= static_cast<double>(hi - lo);
        double var = 0.0;
        for (std::size_t i = lo; i < hi; ++i) var += (sorted[i] - mean) * (sorted[i] - mean);
        var /= static_cast<double>(hi - lo);
        m.means.push_back(mean);
        // Total variance is 1 after standardization; keep groups from starting spiky.
        m.variances.push_back(std::max(var, 1e-2));
    }

    if (restart > 0) {
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(restart)));
        std::normal_distribution<double> jitter(0.0, 0.5);
        for (auto& mu : m.means) mu += jitter(rng);
        for (auto& v : m.variances) v *= std::exp(jitter(rng));
    }
    return m;
}

}  // namespace

void GaussianHmm::validate() const {
    const std::size_t n = n_states();
    if (n == 0 || transitions.size() != n * n || means.size() != n || variances.size() != n) {
        throw std::domain_error("GaussianHmm: inconsistent shapes");
    }
    auto check_stochastic = [](auto first, auto last, const char* what) {
        double s = 0.0;
        for (auto it = first; it != last; ++it) {
            if (!(*it >= 0.0)) throw std::domain_error(fmt::format("GaussianHmm: negative {}", what));
            s += *it;
        }
        if (std::abs(s - 1.0) > 1e-9) throw std::domain_error(fmt::format("GaussianHmm: {} does not sum to 1", what));
    };
    check_stochastic(initial.begin(), initial.end(), "initial distribution");
    for (std::size_t i = 0; i < n; ++i) {
        check_stochastic(transitions.begin() + static_cast<std::ptrdiff_t>(i * n),
                         transitions.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), "transition row");
    }
    for (double v : variances) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("GaussianHmm: variance must be positive");
    }
}

double log_emission(const GaussianHmm& model, std::size_t state, double observation) {
    return log_normal(observation, model.means[state], model.variances[state]);
}

Posteriors forward_backward(const GaussianHmm& model, std::span<const double> observations) {
    if (observations.empty()) throw std::domain_error("forward_backward: no observations");
    auto e = expectation(model, observations, false);
    return {std::move(e.gamma), e.log_likelihood};
}

double log_likelihood(const GaussianHmm& model, std::span<const double> observations) {
    return forward_backward(model, observations).log_likelihood;
}

GaussianHmm initial_hmm(std::span<const double> observations, std::size_t n_states, int restart,
                        std::uint64_t seed) {
    if (n_states == 0 || observations.size() <= n_states) {
        throw std::domain_error("initial_hmm: need more observations than states");
    }
    const auto stdz = Standardizer::of(observations);
    if (!(stdz.sd > 0.0)) throw DegenerateDataError("initial_hmm: all observations are identical");
    const auto z = stdz.apply(observations);
    return stdz.to_original(initial_standardized(z, n_states, restart, seed));
}

HmmFit fit_baum_welch(std::span<const double> observations, const HmmFitOptions& options) {
    const std::size_t n = options.n_states;
    if (n == 0) throw std::domain_error("fit_baum_welch: n_states must be positive");
    check_observations(observations);
    const std::size_t needed = options.max_iters == 0 ? n + 1 : 2 * n;
    if (observations.size() < needed) {
        throw std::domain_error(fmt::format("fit_baum_welch: {} observations, need at least {}",
                                            observations.size(), needed));
    }
    const auto stdz = Standardizer::of(observations);
    if (!(stdz.sd > 0.0)) throw DegenerateDataError("fit_baum_welch: all observations are identical");
    const auto z = stdz.apply(observations);
    // Log-likelihood of the original data differs by the Jacobian of the z-score.
    const double ll_shift = -static_cast<double>(observations.size()) * std::log(stdz.sd);

    const int restarts = options.max_iters == 0 ? 1 : std::max(1, options.restarts);
    HmmFit best;
    bool have_best = false;
    for (int r = 0; r < restarts; ++r) {
        GaussianHmm model = initial_standardized(z, n, r, options.seed);
        EStep e = expectation(model, z, true);
        std::vector<double> trace{e.log_likelihood};
        int iters = 0;
        for (int it = 0; it < options.max_iters; ++it) {
            GaussianHmm next = maximization(model, e, z);
            EStep next_e = expectation(next, z, true);
            const double gain = next_e.log_likelihood - e.log_likelihood;
            model = std::move(next);
            e = std::move(next_e);
            trace.push_back(e.log_likelihood);
            ++iters;
            if (gain < options.tol) break;
        }
        if (!have_best || e.log_likelihood > best.log_likelihood) {
            best.model = model;
            best.log_likelihood = e.log_likelihood;
            best.log_likelihood_trace = std::move(trace);
            best.iterations = iters;
            best.restart = r;
            have_best = true;
        }
    }

    best.model = stdz.to_original(std::move(best.model));
    best.log_likelihood += ll_shift;
    for (auto& ll : best.log_likelihood_trace) ll += ll_shift;
    return best;
}

std::vector<std::size_t> viterbi(const GaussianHmm& model, std::span<const double> observations) {
    if (observations.empty()) throw std::domain_error("viterbi: no observations");
    const std::size_t n = model.n_states();
    const std::size_t T = observations.size();

    std::vector<double> log_a(n * n);
    for (std::size_t k = 0; k < n * n; ++k) log_a[k] = std::log(model.transitions[k]);

    std::vector<double> delta(n), next(n);
    std::vector<std::size_t> back(T * n, 0);
    for (std::size_t k = 0; k < n; ++k) delta[k] = std::log(model.initial[k]) + log_emission(model, k, observations[0]);

    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t arg = 0;
            double best = delta[0] + log_a[j];
            for (std::size_t i = 1; i < n; ++i) {
                const double cand = delta[i] + log_a[i * n + j];
                if (cand > best) {
                    best = cand;
                    arg = i;
                }
            }
            next[j] = best + log_emission(model, j, observations[t]);
            back[t * n + j] = arg;
        }
        std::swap(delta, next);
    }

    std::vector<std::size_t> path(T);
    std::size_t state = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (delta[k] > delta[state]) state = k;
    }
    path[T - 1] = state;
    for (std::size_t t = T - 1; t > 0; --t) {
        state = back[t * n + state];
        path[t - 1] = state;
    }
    return path;
}

std::string_view to_string(RegimeLabel label) {
    return label == RegimeLabel::Abnormal ? "abnormal" : "normal";
}

RegimeMap label_regimes(const GaussianHmm& model) {
    if (model.n_states() != 2) throw std::domain_error("label_regimes: expects a two-state model");
    const bool second = model.means[1] > model.means[0] ||
                        (model.means[1] == model.means[0] && model.variances[1] >= model.variances[0]);
    return RegimeMap{second ? std::size_t{1} : std::size_t{0}};
}

RegimeLabel predict_regime(const GaussianHmm& model, const RegimeMap& map, std::span<const double> history) {
    if (history.empty()) throw std::domain_error("predict_regime: empty history");
    return map(viterbi(model, history).back());
}

RegimeLabel predict_regime(const GaussianHmm& model, std::span<const double> history) {
    return predict_regime(model, label_regimes(model), history);
}

void write_model(std::ostream& out, const GaussianHmm& model, const RegimeMap& map) {
    const std::size_t n = model.n_states();
    for (std::size_t i = 0; i < n; ++i) out << fmt::format("pi_{} = {}\n", i, model.initial[i]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out << fmt::format("a_{}{} = {}\n", i, j, model.transition(i, j));
    }
    for (std::size_t i = 0; i < n; ++i) {
        out << fmt::format("mu_{} = {}\nvar_{} = {}\n", i, model.means[i], i, model.variances[i]);
    }
    out << fmt::format("abnormal_state = {}\n", map.abnormal_state);
}

GaussianHmm read_model(std::istream& in, RegimeMap* map) {
    std::map<std::string, double> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        kv[strip(line.substr(0, eq))] = std::stod(strip(line.substr(eq + 1)));
    }
    auto get = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error(fmt::format("model file: missing key '{}'", key));
        return it->second;
    };
    GaussianHmm m;
    constexpr std::size_t n = 2;
    for (std::size_t i = 0; i < n; ++i) m.initial.push_back(get(fmt::format("pi_{}", i)));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m.transitions.push_back(get(fmt::format("a_{}{}", i, j)));
    }
    for (std::size_t i = 0; i < n; ++i) {
        m.means.push_back(get(fmt::format("mu_{}", i)));
        m.variances.push_back(get(fmt::format("var_{}", i)));
    }
    m.validate();
    if (map) map->abnormal_state = static_cast<std::size_t>(get("abnormal_state"));
    return m;
}

}  // namespace dcta
