#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace dcta {

class DegenerateDataError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline constexpr double kVarianceFloor = 1e-12;  // standardized units

/// Gaussian-emission HMM over a scalar observation. Transitions are stored
/// row-major: transitions[i * n + j] = P(next = j | current = i).
struct GaussianHmm {
    std::vector<double> initial;
    std::vector<double> transitions;
    std::vector<double> means;
    std::vector<double> variances;

    std::size_t n_states() const noexcept { return initial.size(); }
    double transition(std::size_t from, std::size_t to) const { return transitions[from * n_states() + to]; }

    /// Checks shape, stochasticity (1e-9) and positive variances.
    void validate() const;

    friend bool operator==(const GaussianHmm&, const GaussianHmm&) = default;
};

double log_emission(const GaussianHmm& model, std::size_t state, double observation);

struct Posteriors {
    std::vector<double> gamma;  // T x n, row-major
    double log_likelihood = 0.0;
};

/// Scaled forward-backward pass.
Posteriors forward_backward(const GaussianHmm& model, std::span<const double> observations);

double log_likelihood(const GaussianHmm& model, std::span<const double> observations);

struct HmmFitOptions {
    std::size_t n_states = 2;
    int max_iters = 200;
    double tol = 1e-6;
    int restarts = 5;
    std::uint64_t seed = 0;
};

struct HmmFit {
    GaussianHmm model;                  // original units
    double log_likelihood = 0.0;        // original units
    std::vector<double> log_likelihood_trace;  // one entry per evaluated model
    int iterations = 0;                 // EM updates applied
    int restart = 0;                    // which restart won
};

/// Starting point for restart `restart` (0 is the unjittered median split),
/// in original units.
GaussianHmm initial_hmm(std::span<const double> observations, std::size_t n_states, int restart,
                        std::uint64_t seed);

/// Baum-Welch on z-scored observations, best of `restarts` seeded starts.
/// With max_iters == 0 the restart-0 starting point is returned as is.
HmmFit fit_baum_welch(std::span<const double> observations, const HmmFitOptions& options = {});

/// MAP state path. Ties go to the lower state index at every step.
std::vector<std::size_t> viterbi(const GaussianHmm& model, std::span<const double> observations);

enum class RegimeLabel { Normal, Abnormal };

std::string_view to_string(RegimeLabel label);

struct RegimeMap {
    std::size_t abnormal_state = 1;

    RegimeLabel operator()(std::size_t state) const noexcept {
        return state == abnormal_state ? RegimeLabel::Abnormal : RegimeLabel::Normal;
    }
};

/// The state with the larger emission mean is Abnormal; on equal means the
/// one with larger variance; on a full tie the higher index.
RegimeMap label_regimes(const GaussianHmm& model);

/// Label of the last state of the Viterbi path over the whole history.
RegimeLabel predict_regime(const GaussianHmm& model, std::span<const double> history);
RegimeLabel predict_regime(const GaussianHmm& model, const RegimeMap& map, std::span<const double> history);

// Flat `key = value` lines: pi_0, pi_1, a_00, a_01, a_10, a_11, mu_0, var_0,
// mu_1, var_1, abnormal_state.
void write_model(std::ostream& out, const GaussianHmm& model, const RegimeMap& map);
GaussianHmm read_model(std::istream& in, RegimeMap* map = nullptr);

}  // namespace dcta
