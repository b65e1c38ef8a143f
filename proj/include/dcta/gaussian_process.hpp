#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dcta {

/// Zero-mean GP regression with an ARD Matern-5/2 kernel over the unit box.
/// Targets are standardized internally. The kernel amplitude is profiled out
/// of the marginal likelihood, leaving the per-dimension length scales to a
/// grid-plus-compass search.
class GaussianProcess {
public:
    struct Prediction {
        double mean = 0.0;      // original target units
        double stddev = 0.0;
    };

    explicit GaussianProcess(double nugget = 1e-6) : nugget_(nugget) {}

    /// `points` is n x d. Throws std::domain_error on empty input.
    void fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& targets);

    Prediction predict(const Eigen::VectorXd& x) const;

    const Eigen::VectorXd& length_scales() const noexcept { return length_scales_; }
    double log_marginal_likelihood() const noexcept { return lml_; }

private:
    Eigen::MatrixXd correlation_matrix(const Eigen::VectorXd& ls) const;  // includes the nugget
    double profile_lml(const Eigen::VectorXd& log_ls) const;
    void factorize(const Eigen::VectorXd& ls);

    double nugget_;
    Eigen::MatrixXd x_;
    std::vector<Eigen::MatrixXd> sqdiff_;  // per-dimension squared pairwise differences
    Eigen::VectorXd z_;  // standardized targets
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Eigen::VectorXd length_scales_;
    double amplitude_ = 1.0;  // profiled kernel variance, standardized units
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd weights_;
    double lml_ = 0.0;
};

/// Expected improvement over `best` for a maximization problem.
double expected_improvement(double mean, double stddev, double best);

/// n points in [0,1]^dim, one per stratum along each axis.
Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t dim, std::mt19937_64& rng);

/// Radical-inverse Halton point `index` (1-based) in `dim` <= 8 dimensions.
Eigen::VectorXd halton_point(std::size_t index, std::size_t dim);

}  // namespace dcta
