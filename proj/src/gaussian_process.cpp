#include "dcta/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dcta {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr double kLogLsMin = -4.605170185988091;  // log 0.01
constexpr double kLogLsMax = 2.302585092994046;   // log 10
constexpr double kDefaultLengthScale = 0.2;

double matern52(double r) {
    const double s = kSqrt5 * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

}  // namespace

Eigen::MatrixXd GaussianProcess::correlation_matrix(const Eigen::VectorXd& ls) const {
    const Eigen::Index n = x_.rows();
    Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index d = 0; d < ls.size(); ++d) r2 += sqdiff_[static_cast<std::size_t>(d)] / (ls(d) * ls(d));
    Eigen::MatrixXd c = r2.unaryExpr([](double v) { return matern52(std::sqrt(v)); });
    c.diagonal().array() += nugget_;
    return c;
}

double GaussianProcess::profile_lml(const Eigen::VectorXd& log_ls) const {
    const Eigen::Index n = x_.rows();
    const Eigen::MatrixXd c = correlation_matrix(log_ls.array().exp().matrix());
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const double quad = z_.dot(llt.solve(z_));
    const double amp = quad / static_cast<double>(n);
    if (!(amp > 0.0)) return -std::numeric_limits<double>::infinity();
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * static_cast<double>(n) * std::log(amp) - 0.5 * log_det - 0.5 * static_cast<double>(n);
}

void GaussianProcess::factorize(const Eigen::VectorXd& ls) {
    const Eigen::Index n = x_.rows();
    const Eigen::MatrixXd c = correlation_matrix(ls);
    // Escalate the diagonal until the factorization succeeds; duplicated
    // points with a tiny nugget can be numerically singular.
    double extra = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        chol_.compute(c + extra * Eigen::MatrixXd::Identity(n, n));
        if (chol_.info() == Eigen::Success) break;
        extra = extra == 0.0 ? 1e-10 : extra * 10.0;
    }
    if (chol_.info() != Eigen::Success) throw std::runtime_error("GaussianProcess: covariance is not positive definite");
    length_scales_ = ls;
    weights_ = chol_.solve(z_);
    const double quad = z_.dot(weights_);
    amplitude_ = quad > 0.0 ? quad / static_cast<double>(n) : 1.0;
}

void GaussianProcess::fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& targets) {
    if (points.rows() == 0 || points.rows() != targets.size()) {
        throw std::domain_error("GaussianProcess::fit: need matching, non-empty points and targets");
    }
    x_ = points;
    sqdiff_.clear();
    for (Eigen::Index d = 0; d < points.cols(); ++d) {
        const Eigen::VectorXd col = points.col(d);
        Eigen::MatrixXd diff = col.replicate(1, points.rows()) - col.transpose().replicate(points.rows(), 1);
        sqdiff_.push_back(diff.array().square().matrix());
    }
    const double n = static_cast<double>(targets.size());
    y_mean_ = targets.mean();
    const double var = (targets.array() - y_mean_).square().sum() / n;
    y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
    z_ = (targets.array() - y_mean_) / y_scale_;

    const Eigen::Index dim = points.cols();
    if (!(var > 0.0) || points.rows() < 2) {
        factorize(Eigen::VectorXd::Constant(dim, kDefaultLengthScale));
        amplitude_ = 1.0;
        lml_ = 0.0;
        return;
    }

    // Coarse grid over log length scales, then compass refinement.
    constexpr int kGrid = 9;
    const double step0 = (kLogLsMax - kLogLsMin) / (kGrid - 1);
    Eigen::VectorXd best = Eigen::VectorXd::Constant(dim, std::log(kDefaultLengthScale));
    double best_val = profile_lml(best);
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (;;) {
        Eigen::VectorXd cand(dim);
        for (Eigen::Index d = 0; d < dim; ++d) cand(d) = kLogLsMin + step0 * idx[static_cast<std::size_t>(d)];
        const double v = profile_lml(cand);
        if (v > best_val) {
            best_val = v;
            best = cand;
        }
        std::size_t d = 0;
        while (d < idx.size() && ++idx[d] == kGrid) idx[d++] = 0;
        if (d == idx.size()) break;
    }
    for (double step = step0 / 2.0; step > 0.02; step /= 2.0) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (Eigen::Index d = 0; d < dim; ++d) {
                for (double sign : {1.0, -1.0}) {
                    Eigen::VectorXd cand = best;
                    cand(d) = std::clamp(cand(d) + sign * step, kLogLsMin, kLogLsMax);
                    const double v = profile_lml(cand);
                    if (v > best_val) {
                        best_val = v;
                        best = cand;
                        improved = true;
                    }
                }
            }
        }
    }
    factorize(best.array().exp());
    lml_ = best_val;
}

GaussianProcess::Prediction GaussianProcess::predict(const Eigen::VectorXd& x) const {
    const Eigen::Index n = x_.rows();
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        c(i) = matern52(((x_.row(i).transpose() - x).array() / length_scales_.array()).matrix().norm());
    }
    const double mean_z = c.dot(weights_);
    const double var_z = amplitude_ * std::max(0.0, 1.0 - c.dot(chol_.solve(c)));
    return {y_mean_ + y_scale_ * mean_z, y_scale_ * std::sqrt(var_z)};
}

double expected_improvement(double mean, double stddev, double best) {
    const double gap = mean - best;
    if (!(stddev > 0.0)) return std::max(gap, 0.0);
    const double z = gap / stddev;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    return gap * cdf + stddev * pdf;
}

Eigen::MatrixXd latin_hypercube(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < dim; ++d) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
                (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(n);
        }
    }
    return out;
}

Eigen::VectorXd halton_point(std::size_t index, std::size_t dim) {
    static constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    if (dim > std::size(kPrimes)) throw std::domain_error("halton_point: at most 8 dimensions");
    Eigen::VectorXd p(static_cast<Eigen::Index>(dim));
    for (std::size_t d = 0; d < dim; ++d) {
        double f = 1.0, r = 0.0;
        for (std::size_t i = index; i > 0; i /= kPrimes[d]) {
            f /= kPrimes[d];
            r += f * static_cast<double>(i % kPrimes[d]);
        }
        p(static_cast<Eigen::Index>(d)) = r;
    }
    return p;
}

}  // namespace dcta
