#pragma once

#include "catcox/newton.hpp"
#include "catcox/stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace catcox {

using StatusVec = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class ColumnKind { continuous, binary, categorical_expanded };

/**
 * Right-censored survival observations: covariates (n x p), observed times and
 * event indicators. Immutable after construction; the constructor validates.
 */
template <typename Scalar>
class SurvivalData {
public:
    SurvivalData() = default;

    SurvivalData(Mat<Scalar> covariates, Vec<Scalar> times, StatusVec status,
                 std::vector<ColumnKind> schema = {})
        : x_(std::move(covariates)), time_(std::move(times)), status_(std::move(status)),
          schema_(std::move(schema))
    {
        if (x_.rows() < 1 || x_.cols() < 1) throw std::invalid_argument("SurvivalData: need n >= 1 and p >= 1");
        if (time_.size() != x_.rows() || status_.size() != x_.rows()) {
            throw std::invalid_argument("SurvivalData: times/status length must equal covariate rows");
        }
        if (!x_.allFinite()) throw std::invalid_argument("SurvivalData: covariates contain non-finite values");
        for (Index i = 0; i < time_.size(); ++i) {
            if (!(time_[i] > 0) || !std::isfinite(static_cast<double>(time_[i]))) {
                throw std::invalid_argument("SurvivalData: times must be positive and finite (row " +
                                            std::to_string(i) + ")");
            }
        }
        if (schema_.empty()) schema_.assign(static_cast<std::size_t>(x_.cols()), ColumnKind::continuous);
        if (static_cast<Index>(schema_.size()) != x_.cols()) {
            throw std::invalid_argument("SurvivalData: schema length must equal covariate columns");
        }
    }

    const Mat<Scalar>& covariates() const { return x_; }
    const Vec<Scalar>& times() const { return time_; }
    const StatusVec& status() const { return status_; }
    const std::vector<ColumnKind>& schema() const { return schema_; }
    Index rows() const { return x_.rows(); }
    Index cols() const { return x_.cols(); }
    Index event_count() const { return status_.count(); }

    SurvivalData subset(std::span<const Index> rows) const
    {
        Mat<Scalar> x(static_cast<Index>(rows.size()), cols());
        Vec<Scalar> t(static_cast<Index>(rows.size()));
        StatusVec s(static_cast<Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            x.row(static_cast<Index>(k)) = x_.row(rows[k]);
            t[static_cast<Index>(k)] = time_[rows[k]];
            s[static_cast<Index>(k)] = status_[rows[k]];
        }
        return SurvivalData(std::move(x), std::move(t), std::move(s), schema_);
    }

    SurvivalData with_covariates(Mat<Scalar> covariates) const
    {
        return SurvivalData(std::move(covariates), time_, status_, schema_);
    }

private:
    Mat<Scalar> x_;
    Vec<Scalar> time_;
    StatusVec status_;
    std::vector<ColumnKind> schema_;
};

/**
 * Distinct-time grouping of a sample. Records are ordered by ascending time; each
 * group covers the records sharing one time value. The risk set at a group's time
 * is every record in that group or a later one, so subjects censored at t stay at
 * risk at t.
 */
template <typename Scalar>
class RiskIndex {
public:
    struct Group {
        Index begin = 0;  // positions into order()
        Index end = 0;
        Scalar time = 0;
        bool has_event = false;
    };

    RiskIndex() = default;

    RiskIndex(const Vec<Scalar>& times, const StatusVec& status)
    {
        const Index n = times.size();
        order_.resize(static_cast<std::size_t>(n));
        std::iota(order_.begin(), order_.end(), Index(0));
        std::stable_sort(order_.begin(), order_.end(), [&](Index a, Index b) { return times[a] < times[b]; });
        Index k = 0;
        while (k < n) {
            Group g;
            g.begin = k;
            g.time = times[order_[static_cast<std::size_t>(k)]];
            while (k < n && times[order_[static_cast<std::size_t>(k)]] == g.time) {
                g.has_event = g.has_event || status[order_[static_cast<std::size_t>(k)]];
                ++k;
            }
            g.end = k;
            groups_.push_back(g);
        }
    }

    const std::vector<Index>& order() const { return order_; }
    const std::vector<Group>& groups() const { return groups_; }

    /// Sorted distinct event times.
    std::vector<Scalar> event_times() const
    {
        std::vector<Scalar> out;
        for (const auto& g : groups_) if (g.has_event) out.push_back(g.time);
        return out;
    }

    /// Indices at risk at the given group's time.
    std::vector<Index> at_risk(std::size_t group) const
    {
        return {order_.begin() + groups_.at(group).begin, order_.end()};
    }

    /// Indices failing at the given group's time.
    std::vector<Index> failures(std::size_t group, const StatusVec& status) const
    {
        std::vector<Index> out;
        const auto& g = groups_.at(group);
        for (Index k = g.begin; k < g.end; ++k) {
            const Index i = order_[static_cast<std::size_t>(k)];
            if (status[i]) out.push_back(i);
        }
        return out;
    }

private:
    std::vector<Index> order_;
    std::vector<Group> groups_;
};

enum class Derivatives { none, gradient, hessian };

/**
 * Weighted Breslow partial likelihood
 *
 *   sum over event times t of  sum_{l in D(t)} w_l x_l'b  -  d_w(t) log sum_{j in R(t)} w_j exp(x_j'b),
 *
 * with d_w(t) the total weight of failures at t. Unit weights give the ordinary
 * Cox partial likelihood. Risk-set sums are accumulated in one reverse sweep with
 * a running maximum of the linear predictor so that no exponential overflows.
 */
template <typename Scalar>
class CoxPartialLikelihood {
public:
    CoxPartialLikelihood(Mat<Scalar> covariates, Vec<Scalar> times, StatusVec status, Vec<Scalar> weights)
        : x_(std::move(covariates)), status_(std::move(status)), weight_(std::move(weights)),
          index_(times, status_)
    {
        if (weight_.size() != x_.rows()) throw std::invalid_argument("CoxPartialLikelihood: weight length");
        if ((weight_.array() <= 0).any()) throw std::invalid_argument("CoxPartialLikelihood: weights must be positive");
        max_weight_ = weight_.size() ? weight_.maxCoeff() : Scalar(1);
    }

    explicit CoxPartialLikelihood(const SurvivalData<Scalar>& data)
        : CoxPartialLikelihood(data.covariates(), data.times(), data.status(),
                               Vec<Scalar>::Ones(data.rows()))
    {}

    Index dim() const { return x_.cols(); }
    Scalar scale() const { return max_weight_; }
    const RiskIndex<Scalar>& risk_index() const { return index_; }

    Scalar value(const Vec<Scalar>& beta) const { return compute(beta, Derivatives::none).value; }
    Evaluation<Scalar> evaluate(const Vec<Scalar>& beta) const { return compute(beta, Derivatives::hessian); }

    Evaluation<Scalar> compute(const Vec<Scalar>& beta, Derivatives level) const
    {
        using std::exp;
        using std::log;
        const Index p = x_.cols();
        if (beta.size() != p) throw std::invalid_argument("partial likelihood: beta has wrong length");
        if (!beta.allFinite()) throw std::domain_error("partial likelihood: beta must be finite");

        const Vec<Scalar> eta = x_ * beta;
        if (!eta.allFinite()) throw std::overflow_error("partial likelihood: linear predictor overflow");

        const bool want_grad = level != Derivatives::none;
        const bool want_hess = level == Derivatives::hessian;

        Evaluation<Scalar> out;
        if (want_grad) out.gradient = Vec<Scalar>::Zero(p);
        if (want_hess) out.neg_hessian = Mat<Scalar>::Zero(p, p);

        Scalar shift = -std::numeric_limits<Scalar>::infinity();
        Scalar s0 = 0;
        Vec<Scalar> s1 = Vec<Scalar>::Zero(want_grad ? p : 0);
        Mat<Scalar> s2 = Mat<Scalar>::Zero(want_hess ? p : 0, want_hess ? p : 0);
        Vec<Scalar> fail_x = Vec<Scalar>::Zero(want_grad ? p : 0);

        const auto& order = index_.order();
        const auto& groups = index_.groups();
        for (auto g = groups.rbegin(); g != groups.rend(); ++g) {
            Scalar d = 0;
            Scalar fail_eta = 0;
            if (want_grad) fail_x.setZero();
            for (Index k = g->begin; k < g->end; ++k) {
                const Index i = order[static_cast<std::size_t>(k)];
                const Scalar w = weight_[i];
                if (eta[i] > shift) {
                    const Scalar rescale = exp(shift - eta[i]);
                    s0 *= rescale;
                    if (want_grad) s1 *= rescale;
                    if (want_hess) s2 *= rescale;
                    shift = eta[i];
                }
                const Scalar r = w * exp(eta[i] - shift);
                s0 += r;
                if (want_grad) s1.noalias() += r * x_.row(i).transpose();
                if (want_hess) s2.template selfadjointView<Eigen::Lower>().rankUpdate(x_.row(i).transpose(), r);
                if (status_[i]) {
                    d += w;
                    fail_eta += w * eta[i];
                    if (want_grad) fail_x.noalias() += w * x_.row(i).transpose();
                }
            }
            if (d == 0) continue;
            out.value += fail_eta - d * (shift + log(s0));
            if (want_grad) {
                const Vec<Scalar> mean = s1 / s0;
                out.gradient.noalias() += fail_x - d * mean;
                if (want_hess) {
                    Mat<Scalar> cov = s2.template selfadjointView<Eigen::Lower>();
                    cov /= s0;
                    cov.noalias() -= mean * mean.transpose();
                    out.neg_hessian.noalias() += d * cov;
                }
            }
        }
        if (!std::isfinite(static_cast<double>(out.value))) {
            throw std::overflow_error("partial likelihood: non-finite value");
        }
        if (want_hess) out.neg_hessian = (out.neg_hessian + out.neg_hessian.transpose()) / 2;
        return out;
    }

private:
    Mat<Scalar> x_;
    StatusVec status_;
    Vec<Scalar> weight_;
    RiskIndex<Scalar> index_;
    Scalar max_weight_ = 1;
};

template <typename Scalar>
Scalar log_partial_likelihood(const Vec<Scalar>& beta, const SurvivalData<Scalar>& data)
{
    return CoxPartialLikelihood<Scalar>(data).value(beta);
}

template <typename Scalar>
struct PlDerivatives {
    Vec<Scalar> gradient;
    Mat<Scalar> neg_hessian;
};

template <typename Scalar>
PlDerivatives<Scalar> pl_derivatives(const Vec<Scalar>& beta, const SurvivalData<Scalar>& data)
{
    auto ev = CoxPartialLikelihood<Scalar>(data).evaluate(beta);
    return {std::move(ev.gradient), std::move(ev.neg_hessian)};
}

/// Maximum partial likelihood estimate, started at zero.
template <typename Scalar>
FitResult<Scalar> mple(const SurvivalData<Scalar>& data, const SolverOptions& opts = {})
{
    if (data.event_count() < 1) throw std::invalid_argument("mple: at least one event is required");
    const CoxPartialLikelihood<Scalar> pl(data);
    return newton_maximize<Scalar>(pl, Vec<Scalar>::Zero(data.cols()), opts);
}

template <typename Scalar>
struct Interval {
    Scalar lower = 0;
    Scalar upper = 0;
};

/**
 * Normal-approximation intervals beta_j +/- z * sqrt((I^-1)_jj) from the observed
 * information at the fit.
 */
template <typename Scalar>
std::vector<Interval<Scalar>> wald_intervals(const FitResult<Scalar>& fit, Scalar level)
{
    if (!fit.converged) throw std::invalid_argument("wald_intervals: fit did not converge");
    if (!(level > 0 && level < 1)) throw std::invalid_argument("wald_intervals: level must lie in (0,1)");
    const Index p = fit.beta.size();
    Eigen::LLT<Mat<Scalar>> llt(fit.neg_hessian);
    if (llt.info() != Eigen::Success) throw std::runtime_error("wald_intervals: information matrix is singular");
    const Mat<Scalar> cov = llt.solve(Mat<Scalar>::Identity(p, p));
    if (!cov.allFinite()) throw std::runtime_error("wald_intervals: information matrix is singular");
    const Scalar z = normal_quantile<Scalar>((Scalar(1) + level) / 2);
    std::vector<Interval<Scalar>> out(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        const Scalar half = z * std::sqrt(cov(j, j));
        out[static_cast<std::size_t>(j)] = {fit.beta[j] - half, fit.beta[j] + half};
    }
    return out;
}

/// Test-set partial log-likelihood of the reference minus that of the estimate.
template <typename Scalar>
Scalar predictive_deviance(const Vec<Scalar>& beta_ref, const Vec<Scalar>& beta_hat, const SurvivalData<Scalar>& test)
{
    const CoxPartialLikelihood<Scalar> pl(test);
    return pl.value(beta_ref) - pl.value(beta_hat);
}

/// Twice the test-set log partial likelihood gain over the null model.
template <typename Scalar>
Scalar prediction_score(const Vec<Scalar>& beta_hat, const SurvivalData<Scalar>& test)
{
    const CoxPartialLikelihood<Scalar> pl(test);
    return 2 * (pl.value(beta_hat) - pl.value(Vec<Scalar>::Zero(beta_hat.size())));
}

} // namespace catcox
