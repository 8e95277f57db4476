#pragma once

#include "catcox/newton.hpp"
#include "catcox/survival_core.hpp"
#include "catcox/synthesis.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace catcox {

/**
 * Log partial likelihood plus the catalytic log prior. The maximizer is the
 * catalytic-regularized estimate.
 */
template <typename Scalar>
class CatalyticObjective {
public:
    CatalyticObjective(const SurvivalData<Scalar>& data, const CatalyticPrior<Scalar>& prior)
        : pl_(data), prior_(prior), penalty_(prior_.log_density())
    {
        if (prior.dim() != data.cols()) throw std::invalid_argument("CRE: prior and data dimensions differ");
    }

    // penalty_ points into prior_, so the object is pinned
    CatalyticObjective(const CatalyticObjective&) = delete;
    CatalyticObjective& operator=(const CatalyticObjective&) = delete;

    Scalar scale() const { return std::max<Scalar>(pl_.scale(), prior_.tau()); }
    Scalar value(const Vec<Scalar>& beta) const { return pl_.value(beta) + penalty_.value(beta); }

    Evaluation<Scalar> evaluate(const Vec<Scalar>& beta) const
    {
        auto a = pl_.evaluate(beta);
        const auto b = penalty_.evaluate(beta);
        a.value += b.value;
        a.gradient += b.gradient;
        a.neg_hessian += b.neg_hessian;
        return a;
    }

    const CoxPartialLikelihood<Scalar>& partial_likelihood() const { return pl_; }

private:
    CoxPartialLikelihood<Scalar> pl_;
    CatalyticPrior<Scalar> prior_;
    SyntheticLikelihood<Scalar> penalty_;
};

template <typename Scalar>
FitResult<Scalar> cre(const SurvivalData<Scalar>& data, const CatalyticPrior<Scalar>& prior, const SolverOptions& opts = {})
{
    const CatalyticObjective<Scalar> objective(data, prior);
    return newton_maximize<Scalar>(objective, Vec<Scalar>::Zero(data.cols()), opts);
}

/// Observed rows (weight 1, observed status) stacked over synthetic rows (weight tau/M, all events).
template <typename Scalar>
struct MergedWeightedData {
    Mat<Scalar> covariates;
    Vec<Scalar> times;
    StatusVec status;
    Vec<Scalar> weights;
    Index observed = 0;
};

template <typename Scalar>
MergedWeightedData<Scalar> merge_weighted(const SurvivalData<Scalar>& data, const SyntheticDataset<Scalar>& synth, Scalar tau)
{
    if (!(tau > 0)) throw std::invalid_argument("WME: tau must be positive");
    if (synth.cols() != data.cols()) throw std::invalid_argument("WME: synthetic and observed dimensions differ");
    const Index n = data.rows();
    const Index M = synth.size();
    MergedWeightedData<Scalar> m;
    m.observed = n;
    m.covariates.resize(n + M, data.cols());
    m.covariates << data.covariates(), synth.covariates;
    m.times.resize(n + M);
    m.times << data.times(), synth.times;
    m.status.resize(n + M);
    m.status << data.status(), StatusVec::Constant(M, true);
    m.weights.resize(n + M);
    m.weights << Vec<Scalar>::Ones(n), Vec<Scalar>::Constant(M, tau / static_cast<Scalar>(M));
    return m;
}

template <typename Scalar>
CoxPartialLikelihood<Scalar> wme_objective(const SurvivalData<Scalar>& data, const SyntheticDataset<Scalar>& synth, Scalar tau)
{
    auto m = merge_weighted(data, synth, tau);
    return CoxPartialLikelihood<Scalar>(std::move(m.covariates), std::move(m.times), std::move(m.status),
                                        std::move(m.weights));
}

/// Weighted mixture estimate: weighted Breslow partial likelihood over observed and synthetic rows.
template <typename Scalar>
FitResult<Scalar> wme(const SurvivalData<Scalar>& data, const SyntheticDataset<Scalar>& synth, Scalar tau,
                      const SolverOptions& opts = {})
{
    const auto objective = wme_objective(data, synth, tau);
    return newton_maximize<Scalar>(objective, Vec<Scalar>::Zero(data.cols()), opts);
}

/// Column centering and scaling, so that penalties act on unit-variance covariates.
template <typename Scalar>
struct Standardizer {
    Vec<Scalar> center;
    Vec<Scalar> scale;

    static Standardizer fit(const Mat<Scalar>& x)
    {
        Standardizer s;
        const Index n = x.rows();
        s.center = x.colwise().mean().transpose();
        s.scale.resize(x.cols());
        for (Index j = 0; j < x.cols(); ++j) {
            const Scalar ss = (x.col(j).array() - s.center[j]).square().sum();
            const Scalar sd = n > 1 ? std::sqrt(ss / static_cast<Scalar>(n - 1)) : Scalar(0);
            s.scale[j] = sd > 0 ? sd : Scalar(1);
        }
        return s;
    }

    static Standardizer identity(Index p) { return {Vec<Scalar>::Zero(p), Vec<Scalar>::Ones(p)}; }

    Mat<Scalar> apply(const Mat<Scalar>& x) const
    {
        return ((x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    }

    /// Coefficients on the standardized scale mapped back to the raw covariate scale.
    void to_raw_scale(FitResult<Scalar>& fit) const
    {
        fit.beta = fit.beta.cwiseQuotient(scale);
        fit.neg_hessian = scale.asDiagonal() * fit.neg_hessian * scale.asDiagonal();
    }
};

struct PenaltyOptions {
    bool standardize = true;
    SolverOptions solver{};
    double lasso_tolerance = 1e-7;
    int lasso_max_outer = 200;
    int lasso_max_sweeps = 10000;
};

/// Log partial likelihood minus lambda * ||beta||^2.
template <typename Scalar>
class RidgeObjective {
public:
    RidgeObjective(const SurvivalData<Scalar>& data, Scalar lambda) : pl_(data), lambda_(lambda) {}

    Scalar scale() const { return pl_.scale(); }
    Scalar value(const Vec<Scalar>& beta) const { return pl_.value(beta) - lambda_ * beta.squaredNorm(); }

    Evaluation<Scalar> evaluate(const Vec<Scalar>& beta) const
    {
        auto ev = pl_.evaluate(beta);
        ev.value -= lambda_ * beta.squaredNorm();
        ev.gradient -= 2 * lambda_ * beta;
        ev.neg_hessian.diagonal().array() += 2 * lambda_;
        return ev;
    }

private:
    CoxPartialLikelihood<Scalar> pl_;
    Scalar lambda_;
};

template <typename Scalar>
FitResult<Scalar> ridge(const SurvivalData<Scalar>& data, Scalar lambda, const PenaltyOptions& opts = {})
{
    if (!(lambda >= 0)) throw std::invalid_argument("ridge: lambda must be nonnegative");
    const auto st = opts.standardize ? Standardizer<Scalar>::fit(data.covariates()) : Standardizer<Scalar>::identity(data.cols());
    const SurvivalData<Scalar> work = opts.standardize ? data.with_covariates(st.apply(data.covariates())) : data;
    const RidgeObjective<Scalar> objective(work, lambda);
    auto fit = newton_maximize<Scalar>(objective, Vec<Scalar>::Zero(data.cols()), opts.solver);
    if (opts.standardize) st.to_raw_scale(fit);
    return fit;
}

namespace detail {

template <typename Scalar>
Scalar soft_threshold(Scalar z, Scalar lambda)
{
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0;
}

} // namespace detail

/**
 * Lasso partial likelihood fit: maximizes log PL(b) - lambda * ||b||_1 by proximal
 * Newton. Each outer step solves the l1-penalized quadratic model of the partial
 * likelihood by cyclic coordinate descent, then
 * step-halves on the true objective. `start` warm-starts a lambda path.
 */
template <typename Scalar>
FitResult<Scalar> lasso(const SurvivalData<Scalar>& data, Scalar lambda, const PenaltyOptions& opts = {},
                        const Vec<Scalar>* start = nullptr)
{
    if (!(lambda >= 0)) throw std::invalid_argument("lasso: lambda must be nonnegative");
    const Index p = data.cols();
    const auto st = opts.standardize ? Standardizer<Scalar>::fit(data.covariates()) : Standardizer<Scalar>::identity(p);
    const SurvivalData<Scalar> work = opts.standardize ? data.with_covariates(st.apply(data.covariates())) : data;
    const CoxPartialLikelihood<Scalar> pl(work);
    auto objective = [&](const Vec<Scalar>& b) { return pl.value(b) - lambda * b.template lpNorm<1>(); };

    Vec<Scalar> beta = start ? Vec<Scalar>(start->cwiseProduct(st.scale)) : Vec<Scalar>::Zero(p);
    FitResult<Scalar> fit;
    Evaluation<Scalar> ev = pl.evaluate(beta);
    Scalar f = ev.value - lambda * beta.template lpNorm<1>();
    int outer = 0;
    for (; outer < opts.lasso_max_outer; ++outer) {
        const Mat<Scalar>& H = ev.neg_hessian;
        Vec<Scalar> b = beta;
        Vec<Scalar> hd = Vec<Scalar>::Zero(p);  // H (b - beta)
        const Scalar inner_tol = Scalar(1e-13) * (Scalar(1) + beta.cwiseAbs().maxCoeff());
        for (int sweep = 0; sweep < opts.lasso_max_sweeps; ++sweep) {
            Scalar max_change = 0;
            for (Index j = 0; j < p; ++j) {
                const Scalar hjj = H(j, j);
                if (!(hjj > 0)) continue;
                const Scalar grad_j = ev.gradient[j] - hd[j];
                const Scalar updated = detail::soft_threshold(hjj * b[j] + grad_j, lambda) / hjj;
                const Scalar delta = updated - b[j];
                if (delta != 0) {
                    hd.noalias() += H.col(j) * delta;
                    b[j] = updated;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            if (max_change <= inner_tol) break;
        }

        const Vec<Scalar> direction = b - beta;
        Scalar t = 1;
        Vec<Scalar> candidate;
        Scalar cand_f = f;
        bool accepted = false;
        const Scalar slack = Scalar(16) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(f));
        for (int h = 0; h <= opts.solver.max_halvings; ++h, t /= 2) {
            candidate = beta + t * direction;
            cand_f = objective(candidate);
            if (std::isfinite(static_cast<double>(cand_f)) && cand_f >= f - slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            fit.diverged = true;
            break;
        }
        const Scalar change = (t * direction).cwiseAbs().maxCoeff();
        beta = candidate;
        f = cand_f;
        ev = pl.evaluate(beta);
        if (beta.cwiseAbs().maxCoeff() > Scalar(opts.solver.divergence_bound)) {
            fit.diverged = true;
            break;
        }
        if (change < Scalar(opts.lasso_tolerance)) {
            fit.converged = true;
            ++outer;
            break;
        }
    }

    // KKT residual on the working scale
    Scalar kkt = 0;
    for (Index j = 0; j < p; ++j) {
        const Scalar g = ev.gradient[j];
        const Scalar r = beta[j] != 0 ? std::abs(g - lambda * (beta[j] > 0 ? 1 : -1)) : std::max<Scalar>(0, std::abs(g) - lambda);
        kkt = std::max(kkt, r);
    }
    fit.iterations = outer;
    fit.beta = beta;
    fit.objective = f;
    fit.gradient_norm = kkt;
    fit.neg_hessian = ev.neg_hessian;
    if (opts.standardize) st.to_raw_scale(fit);
    return fit;
}

/// Smallest lambda at which the lasso solution is identically zero (on the working scale).
template <typename Scalar>
Scalar lasso_lambda_max(const SurvivalData<Scalar>& data, bool standardize = true)
{
    const SurvivalData<Scalar> work =
        standardize ? data.with_covariates(Standardizer<Scalar>::fit(data.covariates()).apply(data.covariates())) : data;
    const auto d = pl_derivatives<Scalar>(Vec<Scalar>::Zero(data.cols()), work);
    return d.gradient.cwiseAbs().maxCoeff();
}

} // namespace catcox
