#pragma once

#include "catcox/newton.hpp"
#include "catcox/rng.hpp"
#include "catcox/stats.hpp"
#include "catcox/survival_core.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace catcox {

/// MLE of the constant hazard psi of an exponential model: events / total time.
template <typename Scalar>
Scalar fit_exponential(const SurvivalData<Scalar>& data)
{
    const Index events = data.event_count();
    if (events == 0) throw std::invalid_argument("fit_exponential: simple model unidentifiable (no events)");
    return static_cast<Scalar>(events) / data.times().sum();
}

enum class CovariateStrategy {
    binary_flatten,      // blend draws Bernoulli(0.5)
    continuous_blend,    // blend draws Normal(median, (IQR / (2 z_0.75))^2)
    categorical_uniform  // blend draws a level uniformly, then dummy-codes it
};

/// One generated variable; categorical groups span their dummy columns (reference level omitted).
struct ColumnGroup {
    CovariateStrategy strategy = CovariateStrategy::continuous_blend;
    std::vector<Index> columns;
};

struct CovariateGenSchema {
    std::vector<ColumnGroup> groups;
    double blend = 0.5;

    /**
     * Schema read off the dataset's column tags. Consecutive categorical-expanded
     * columns are taken to be the dummies of one variable; callers with several
     * adjacent categoricals should build the groups explicitly.
     */
    template <typename Scalar>
    static CovariateGenSchema from_data(const SurvivalData<Scalar>& data, double blend = 0.5)
    {
        CovariateGenSchema schema;
        schema.blend = blend;
        const auto& kinds = data.schema();
        for (std::size_t j = 0; j < kinds.size(); ++j) {
            ColumnGroup g;
            switch (kinds[j]) {
            case ColumnKind::binary: g.strategy = CovariateStrategy::binary_flatten; break;
            case ColumnKind::continuous: g.strategy = CovariateStrategy::continuous_blend; break;
            case ColumnKind::categorical_expanded:
                g.strategy = CovariateStrategy::categorical_uniform;
                while (j < kinds.size() && kinds[j] == ColumnKind::categorical_expanded) {
                    g.columns.push_back(static_cast<Index>(j));
                    ++j;
                }
                --j;
                schema.groups.push_back(std::move(g));
                continue;
            }
            g.columns.push_back(static_cast<Index>(j));
            schema.groups.push_back(std::move(g));
        }
        return schema;
    }
};

struct GeneratorMeta {
    std::string scheme;
    std::uint64_t seed = 0;
    double blend = 0.5;
    double psi_hat = 0.0;
    std::vector<Index> fallback_columns;  // zero-IQR columns generated by pure resampling
};

template <typename Scalar>
struct SyntheticDataset {
    Mat<Scalar> covariates;  // M x p
    Vec<Scalar> times;       // all uncensored
    GeneratorMeta meta;

    Index size() const { return covariates.rows(); }
    Index cols() const { return covariates.cols(); }
};

namespace detail {

template <typename Scalar>
void check_schema(const CovariateGenSchema& schema, Index p)
{
    if (!(schema.blend >= 0 && schema.blend <= 1)) throw std::invalid_argument("CovariateGenSchema: blend must lie in [0,1]");
    std::vector<int> seen(static_cast<std::size_t>(p), 0);
    for (const auto& g : schema.groups) {
        if (g.columns.empty()) throw std::invalid_argument("CovariateGenSchema: empty column group");
        if (g.strategy != CovariateStrategy::categorical_uniform && g.columns.size() != 1) {
            throw std::invalid_argument("CovariateGenSchema: only categorical groups span several columns");
        }
        for (Index c : g.columns) {
            if (c < 0 || c >= p) throw std::invalid_argument("CovariateGenSchema: column out of range");
            ++seen[static_cast<std::size_t>(c)];
        }
    }
    for (int s : seen) if (s != 1) throw std::invalid_argument("CovariateGenSchema: every column must appear exactly once");
}

} // namespace detail

/**
 * Synthetic covariates, generated column-group by column-group. Each group is
 * resampled i.i.d. from its observed rows; then round(blend * M) randomly chosen
 * rows are overwritten by draws from the group's flattened reference law.
 */
template <typename Scalar>
Mat<Scalar> generate_synthetic_covariates(const SurvivalData<Scalar>& data, Index M, const CovariateGenSchema& schema,
                                          Rng& rng, std::vector<Index>* fallback_columns = nullptr)
{
    if (M < 1) throw std::invalid_argument("generate_synthetic_covariates: M must be >= 1");
    const Index n = data.rows();
    const Index p = data.cols();
    detail::check_schema<Scalar>(schema, p);
    const Mat<Scalar>& x = data.covariates();
    const Index n_blend = static_cast<Index>(std::llround(schema.blend * static_cast<double>(M)));
    const Scalar z75 = normal_quantile<Scalar>(Scalar(0.75));

    Mat<Scalar> out(M, p);
    std::uniform_int_distribution<Index> pick_row(0, n - 1);
    std::vector<Index> rows(static_cast<std::size_t>(M));

    for (const auto& g : schema.groups) {
        for (Index i = 0; i < M; ++i) {
            const Index src = pick_row(rng);
            for (Index c : g.columns) out(i, c) = x(src, c);
        }
        // rows to flatten: a uniformly random subset of size n_blend
        std::iota(rows.begin(), rows.end(), Index(0));
        for (Index k = 0; k < n_blend; ++k) {
            std::uniform_int_distribution<Index> pick(k, M - 1);
            std::swap(rows[static_cast<std::size_t>(k)], rows[static_cast<std::size_t>(pick(rng))]);
        }

        switch (g.strategy) {
        case CovariateStrategy::binary_flatten: {
            std::bernoulli_distribution coin(0.5);
            for (Index k = 0; k < n_blend; ++k) out(rows[static_cast<std::size_t>(k)], g.columns[0]) = coin(rng) ? 1 : 0;
            break;
        }
        case CovariateStrategy::continuous_blend: {
            const Index c = g.columns[0];
            std::vector<Scalar> col(x.col(c).data(), x.col(c).data() + n);
            std::sort(col.begin(), col.end());
            const Scalar median = quantile_sorted(col, Scalar(0.5));
            const Scalar iqr = quantile_sorted(col, Scalar(0.75)) - quantile_sorted(col, Scalar(0.25));
            if (!(iqr > 0)) {
                if (fallback_columns) fallback_columns->push_back(c);
                break;
            }
            const Scalar sigma = iqr / (2 * z75);
            std::normal_distribution<Scalar> normal(median, sigma);
            for (Index k = 0; k < n_blend; ++k) out(rows[static_cast<std::size_t>(k)], c) = normal(rng);
            break;
        }
        case CovariateStrategy::categorical_uniform: {
            const Index levels = static_cast<Index>(g.columns.size()) + 1;
            std::uniform_int_distribution<Index> level(0, levels - 1);
            for (Index k = 0; k < n_blend; ++k) {
                const Index r = rows[static_cast<std::size_t>(k)];
                const Index lv = level(rng);
                for (Index d = 0; d < static_cast<Index>(g.columns.size()); ++d) {
                    out(r, g.columns[static_cast<std::size_t>(d)]) = (lv == d + 1) ? 1 : 0;
                }
            }
            break;
        }
        }
    }
    return out;
}

/// i.i.d. Exponential(rate psi_hat) survival times.
template <typename Scalar>
Vec<Scalar> generate_synthetic_times(Index M, Scalar psi_hat, Rng& rng)
{
    if (!(psi_hat > 0)) throw std::invalid_argument("generate_synthetic_times: rate must be positive");
    std::exponential_distribution<Scalar> expo(psi_hat);
    Vec<Scalar> out(M);
    for (Index i = 0; i < M; ++i) {
        Scalar t = expo(rng);
        while (!(t > 0)) t = expo(rng);
        out[i] = t;
    }
    return out;
}

/// max(1000, 4p)
inline Index default_synthetic_size(Index p) { return std::max<Index>(1000, 4 * p); }

/**
 * Full synthetic sample: covariates from stream 0 of `seed`, times from stream 1,
 * with rate psi_hat from the exponential fit to `data`.
 */
template <typename Scalar>
SyntheticDataset<Scalar> make_synthetic(const SurvivalData<Scalar>& data, Index M, const CovariateGenSchema& schema,
                                        std::uint64_t seed)
{
    SyntheticDataset<Scalar> s;
    s.meta.scheme = "marginal-resample+flatten/exponential";
    s.meta.seed = seed;
    s.meta.blend = schema.blend;
    Rng cov_rng = make_rng(seed, 0);
    s.covariates = generate_synthetic_covariates(data, M, schema, cov_rng, &s.meta.fallback_columns);
    const Scalar psi = fit_exponential(data);
    s.meta.psi_hat = static_cast<double>(psi);
    Rng time_rng = make_rng(seed, 1);
    s.times = generate_synthetic_times<Scalar>(M, psi, time_rng);
    return s;
}

/**
 * Mean synthetic log-likelihood of (beta, h0+) under the constant-hazard Cox model:
 *
 *   l(b) = (1/M) sum_i [ x_i'b + log h0 - Y_i h0 exp(x_i'b) ].
 *
 * The tau-weighted catalytic log prior is tau * l(b).
 */
template <typename Scalar>
class SyntheticLikelihood {
public:
    SyntheticLikelihood(const SyntheticDataset<Scalar>& synth, Scalar h0_plus, Scalar weight = 1)
        : x_(&synth.covariates), y_(&synth.times), h0_(h0_plus), weight_(weight)
    {}

    Scalar scale() const { return weight_; }
    Scalar value(const Vec<Scalar>& beta) const { return compute(beta, Derivatives::none).value; }
    Evaluation<Scalar> evaluate(const Vec<Scalar>& beta) const { return compute(beta, Derivatives::hessian); }

    Evaluation<Scalar> compute(const Vec<Scalar>& beta, Derivatives level) const
    {
        using std::exp;
        using std::log;
        if (!beta.allFinite()) throw std::domain_error("catalytic prior: beta must be finite");
        const Index M = x_->rows();
        const Index p = x_->cols();
        if (beta.size() != p) throw std::invalid_argument("catalytic prior: beta has wrong length");
        const Vec<Scalar> eta = (*x_) * beta;
        const Scalar c = weight_ / static_cast<Scalar>(M);
        // rate_i = Y_i h0 exp(eta_i), overflowing to +inf (value -inf) for huge eta
        const Vec<Scalar> rate = (y_->array() * h0_ * eta.array().exp()).matrix();

        Evaluation<Scalar> out;
        out.value = c * (eta.sum() + static_cast<Scalar>(M) * log(h0_) - rate.sum());
        if (level != Derivatives::none) {
            out.gradient = c * (x_->transpose() * (Vec<Scalar>::Ones(M) - rate));
            if (level == Derivatives::hessian) {
                out.neg_hessian = c * (x_->transpose() * rate.asDiagonal() * (*x_));
                out.neg_hessian = (out.neg_hessian + out.neg_hessian.transpose()) / 2;
            }
        }
        return out;
    }

private:
    const Mat<Scalar>* x_;
    const Vec<Scalar>* y_;
    Scalar h0_;
    Scalar weight_;
};

/// Whether the synthetic design has full column rank.
template <typename Scalar>
bool full_column_rank(const Mat<Scalar>& x)
{
    if (x.rows() < x.cols()) return false;
    Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(x);
    return qr.rank() == x.cols();
}

template <typename Scalar>
struct KappaResult {
    Scalar kappa = 0;
    Vec<Scalar> argmax;
};

/// Supremum over beta of the mean synthetic log-likelihood, by Newton from zero.
template <typename Scalar>
KappaResult<Scalar> synthetic_kappa(const SyntheticDataset<Scalar>& synth, Scalar h0_plus, const SolverOptions& opts = {})
{
    if (!full_column_rank(synth.covariates)) {
        throw std::domain_error("compute_kappa: kappa unbounded risk (synthetic covariates are rank deficient)");
    }
    const SyntheticLikelihood<Scalar> lik(synth, h0_plus);
    auto fit = newton_maximize<Scalar>(lik, Vec<Scalar>::Zero(synth.cols()), opts);
    if (!fit.converged) throw std::runtime_error("compute_kappa: Newton iterations did not converge");
    return {fit.objective, std::move(fit.beta)};
}

/// Hyperparameters (alpha, gamma) of the adaptive prior's Gamma-type tau factor.
struct AdaptiveHyper {
    double alpha = 2.0;
    double gamma = 1.0;
};

/**
 * Cox catalytic prior: synthetic data, total weight tau and surrogate hazard h0+.
 * kappa and its maximizer are computed once at construction when the synthetic
 * design has full rank; with_tau() reuses them.
 */
template <typename Scalar>
class CatalyticPrior {
public:
    CatalyticPrior(SyntheticDataset<Scalar> synth, Scalar tau, Scalar h0_plus,
                   std::optional<AdaptiveHyper> adaptive = std::nullopt)
        : synth_(std::make_shared<const SyntheticDataset<Scalar>>(std::move(synth))), tau_(tau), h0_(h0_plus),
          adaptive_(adaptive)
    {
        if (!(tau_ > 0)) throw std::invalid_argument("CatalyticPrior: tau must be positive");
        if (!(h0_ > 0)) throw std::invalid_argument("CatalyticPrior: h0_plus must be positive");
        if (synth_->size() < 1) throw std::invalid_argument("CatalyticPrior: empty synthetic dataset");
        if (full_column_rank(synth_->covariates)) {
            kappa_ = std::make_shared<const KappaResult<Scalar>>(synthetic_kappa(*synth_, h0_));
        } else if (adaptive_) {
            throw std::domain_error("CatalyticPrior: adaptive prior needs kappa, but the synthetic design is rank deficient");
        }
    }

    const SyntheticDataset<Scalar>& synth() const { return *synth_; }
    Scalar tau() const { return tau_; }
    Scalar h0_plus() const { return h0_; }
    const std::optional<AdaptiveHyper>& adaptive() const { return adaptive_; }
    Index dim() const { return synth_->cols(); }
    bool has_kappa() const { return static_cast<bool>(kappa_); }

    const KappaResult<Scalar>& kappa_result() const
    {
        if (!kappa_) throw std::domain_error("compute_kappa: kappa unbounded risk (synthetic covariates are rank deficient)");
        return *kappa_;
    }

    CatalyticPrior with_tau(Scalar tau) const
    {
        if (!(tau > 0)) throw std::invalid_argument("CatalyticPrior: tau must be positive");
        CatalyticPrior copy = *this;
        copy.tau_ = tau;
        return copy;
    }

    /// Mean synthetic log-likelihood l(beta).
    SyntheticLikelihood<Scalar> mean_likelihood() const { return SyntheticLikelihood<Scalar>(*synth_, h0_, 1); }
    /// tau * l(beta), the catalytic log prior.
    SyntheticLikelihood<Scalar> log_density() const { return SyntheticLikelihood<Scalar>(*synth_, h0_, tau_); }

private:
    std::shared_ptr<const SyntheticDataset<Scalar>> synth_;
    Scalar tau_;
    Scalar h0_;
    std::optional<AdaptiveHyper> adaptive_;
    std::shared_ptr<const KappaResult<Scalar>> kappa_;
};

template <typename Scalar>
Scalar log_catalytic_prior(const Vec<Scalar>& beta, const CatalyticPrior<Scalar>& prior)
{
    return prior.log_density().value(beta);
}

template <typename Scalar>
PlDerivatives<Scalar> log_catalytic_prior_derivatives(const Vec<Scalar>& beta, const CatalyticPrior<Scalar>& prior)
{
    auto ev = prior.log_density().evaluate(beta);
    return {std::move(ev.gradient), std::move(ev.neg_hessian)};
}

template <typename Scalar>
Scalar compute_kappa(const CatalyticPrior<Scalar>& prior)
{
    return prior.kappa_result().kappa;
}

/**
 * Unnormalized log density of the adaptive prior at (tau, beta):
 * (p + alpha - 1) log tau - tau (kappa + 1/gamma) + tau l(beta).
 */
template <typename Scalar>
Scalar log_adaptive_prior(Scalar tau, const Vec<Scalar>& beta, const CatalyticPrior<Scalar>& prior)
{
    if (!prior.adaptive()) throw std::invalid_argument("log_adaptive_prior: prior has no adaptive hyperparameters");
    if (!(tau > 0)) throw std::domain_error("log_adaptive_prior: tau must be positive");
    const auto& hyper = *prior.adaptive();
    const Scalar p = static_cast<Scalar>(prior.dim());
    const Scalar kappa = compute_kappa(prior);
    const Scalar ell = prior.mean_likelihood().value(beta);
    return (p + Scalar(hyper.alpha) - 1) * std::log(tau) - tau * (kappa + Scalar(1) / Scalar(hyper.gamma)) + tau * ell;
}

template <typename Scalar>
struct NormRecoverability {
    bool is_recoverable = false;
    Scalar c1_lower_estimate = 0;
};

/**
 * Rank-based norm-recoverability test. The reported constant is the smallest
 * value of (1/M) sum |x_i'b| over `samples` random unit directions and the p
 * canonical directions; it upper-bounds the true constant and is only a
 * positivity witness.
 */
template <typename Scalar>
NormRecoverability<Scalar> norm_recoverability_check(const Mat<Scalar>& x_star, Index samples, std::uint64_t seed = 0)
{
    if (x_star.rows() < 1) throw std::invalid_argument("norm_recoverability_check: M must be >= 1");
    const Index p = x_star.cols();
    const Scalar M = static_cast<Scalar>(x_star.rows());
    NormRecoverability<Scalar> out;
    out.is_recoverable = full_column_rank(x_star);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < p; ++j) best = std::min(best, x_star.col(j).cwiseAbs().sum() / M);
    Rng rng = make_rng(seed, 0);
    std::normal_distribution<Scalar> normal(0, 1);
    Vec<Scalar> dir(p);
    for (Index s = 0; s < samples; ++s) {
        for (Index j = 0; j < p; ++j) dir[j] = normal(rng);
        const Scalar norm = dir.norm();
        if (!(norm > 0)) continue;
        dir /= norm;
        best = std::min(best, (x_star * dir).cwiseAbs().sum() / M);
    }
    out.c1_lower_estimate = out.is_recoverable ? best : Scalar(0);
    return out;
}

} // namespace catcox
