#pragma once

#include "catcox/estimators.hpp"
#include "catcox/rng.hpp"
#include "catcox/stats.hpp"
#include "catcox/survival_core.hpp"
#include "catcox/synthesis.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace catcox {

/// Time partition 0 = s_0 < s_1 < ... < s_J with s_J > max(Y).
struct PartitionGrid {
    std::vector<double> boundaries;

    Index intervals() const { return static_cast<Index>(boundaries.size()) - 1; }
    /// 1-based interval j with Y in (s_{j-1}, s_j].
    Index interval_of(double y) const;
};

/**
 * Interior boundaries at the j/J type-7 quantiles of the distinct event times,
 * s_J = max(Y) (1 + 1e-6). Coinciding boundaries are merged, which can lower J.
 */
PartitionGrid build_partition(const SurvivalData<double>& data, Index J);

struct WeibullFit {
    double eta0 = 1.0;
    double kappa0 = 1.0;
    int iterations = 0;
};

/// Profile MLE eta(kappa) = sum(delta) / sum(Y^kappa).
double weibull_profile_eta(const SurvivalData<double>& data, double kappa);

/// Intercept-only Weibull fit of the cumulative hazard H(t) = eta t^kappa.
WeibullFit fit_weibull_intercept(const SurvivalData<double>& data);

struct GammaProcessConfig {
    double c0 = 2.0;
    double weibull_eta0 = 1.0;
    double weibull_kappa0 = 1.0;

    static GammaProcessConfig from_data(const SurvivalData<double>& data, double c0 = 2.0);
    double prior_cumulative(double t) const { return weibull_eta0 * std::pow(t, weibull_kappa0); }
    /// Gamma shapes alpha_{0j} - alpha_{0,j-1} with alpha_{0j} = c0 H*(s_j).
    Vec<double> increment_shapes(const PartitionGrid& grid) const;
};

/**
 * Subjects bucketed by partition interval. Subject i is at risk in intervals
 * 1..k_i (k_i the interval holding Y_i) and fails in k_i when delta_i = 1.
 */
class GroupedData {
public:
    GroupedData(const SurvivalData<double>& data, const PartitionGrid& grid);

    Index intervals() const { return J_; }
    Index rows() const { return static_cast<Index>(interval_.size()); }
    const std::vector<Index>& interval() const { return interval_; }
    const std::vector<std::vector<Index>>& failures() const { return failures_; }
    const Mat<double>& covariates() const { return *x_; }
    const StatusVec& status() const { return *status_; }

    /// Sum over the interval's survivors of theta_k, for each interval (index 0 is interval 1).
    Vec<double> survivor_sums(const Vec<double>& theta) const;
    double log_likelihood(const Vec<double>& theta, const Vec<double>& h) const;
    /// Contribution of interval j (0-based) given survivor sum S_j.
    double interval_term(Index j, double h_j, double survivor_sum, const Vec<double>& theta) const;

private:
    const Mat<double>* x_;
    const StatusVec* status_;
    Index J_ = 0;
    std::vector<Index> interval_;                // 0-based interval per subject
    std::vector<std::vector<Index>> failures_;   // D_j per interval
};

double grouped_log_likelihood(const Vec<double>& beta, const Vec<double>& h, const SurvivalData<double>& data,
                              const PartitionGrid& grid);

/// Log Gamma(shape_j, rate c0) density of the increments, without normalizing constants.
double log_increment_prior(const Vec<double>& h, const Vec<double>& shapes, double c0);

enum class PriorKind { catalytic, adaptive, gaussian };

/// Prior on beta used by the sampler.
struct BetaPrior {
    PriorKind kind = PriorKind::catalytic;
    std::shared_ptr<const CatalyticPrior<double>> catalytic;  // catalytic and adaptive
    double gaussian_variance = 1.0;                            // gaussian

    static BetaPrior make_catalytic(CatalyticPrior<double> prior);
    static BetaPrior make_adaptive(CatalyticPrior<double> prior);
    static BetaPrior make_gaussian(double variance);

    /// log prior of beta at total weight tau (tau ignored for the gaussian prior).
    double log_density(const Vec<double>& beta, double tau) const;
};

double log_joint_posterior(const Vec<double>& beta, const Vec<double>& h, const SurvivalData<double>& data,
                           const PartitionGrid& grid, const GammaProcessConfig& gp, const CatalyticPrior<double>& prior);

/// Exact draw of tau | beta ~ Gamma(p + alpha, rate kappa + 1/gamma - l(beta)).
double sample_tau_conditional(const Vec<double>& beta, const CatalyticPrior<double>& prior, Rng& rng);

struct TauConditional {
    double shape = 0.0;
    double rate = 0.0;
};
TauConditional tau_conditional(const Vec<double>& beta, const CatalyticPrior<double>& prior);

struct SamplerConfig {
    int iterations = 4000;
    int burnin = 2000;
    int chains = 1;
    std::uint64_t seed = 0;
    bool adaptive_tau = false;
    int threads = 1;
    /// Keep beta at its start value (used to test the h updates in isolation).
    bool fix_beta = false;
    std::optional<Vec<double>> beta_start;
    std::optional<Vec<double>> h_start;
    /// Re-estimate the beta proposal covariance from burn-in draws halfway through burn-in.
    bool adapt_covariance = true;
};

struct PosteriorSamples {
    Mat<double> beta_draws;  // (chains * kept) x p, chain-major
    Mat<double> h_draws;     // (chains * kept) x J
    Vec<double> tau_draws;   // empty unless adaptive
    std::vector<double> beta_acceptance;  // per chain, post burn-in
    std::vector<double> h_acceptance;     // per chain, post burn-in, averaged over intervals
    int burnin = 0;
    int chains = 1;
    Index kept_per_chain = 0;
    std::uint64_t seed = 0;
    PartitionGrid grid;

    Index draws() const { return beta_draws.rows(); }
    bool has_tau() const { return tau_draws.size() > 0; }
};

/**
 * Metropolis-within-Gibbs over (beta, h[, tau]). beta moves by one multivariate
 * random-walk step per sweep whose scale is tuned toward acceptance 0.23 during
 * burn-in; each h_j moves on the log scale toward acceptance 0.44; tau, when
 * adaptive, is drawn from its Gamma conditional. Chains use independent streams
 * of `config.seed`, so results do not depend on `config.threads`.
 */
PosteriorSamples sample_posterior(const SurvivalData<double>& data, const PartitionGrid& grid,
                                  const GammaProcessConfig& gp, const BetaPrior& prior, const SamplerConfig& config);

struct CoefficientSummary {
    double mean = 0.0;
    double sd = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double rhat = 1.0;  // split potential scale reduction (NaN when undefined)
};

std::vector<CoefficientSummary> posterior_summary(const PosteriorSamples& samples, double level = 0.95);

/// Summaries of the columns of an arbitrary draw matrix split into `chains` equal blocks.
std::vector<CoefficientSummary> summarize_draws(const Mat<double>& draws, int chains, double level);

/// Split-chain R-hat of one scalar quantity given as `chains` consecutive blocks.
double split_rhat(const Vec<double>& draws, int chains);

} // namespace catcox
