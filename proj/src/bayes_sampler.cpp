#include "catcox/bayes_sampler.hpp"

#include "catcox/parallel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace catcox {

Index PartitionGrid::interval_of(double y) const
{
    const auto it = std::lower_bound(boundaries.begin() + 1, boundaries.end(), y);
    if (it == boundaries.end()) throw std::out_of_range("PartitionGrid: time beyond the last boundary");
    return static_cast<Index>(it - boundaries.begin());
}

PartitionGrid build_partition(const SurvivalData<double>& data, Index J)
{
    if (J < 1) throw std::invalid_argument("build_partition: J must be >= 1");
    std::vector<double> events;
    for (Index i = 0; i < data.rows(); ++i)
        if (data.status()[i]) events.push_back(data.times()[i]);
    if (events.empty()) throw std::invalid_argument("build_partition: no events");
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());

    const Index J_eff = std::min<Index>(J, static_cast<Index>(events.size()));
    const double last = data.times().maxCoeff() * (1 + 1e-6);
    PartitionGrid grid;
    grid.boundaries.push_back(0.0);
    for (Index j = 1; j < J_eff; ++j) {
        const double s = quantile_sorted(events, static_cast<double>(j) / static_cast<double>(J_eff));
        if (s > grid.boundaries.back() && s < last) grid.boundaries.push_back(s);
    }
    grid.boundaries.push_back(last);
    return grid;
}

double weibull_profile_eta(const SurvivalData<double>& data, double kappa)
{
    if (!(kappa > 0)) throw std::invalid_argument("weibull_profile_eta: kappa must be positive");
    const double d = static_cast<double>(data.event_count());
    return d / data.times().array().pow(kappa).sum();
}

namespace {

// Score of the profile log-likelihood in kappa and its derivative, with the
// Y^kappa weights normalized by their maximum to avoid overflow.
struct ProfileScore {
    double score;
    double slope;
};

ProfileScore weibull_profile_score(const Vec<double>& logy, double sum_event_logy, double d, double kappa)
{
    const double top = (kappa * logy.array()).maxCoeff();
    const Eigen::ArrayXd w = (kappa * logy.array() - top).exp();
    const double sw = w.sum();
    const double m1 = (w * logy.array()).sum() / sw;
    const double m2 = (w * logy.array().square()).sum() / sw;
    return {d / kappa + sum_event_logy - d * m1, -d / (kappa * kappa) - d * (m2 - m1 * m1)};
}

} // namespace

WeibullFit fit_weibull_intercept(const SurvivalData<double>& data)
{
    const double d = static_cast<double>(data.event_count());
    if (d == 0) throw std::invalid_argument("fit_weibull_intercept: no events");
    const Vec<double> logy = data.times().array().log().matrix();
    double sum_event_logy = 0;
    for (Index i = 0; i < data.rows(); ++i)
        if (data.status()[i]) sum_event_logy += logy[i];
    auto score = [&](double k) { return weibull_profile_score(logy, sum_event_logy, d, k); };

    // The profile log-likelihood is strictly concave in kappa, so its score is
    // decreasing: bracket the root, then Newton with bisection fallback.
    double lo = 1.0, hi = 1.0;
    while (score(hi).score > 0) {
        hi *= 2;
        if (hi > 1e4) {
            throw std::runtime_error("fit_weibull_intercept: no interior maximum (score still positive at kappa = " +
                                     std::to_string(hi) + ")");
        }
    }
    while (score(lo).score < 0) {
        lo /= 2;
        if (lo < 1e-6) {
            throw std::runtime_error("fit_weibull_intercept: no interior maximum (score still negative at kappa = " +
                                     std::to_string(lo) + ")");
        }
    }
    double k = 0.5 * (lo + hi);
    WeibullFit fit;
    for (int it = 0; it < 200; ++it) {
        fit.iterations = it + 1;
        const auto s = score(k);
        if (std::abs(s.score) <= 1e-12 * std::max(1.0, d / k)) break;
        if (s.score > 0) lo = k; else hi = k;
        double next = k - s.score / s.slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - k) <= 1e-15 * k) {
            k = next;
            break;
        }
        k = next;
        if (it == 199) {
            throw std::runtime_error("fit_weibull_intercept: Newton did not converge (kappa = " + std::to_string(k) +
                                     ", score = " + std::to_string(s.score) + ")");
        }
    }
    fit.kappa0 = k;
    fit.eta0 = weibull_profile_eta(data, k);
    return fit;
}

GammaProcessConfig GammaProcessConfig::from_data(const SurvivalData<double>& data, double c0)
{
    if (!(c0 > 0)) throw std::invalid_argument("GammaProcessConfig: c0 must be positive");
    const auto w = fit_weibull_intercept(data);
    return {c0, w.eta0, w.kappa0};
}

Vec<double> GammaProcessConfig::increment_shapes(const PartitionGrid& grid) const
{
    const Index J = grid.intervals();
    Vec<double> a(J);
    for (Index j = 0; j < J; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        a[j] = c0 * (prior_cumulative(grid.boundaries[uj + 1]) - prior_cumulative(grid.boundaries[uj]));
        if (!(a[j] > 0)) throw std::domain_error("GammaProcessConfig: nonpositive Gamma shape for interval " + std::to_string(j + 1));
    }
    return a;
}

GroupedData::GroupedData(const SurvivalData<double>& data, const PartitionGrid& grid)
    : x_(&data.covariates()), status_(&data.status()), J_(grid.intervals())
{
    if (J_ < 1) throw std::invalid_argument("GroupedData: empty partition");
    if (data.times().maxCoeff() >= grid.boundaries.back()) {
        throw std::invalid_argument("GroupedData: last boundary must exceed every observed time");
    }
    interval_.resize(static_cast<std::size_t>(data.rows()));
    failures_.assign(static_cast<std::size_t>(J_), {});
    for (Index i = 0; i < data.rows(); ++i) {
        const Index j = grid.interval_of(data.times()[i]) - 1;
        interval_[static_cast<std::size_t>(i)] = j;
        if (data.status()[i]) failures_[static_cast<std::size_t>(j)].push_back(i);
    }
}

Vec<double> GroupedData::survivor_sums(const Vec<double>& theta) const
{
    Vec<double> s = Vec<double>::Zero(J_);
    for (std::size_t i = 0; i < interval_.size(); ++i) s[interval_[i]] += theta[static_cast<Index>(i)];
    for (Index j = J_ - 2; j >= 0; --j) s[j] += s[j + 1];
    for (Index j = 0; j < J_; ++j)
        for (Index l : failures_[static_cast<std::size_t>(j)]) s[j] -= theta[l];
    return s;
}

double GroupedData::interval_term(Index j, double h_j, double survivor_sum, const Vec<double>& theta) const
{
    double v = -h_j * survivor_sum;
    for (Index l : failures_[static_cast<std::size_t>(j)]) v += log1mexp(h_j * theta[l]);
    return v;
}

double GroupedData::log_likelihood(const Vec<double>& theta, const Vec<double>& h) const
{
    if (h.size() != J_) throw std::invalid_argument("grouped likelihood: h has wrong length");
    if (!((h.array() > 0).all())) throw std::domain_error("grouped likelihood: increments must be positive");
    const Vec<double> s = survivor_sums(theta);
    double total = 0;
    for (Index j = 0; j < J_; ++j) total += interval_term(j, h[j], s[j], theta);
    return total;
}

double grouped_log_likelihood(const Vec<double>& beta, const Vec<double>& h, const SurvivalData<double>& data,
                              const PartitionGrid& grid)
{
    if (beta.size() != data.cols()) throw std::invalid_argument("grouped likelihood: beta has wrong length");
    const GroupedData grouped(data, grid);
    const Vec<double> theta = (data.covariates() * beta).array().exp().matrix();
    return grouped.log_likelihood(theta, h);
}

double log_increment_prior(const Vec<double>& h, const Vec<double>& shapes, double c0)
{
    if (!((h.array() > 0).all())) throw std::domain_error("increment prior: increments must be positive");
    return ((shapes.array() - 1) * h.array().log() - c0 * h.array()).sum();
}

BetaPrior BetaPrior::make_catalytic(CatalyticPrior<double> prior)
{
    BetaPrior b;
    b.kind = PriorKind::catalytic;
    b.catalytic = std::make_shared<const CatalyticPrior<double>>(std::move(prior));
    return b;
}

BetaPrior BetaPrior::make_adaptive(CatalyticPrior<double> prior)
{
    if (!prior.adaptive()) throw std::invalid_argument("BetaPrior: adaptive prior needs (alpha, gamma)");
    (void)prior.kappa_result();
    BetaPrior b;
    b.kind = PriorKind::adaptive;
    b.catalytic = std::make_shared<const CatalyticPrior<double>>(std::move(prior));
    return b;
}

BetaPrior BetaPrior::make_gaussian(double variance)
{
    if (!(variance > 0)) throw std::invalid_argument("BetaPrior: gaussian variance must be positive");
    BetaPrior b;
    b.kind = PriorKind::gaussian;
    b.gaussian_variance = variance;
    return b;
}

double BetaPrior::log_density(const Vec<double>& beta, double tau) const
{
    if (kind == PriorKind::gaussian) return -beta.squaredNorm() / (2 * gaussian_variance);
    return tau * catalytic->mean_likelihood().value(beta);
}

double log_joint_posterior(const Vec<double>& beta, const Vec<double>& h, const SurvivalData<double>& data,
                           const PartitionGrid& grid, const GammaProcessConfig& gp, const CatalyticPrior<double>& prior)
{
    return grouped_log_likelihood(beta, h, data, grid) + log_increment_prior(h, gp.increment_shapes(grid), gp.c0) +
           log_catalytic_prior(beta, prior);
}

TauConditional tau_conditional(const Vec<double>& beta, const CatalyticPrior<double>& prior)
{
    if (!prior.adaptive()) throw std::invalid_argument("sample_tau_conditional: prior has no adaptive hyperparameters");
    const auto& hyper = *prior.adaptive();
    const double ell = prior.mean_likelihood().value(beta);
    TauConditional c;
    c.shape = static_cast<double>(prior.dim()) + hyper.alpha;
    c.rate = compute_kappa(prior) + 1.0 / hyper.gamma - ell;
    if (!(c.rate > 0) || !std::isfinite(c.rate)) {
        throw std::domain_error("sample_tau_conditional: nonpositive Gamma rate " + std::to_string(c.rate));
    }
    return c;
}

double sample_tau_conditional(const Vec<double>& beta, const CatalyticPrior<double>& prior, Rng& rng)
{
    const auto c = tau_conditional(beta, prior);
    std::gamma_distribution<double> gamma(c.shape, 1.0 / c.rate);
    return gamma(rng);
}

namespace {

struct StartPoint {
    Vec<double> beta;
    Mat<double> neg_hessian;
};

StartPoint start_point(const SurvivalData<double>& data, const BetaPrior& prior, const SamplerConfig& config)
{
    const Index p = data.cols();
    StartPoint s;
    FitResult<double> fit;
    if (prior.kind == PriorKind::gaussian) {
        PenaltyOptions po;
        po.standardize = false;
        fit = ridge(data, 1.0 / (2 * prior.gaussian_variance), po);
    } else {
        fit = cre(data, *prior.catalytic);
    }
    s.beta = config.beta_start ? *config.beta_start : fit.beta;
    s.neg_hessian = fit.neg_hessian;
    if (s.beta.size() != p) throw std::invalid_argument("sample_posterior: beta_start has wrong length");
    if (!s.beta.allFinite()) s.beta = Vec<double>::Zero(p);
    return s;
}

Mat<double> proposal_factor(const Mat<double>& neg_hessian, Index p)
{
    Eigen::LLT<Mat<double>> info(neg_hessian);
    if (neg_hessian.size() == p * p && info.info() == Eigen::Success) {
        const Mat<double> cov = info.solve(Mat<double>::Identity(p, p));
        Eigen::LLT<Mat<double>> chol(cov);
        if (chol.info() == Eigen::Success && cov.allFinite()) return chol.matrixL();
    }
    return 0.1 * Mat<double>::Identity(p, p);
}

struct ChainOutput {
    Mat<double> beta;
    Mat<double> h;
    Vec<double> tau;
    double beta_accept = 0;
    double h_accept = 0;
};

ChainOutput run_chain(const SurvivalData<double>& data, const GroupedData& grouped, const Vec<double>& shapes,
                      double c0, const BetaPrior& prior, const SamplerConfig& config, const StartPoint& start,
                      int chain)
{
    const Index p = data.cols();
    const Index J = grouped.intervals();
    const int kept = config.iterations - config.burnin;
    const bool adaptive = prior.kind == PriorKind::adaptive;
    Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(chain) + 1);
    std::normal_distribution<double> normal(0, 1);
    std::uniform_real_distribution<double> unif(0, 1);
    auto log_u = [&] { return std::log(unif(rng)); };

    Vec<double> beta = start.beta;
    Vec<double> theta = (data.covariates() * beta).array().exp().matrix();
    Vec<double> h = config.h_start ? *config.h_start : Vec<double>(shapes / c0);
    if (h.size() != J || !((h.array() > 0).all())) throw std::invalid_argument("sample_posterior: invalid h_start");
    double tau = prior.catalytic ? prior.catalytic->tau() : 0.0;

    Mat<double> factor = proposal_factor(start.neg_hessian, p);
    double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(p)));
    Vec<double> h_log_step = Vec<double>::Constant(J, 0.5);

    ChainOutput out;
    out.beta.resize(kept, p);
    out.h.resize(kept, J);
    if (adaptive) out.tau.resize(kept);
    long beta_acc = 0, h_acc = 0;

    const int cov_at = config.burnin / 2;
    const int cov_from = config.burnin / 4;
    Mat<double> burn_draws(std::max(cov_at - cov_from, 0), p);

    auto beta_target = [&](const Vec<double>& th, const Vec<double>& b, const Vec<double>& s) {
        double v = prior.log_density(b, tau);
        for (Index j = 0; j < J; ++j) v += grouped.interval_term(j, h[j], s[j], th);
        return v;
    };

    Vec<double> surv = grouped.survivor_sums(theta);
    double current = beta_target(theta, beta, surv);
    Vec<double> z(p);

    for (int it = 0; it < config.iterations; ++it) {
        const bool burning = it < config.burnin;
        const double gain = 1.0 / std::pow(it + 1.0, 0.6);

        if (!config.fix_beta) {
            for (Index k = 0; k < p; ++k) z[k] = normal(rng);
            const Vec<double> prop = beta + std::exp(log_scale) * (factor * z);
            const Vec<double> prop_theta = (data.covariates() * prop).array().exp().matrix();
            const Vec<double> prop_surv = grouped.survivor_sums(prop_theta);
            const double cand = prop_theta.allFinite() ? beta_target(prop_theta, prop, prop_surv)
                                                       : -std::numeric_limits<double>::infinity();
            const bool accept = std::isfinite(cand) && log_u() < cand - current;
            if (accept) {
                beta = prop;
                theta = prop_theta;
                surv = prop_surv;
            }
            if (burning) {
                log_scale += gain * ((accept ? 1.0 : 0.0) - 0.23);
            } else if (accept) {
                ++beta_acc;
            }
            if (burning && config.adapt_covariance && it >= cov_from && it < cov_at) {
                burn_draws.row(it - cov_from) = beta.transpose();
            }
            if (burning && config.adapt_covariance && it + 1 == cov_at && burn_draws.rows() >= 2 * p + 10) {
                const Vec<double> mean = burn_draws.colwise().mean().transpose();
                const Mat<double> centered = burn_draws.rowwise() - mean.transpose();
                Mat<double> cov = centered.transpose() * centered / static_cast<double>(burn_draws.rows() - 1);
                cov.diagonal().array() += 1e-10 * std::max(cov.trace() / static_cast<double>(p), 1e-300);
                Eigen::LLT<Mat<double>> chol(cov);
                if (chol.info() == Eigen::Success && cov.allFinite()) {
                    factor = chol.matrixL();
                    log_scale = std::log(2.38 / std::sqrt(static_cast<double>(p)));
                }
            }
        }

        long accepted_h = 0;
        for (Index j = 0; j < J; ++j) {
            const double old_h = h[j];
            const double step = h_log_step[j] * normal(rng);
            const double new_h = old_h * std::exp(step);
            double ratio = -std::numeric_limits<double>::infinity();
            if (new_h > 0 && std::isfinite(new_h)) {
                ratio = grouped.interval_term(j, new_h, surv[j], theta) - grouped.interval_term(j, old_h, surv[j], theta) +
                        shapes[j] * step - c0 * (new_h - old_h);  // (a-1) log h' ratio plus the log-scale Jacobian
            }
            const bool accept = log_u() < ratio;
            if (accept) {
                h[j] = new_h;
                ++accepted_h;
            }
            if (burning) h_log_step[j] *= std::exp(gain * ((accept ? 1.0 : 0.0) - 0.44));
        }
        if (!burning) h_acc += accepted_h;

        if (adaptive) tau = sample_tau_conditional(beta, *prior.catalytic, rng);
        current = beta_target(theta, beta, surv);

        if (!burning) {
            const int row = it - config.burnin;
            out.beta.row(row) = beta.transpose();
            out.h.row(row) = h.transpose();
            if (adaptive) out.tau[row] = tau;
        }
    }
    out.beta_accept = config.fix_beta ? 0.0 : static_cast<double>(beta_acc) / kept;
    out.h_accept = static_cast<double>(h_acc) / (static_cast<double>(kept) * static_cast<double>(J));
    return out;
}

} // namespace

PosteriorSamples sample_posterior(const SurvivalData<double>& data, const PartitionGrid& grid,
                                  const GammaProcessConfig& gp, const BetaPrior& prior, const SamplerConfig& config)
{
    if (config.iterations <= config.burnin || config.burnin < 0) {
        throw std::invalid_argument("sample_posterior: iterations must exceed burnin");
    }
    if (config.chains < 1) throw std::invalid_argument("sample_posterior: chains must be >= 1");
    if (prior.kind != PriorKind::gaussian) {
        if (!prior.catalytic) throw std::invalid_argument("sample_posterior: catalytic prior missing");
        if (prior.catalytic->dim() != data.cols()) throw std::invalid_argument("sample_posterior: prior dimension mismatch");
    }
    if (prior.kind == PriorKind::adaptive && !prior.catalytic->adaptive()) {
        throw std::invalid_argument("sample_posterior: adaptive prior needs (alpha, gamma)");
    }
    if (config.adaptive_tau != (prior.kind == PriorKind::adaptive)) {
        throw std::invalid_argument("sample_posterior: adaptive_tau must match the adaptive prior");
    }
    if (!(gp.c0 > 0)) throw std::invalid_argument("sample_posterior: c0 must be positive");

    const GroupedData grouped(data, grid);
    const Vec<double> shapes = gp.increment_shapes(grid);
    const StartPoint start = start_point(data, prior, config);

    std::vector<ChainOutput> chains(static_cast<std::size_t>(config.chains));
    parallel_for(chains.size(), config.threads, [&](std::size_t c) {
        chains[c] = run_chain(data, grouped, shapes, gp.c0, prior, config, start, static_cast<int>(c));
    });

    const Index kept = config.iterations - config.burnin;
    PosteriorSamples out;
    out.burnin = config.burnin;
    out.chains = config.chains;
    out.kept_per_chain = kept;
    out.seed = config.seed;
    out.grid = grid;
    out.beta_draws.resize(kept * config.chains, data.cols());
    out.h_draws.resize(kept * config.chains, grid.intervals());
    if (prior.kind == PriorKind::adaptive) out.tau_draws.resize(kept * config.chains);
    for (int c = 0; c < config.chains; ++c) {
        const auto& ch = chains[static_cast<std::size_t>(c)];
        out.beta_draws.middleRows(c * kept, kept) = ch.beta;
        out.h_draws.middleRows(c * kept, kept) = ch.h;
        if (out.has_tau()) out.tau_draws.segment(c * kept, kept) = ch.tau;
        out.beta_acceptance.push_back(ch.beta_accept);
        out.h_acceptance.push_back(ch.h_accept);
    }
    return out;
}

double split_rhat(const Vec<double>& draws, int chains)
{
    if (chains < 1 || draws.size() % chains != 0) throw std::invalid_argument("split_rhat: draws not divisible by chains");
    const Index per_chain = draws.size() / chains;
    const Index half = per_chain / 2;
    if (half < 2) return std::numeric_limits<double>::quiet_NaN();
    const int m = 2 * chains;
    std::vector<double> means, vars;
    for (int c = 0; c < chains; ++c) {
        for (int s = 0; s < 2; ++s) {
            const auto seg = draws.segment(c * per_chain + s * half, half);
            const double mu = seg.mean();
            means.push_back(mu);
            vars.push_back((seg.array() - mu).square().sum() / static_cast<double>(half - 1));
        }
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
    double b = 0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= static_cast<double>(half) / (m - 1);
    const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
    if (!(w > 0)) return b > 0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    const double var_plus = (static_cast<double>(half) - 1) / static_cast<double>(half) * w + b / static_cast<double>(half);
    return std::sqrt(var_plus / w);
}

std::vector<CoefficientSummary> summarize_draws(const Mat<double>& draws, int chains, double level)
{
    if (!(level > 0 && level < 1)) throw std::invalid_argument("posterior_summary: level must lie in (0,1)");
    if (draws.rows() < 1) throw std::invalid_argument("posterior_summary: no draws");
    std::vector<CoefficientSummary> out;
    const double n = static_cast<double>(draws.rows());
    for (Index j = 0; j < draws.cols(); ++j) {
        CoefficientSummary s;
        const Vec<double> col = draws.col(j);
        s.mean = col.mean();
        s.sd = draws.rows() > 1 ? std::sqrt((col.array() - s.mean).square().sum() / (n - 1)) : 0.0;
        std::vector<double> sorted(col.data(), col.data() + col.size());
        std::sort(sorted.begin(), sorted.end());
        s.lower = quantile_sorted(sorted, (1 - level) / 2);
        s.upper = quantile_sorted(sorted, (1 + level) / 2);
        s.rhat = split_rhat(col, chains);
        out.push_back(s);
    }
    return out;
}

std::vector<CoefficientSummary> posterior_summary(const PosteriorSamples& samples, double level)
{
    if (samples.draws() < 10) throw std::invalid_argument("posterior_summary: need at least 10 draws");
    return summarize_draws(samples.beta_draws, samples.chains, level);
}

} // namespace catcox
