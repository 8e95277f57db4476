#include "catcox/simlab.hpp"

#include "catcox/bayes_sampler.hpp"
#include "catcox/estimators.hpp"
#include "catcox/parallel.hpp"
#include "catcox/synthesis.hpp"
#include "catcox/tuning.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace catcox {

const std::vector<std::string>& point_method_tags()
{
    static const std::vector<std::string> tags{"mple", "cre_cv", "cre_p", "wme_cv", "wme_p", "ridge_cv", "lasso_cv"};
    return tags;
}

const std::vector<std::string>& bayes_method_tags()
{
    static const std::vector<std::string> tags{"cpm_cv", "cpm_p", "apm", "gpm_cv"};
    return tags;
}

Vec<double> table2_beta(Index p)
{
    if (p < 8) throw std::invalid_argument("table2_beta: p must be at least 8");
    Vec<double> b = Vec<double>::Ones(p);
    b.head(8) << 4, -4, 3, -3, 1, -1, 1, -1;
    return b / std::sqrt(static_cast<double>(p));
}

Vec<double> sphere_beta(Index p, double radius, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec<double> b(p);
    for (Index j = 0; j < p; ++j) b[j] = normal(rng);
    return radius * b / b.norm();
}

Mat<double> sample_covariates(CovariateLaw law, Index n, Index p, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat<double> x(n, p);
    if (law == CovariateLaw::gaussian) {
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < p; ++j) x(i, j) = normal(rng);
        return x;
    }
    if (p < 3) throw std::invalid_argument("sample_covariates: the table2 law needs p >= 3");
    std::bernoulli_distribution bern(0.1);
    std::chi_squared_distribution<double> chi1(1.0), chi4(4.0);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = bern(rng) ? 1.0 : 0.0;
        x(i, 1) = chi1(rng);
        x(i, 2) = chi4(rng);
        for (Index j = 3; j < p; ++j) x(i, j) = normal(rng);
    }
    return x;
}

std::vector<ColumnKind> covariate_kinds(CovariateLaw law, Index p)
{
    std::vector<ColumnKind> kinds(static_cast<std::size_t>(p), ColumnKind::continuous);
    if (law == CovariateLaw::table2 && p > 0) kinds[0] = ColumnKind::binary;
    return kinds;
}

SurvivalData<double> simulate_survival(const Mat<double>& x, const Vec<double>& beta0, double base_rate, double xi,
                                       Rng& rng, std::vector<ColumnKind> kinds)
{
    const Index n = x.rows();
    const Vec<double> eta = x * beta0;
    Vec<double> y(n);
    StatusVec status(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index i = 0; i < n; ++i) {
        const double rate = base_rate * std::exp(eta[i]);
        // 1 - U keeps the log argument in (0, 1]
        const double t = -std::log1p(-unif(rng)) / rate;
        const double c = std::isinf(xi) ? std::numeric_limits<double>::infinity() : xi * unif(rng);
        y[i] = std::min(t, c);
        status[i] = t <= c;
    }
    return SurvivalData<double>(x, std::move(y), std::move(status), std::move(kinds));
}

double censoring_probability(const Vec<double>& rates, double xi)
{
    double total = 0.0;
    for (Index i = 0; i < rates.size(); ++i) {
        const double z = rates[i] * xi;
        total += z < 1e-8 ? 1.0 - z / 2 : -std::expm1(-z) / z;
    }
    return total / static_cast<double>(rates.size());
}

double calibrate_xi(const Vec<double>& beta0, double target, CovariateLaw law, double base_rate, Index mc_size, Rng& rng)
{
    if (!(target > 0 && target < 1)) throw std::invalid_argument("calibrate_xi: censoring rate must lie in (0, 1)");
    if (mc_size < 1) throw std::invalid_argument("calibrate_xi: empty Monte-Carlo sample");
    const Mat<double> x = sample_covariates(law, mc_size, beta0.size(), rng);
    const Vec<double> rates = (base_rate * (x * beta0).array().exp()).matrix();

    // censoring probability decreases in xi from 1 to 0
    double lo = 1.0, hi = 1.0;
    for (int k = 0; censoring_probability(rates, lo) < target; ++k) {
        if (k == 200) throw std::runtime_error("calibrate_xi: could not bracket xi from below");
        lo /= 4;
    }
    for (int k = 0; censoring_probability(rates, hi) > target; ++k) {
        if (k == 200) throw std::runtime_error("calibrate_xi: could not bracket xi from above");
        hi *= 4;
    }
    for (int it = 0; it < 200 && hi / lo > 1 + 1e-12; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (censoring_probability(rates, mid) > target) lo = mid;
        else hi = mid;
    }
    const double xi = std::sqrt(lo * hi);
    if (std::abs(censoring_probability(rates, xi) - target) >= 0.005)
        throw std::runtime_error("calibrate_xi: target censoring rate not attained");
    return xi;
}

double calibrate_xi(const SimulationConfig& config, const Vec<double>& beta0, Rng& rng)
{
    return calibrate_xi(beta0, config.censor_rate, config.law, config.base_rate, config.xi_mc_size, rng);
}

SimulatedData simulate_dataset(const SimulationConfig& config, double xi, Rng& rng)
{
    SimulatedData out;
    out.beta0 = table2_beta(config.p);
    const Mat<double> x = sample_covariates(config.law, config.n, config.p, rng);
    out.data = simulate_survival(x, out.beta0, config.base_rate, xi, rng, covariate_kinds(config.law, config.p));
    return out;
}

SimulatedData simulate_dataset(const SimulationConfig& config, Rng& rng)
{
    const double xi = calibrate_xi(config, table2_beta(config.p), rng);
    return simulate_dataset(config, xi, rng);
}

namespace {

bool is_known_method(const std::string& m)
{
    const auto& a = point_method_tags();
    const auto& b = bayes_method_tags();
    return std::find(a.begin(), a.end(), m) != a.end() || std::find(b.begin(), b.end(), m) != b.end();
}

bool is_bayes(const std::string& m)
{
    const auto& b = bayes_method_tags();
    return std::find(b.begin(), b.end(), m) != b.end();
}

/// Everything one replication shares across methods; built on first use.
class Replication {
public:
    Replication(const SimulationConfig& config, const SurvivalData<double>& train, int rep)
        : config_(config), train_(train), rep_(rep)
    {
    }

    const SyntheticDataset<double>& synth()
    {
        if (!synth_) {
            synth_ = std::make_unique<SyntheticDataset<double>>(make_synthetic(
                train_, config_.M, CovariateGenSchema::from_data(train_), derive_seed(config_.seed, rep_ + 1, 2)));
        }
        return *synth_;
    }

    const CatalyticPrior<double>& prior()
    {
        if (!prior_) {
            const auto& s = synth();
            prior_ = std::make_unique<CatalyticPrior<double>>(s, static_cast<double>(config_.p), s.meta.psi_hat);
        }
        return *prior_;
    }

    CVConfig cv_config(std::vector<double> grid) const
    {
        CVConfig cv;
        cv.K = config_.folds;
        cv.grid = std::move(grid);
        cv.seed = derive_seed(config_.seed, static_cast<std::uint64_t>(rep_) + 1, 3);
        return cv;
    }

    double tuned(const std::string& key)
    {
        auto it = tuned_.find(key);
        if (it != tuned_.end()) return it->second;
        double v = 0.0;
        if (key == "cre") {
            v = cvpl(train_, cre_tuned(prior()), cv_config(default_tau_grid(config_.p))).best_value;
        } else if (key == "wme") {
            v = cvpl(train_, wme_tuned(synth()), cv_config(default_tau_grid(config_.p))).best_value;
        } else if (key == "ridge") {
            v = cvpl(train_, ridge_tuned(), cv_config(default_lambda_grid(train_))).best_value;
        } else if (key == "lasso") {
            v = cvpl(train_, lasso_tuned(), cv_config(default_lambda_grid(train_))).best_value;
        } else {
            throw std::logic_error("unknown tuning key " + key);
        }
        tuned_[key] = v;
        return v;
    }

    FitResult<double> point(const std::string& m, double& tuning)
    {
        const double p = static_cast<double>(config_.p);
        if (m == "mple") return catcox::mple(train_);
        if (m == "cre_p") {
            tuning = p;
            return cre(train_, prior().with_tau(p));
        }
        if (m == "cre_cv") {
            tuning = tuned("cre");
            return cre(train_, prior().with_tau(tuning));
        }
        if (m == "wme_p") {
            tuning = p;
            return wme(train_, synth(), p);
        }
        if (m == "wme_cv") {
            tuning = tuned("wme");
            return wme(train_, synth(), tuning);
        }
        if (m == "ridge_cv") {
            tuning = tuned("ridge");
            return ridge(train_, tuning);
        }
        if (m == "lasso_cv") {
            tuning = tuned("lasso");
            return lasso(train_, tuning);
        }
        throw std::logic_error("unknown point method " + m);
    }

    /// Posterior summaries on the raw covariate scale.
    std::vector<CoefficientSummary> bayes(const std::string& m, double& tuning)
    {
        const double p = static_cast<double>(config_.p);
        std::optional<BetaPrior> prior_spec;
        bool adaptive = false;
        if (m == "cpm_p") {
            tuning = p;
            prior_spec = BetaPrior::make_catalytic(prior().with_tau(p));
        } else if (m == "cpm_cv") {
            tuning = tuned("cre");
            prior_spec = BetaPrior::make_catalytic(prior().with_tau(tuning));
        } else if (m == "apm") {
            const auto& s = synth();
            prior_spec = BetaPrior::make_adaptive(CatalyticPrior<double>(s, p, s.meta.psi_hat, AdaptiveHyper{}));
            adaptive = true;
        } else if (m == "gpm_cv") {
            // variance 1 / (2 lambda) on standardized covariates, lambda from ridge CV
            tuning = tuned("ridge");
            prior_spec = BetaPrior::make_gaussian(1.0 / (2.0 * tuning));
        } else {
            throw std::logic_error("unknown Bayesian method " + m);
        }
        const auto grid = build_partition(train_, config_.bayes_intervals);
        const auto gp = GammaProcessConfig::from_data(train_);
        SamplerConfig sc;
        sc.iterations = config_.bayes_iterations;
        sc.burnin = config_.bayes_burnin;
        sc.seed = derive_seed(config_.seed, static_cast<std::uint64_t>(rep_) + 1, 4);
        sc.adaptive_tau = adaptive;
        if (m != "gpm_cv") return posterior_summary(sample_posterior(train_, grid, gp, *prior_spec, sc));

        const auto st = Standardizer<double>::fit(train_.covariates());
        const auto work = train_.with_covariates(st.apply(train_.covariates()));
        auto summary = posterior_summary(sample_posterior(work, grid, gp, *prior_spec, sc));
        for (std::size_t j = 0; j < summary.size(); ++j) {
            const double s = st.scale[static_cast<Index>(j)];
            summary[j].mean /= s;
            summary[j].sd /= s;
            summary[j].lower /= s;
            summary[j].upper /= s;
        }
        return summary;
    }

private:
    const SimulationConfig& config_;
    const SurvivalData<double>& train_;
    int rep_;
    std::unique_ptr<SyntheticDataset<double>> synth_;
    std::unique_ptr<CatalyticPrior<double>> prior_;
    std::map<std::string, double> tuned_;
};

struct ReplicationOutcome {
    std::vector<MethodRecord> records;
    std::vector<std::string> failed_methods;
    std::vector<std::string> messages;
    Index censored = 0;
    Index subjects = 0;
};

} // namespace

SimulationReport run_study(const SimulationConfig& config)
{
    if (config.replications < 0) throw std::invalid_argument("run_study: negative replication count");
    if (!(config.censor_rate > 0 && config.censor_rate < 1)) throw std::invalid_argument("run_study: censor rate must lie in (0, 1)");
    for (const auto& m : config.methods)
        if (!is_known_method(m)) throw std::invalid_argument("run_study: unknown method '" + m + "'");

    SimulationReport report;
    report.config = config;
    report.methods = config.methods;
    report.replications = config.replications;
    for (const auto& m : config.methods) report.summary[m] = MethodSummary{};
    if (config.replications == 0) return report;

    const Vec<double> beta0 = table2_beta(config.p);
    Rng xi_rng = make_rng(config.seed, 0);
    report.xi = calibrate_xi(config, beta0, xi_rng);

    std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(config.replications));
    parallel_for(outcomes.size(), config.threads, [&](std::size_t r) {
        const int rep = static_cast<int>(r);
        Rng train_rng = make_rng(config.seed, r + 1, 0);
        Rng test_rng = make_rng(config.seed, r + 1, 1);
        const auto train = simulate_dataset(config, report.xi, train_rng).data;
        const auto test = simulate_dataset(config, report.xi, test_rng).data;
        ReplicationOutcome& out = outcomes[r];
        out.subjects = train.rows();
        out.censored = train.rows() - train.event_count();
        Replication ctx(config, train, rep);
        for (const auto& m : config.methods) {
            try {
                MethodRecord rec;
                rec.method = m;
                rec.replication = rep;
                if (is_bayes(m)) {
                    const auto summary = ctx.bayes(m, rec.tuning);
                    rec.beta_hat.resize(config.p);
                    double covered = 0, width = 0;
                    for (Index j = 0; j < config.p; ++j) {
                        const auto& s = summary[static_cast<std::size_t>(j)];
                        rec.beta_hat[j] = s.mean;
                        covered += (s.lower <= beta0[j] && beta0[j] <= s.upper) ? 1.0 : 0.0;
                        width += s.upper - s.lower;
                    }
                    rec.coverage = covered / static_cast<double>(config.p);
                    rec.width = width / static_cast<double>(config.p);
                } else {
                    const auto fit = ctx.point(m, rec.tuning);
                    rec.beta_hat = fit.beta;
                    rec.diverged = fit.diverged;
                }
                rec.squared_error = (rec.beta_hat - beta0).squaredNorm();
                rec.deviance = predictive_deviance(beta0, rec.beta_hat, test);
                if (!std::isfinite(rec.squared_error) || !std::isfinite(rec.deviance))
                    throw std::runtime_error("non-finite estimate");
                out.records.push_back(std::move(rec));
            } catch (const std::exception& e) {
                out.failed_methods.push_back(m);
                out.messages.push_back("replication " + std::to_string(rep) + ", " + m + ": " + e.what());
            }
        }
    });

    Index censored = 0, subjects = 0;
    std::map<std::string, std::vector<double>> se, dev, cov, wid;
    for (auto& o : outcomes) {
        censored += o.censored;
        subjects += o.subjects;
        for (const auto& m : o.failed_methods) ++report.summary[m].failures;
        for (auto& msg : o.messages) report.failure_messages.push_back(std::move(msg));
        for (auto& rec : o.records) {
            se[rec.method].push_back(rec.squared_error);
            dev[rec.method].push_back(rec.deviance);
            if (rec.coverage >= 0) {
                cov[rec.method].push_back(rec.coverage);
                wid[rec.method].push_back(rec.width);
            }
            if (rec.diverged) ++report.summary[rec.method].diverged;
            report.records.push_back(std::move(rec));
        }
    }
    report.realized_censoring = static_cast<double>(censored) / static_cast<double>(subjects);
    for (const auto& m : config.methods) {
        auto& s = report.summary[m];
        s.squared_error = mean_se(se[m]);
        s.deviance = mean_se(dev[m]);
        s.coverage = mean_se(cov[m]);
        s.width = mean_se(wid[m]);
    }
    return report;
}

BiasDemo mple_bias_demo(Index p, Index n, Rng& rng)
{
    if (n <= p) throw std::invalid_argument("mple_bias_demo: need n > p");
    BiasDemo out;
    out.beta0 = Vec<double>::Zero(p);
    const Index k = p / 5;
    out.beta0.head(k).setConstant(10.0);
    out.beta0.segment(k, k).setConstant(-10.0);
    const Mat<double> x = sample_covariates(CovariateLaw::gaussian, n, p, rng) / std::sqrt(static_cast<double>(n));
    const auto data = simulate_survival(x, out.beta0, 1.0, std::numeric_limits<double>::infinity(), rng);
    const auto fit = mple(data);
    out.beta_hat = fit.beta;
    out.diverged = fit.diverged;
    return out;
}

std::vector<ConsistencyCell> consistency_demo(const ConsistencyConfig& config)
{
    const std::size_t np = config.p_list.size(), nn = config.n_list.size();
    const std::size_t seeds = static_cast<std::size_t>(std::max(config.seeds, 0));
    std::vector<double> cre_loss(np * nn * seeds), wme_loss(np * nn * seeds);

    // coefficient vector and censoring bound depend on (p, seed) only, so every n sees the same truth
    std::vector<Vec<double>> betas(np * seeds);
    std::vector<double> xis(np * seeds);
    parallel_for(np * seeds, config.threads, [&](std::size_t t) {
        const std::size_t pi = t / seeds, s = t % seeds;
        Rng rng = make_rng(config.seed, s + 1, 1000000 + pi);
        betas[t] = sphere_beta(config.p_list[pi], config.radius, rng);
        xis[t] = calibrate_xi(betas[t], config.censor_rate, CovariateLaw::gaussian, config.base_rate, 20000, rng);
    });

    parallel_for(np * nn * seeds, config.threads, [&](std::size_t t) {
        const std::size_t s = t % seeds, cell = t / seeds, pi = cell / nn, ni = cell % nn;
        const Index p = config.p_list[pi], n = config.n_list[ni];
        const Vec<double>& beta0 = betas[pi * seeds + s];
        Rng rng = make_rng(config.seed, s + 1, 1 + cell);
        const Mat<double> x = sample_covariates(CovariateLaw::gaussian, n, p, rng);
        const auto data = simulate_survival(x, beta0, config.base_rate, xis[pi * seeds + s], rng);
        const auto synth = make_synthetic(data, config.M, CovariateGenSchema::from_data(data, 0.0),
                                          derive_seed(config.seed, s + 1, 2000000 + cell));
        const double pd = static_cast<double>(p);
        const CatalyticPrior<double> prior(synth, pd, synth.meta.psi_hat);
        cre_loss[t] = (cre(data, prior).beta - beta0).squaredNorm();
        wme_loss[t] = (wme(data, synth, pd / 5).beta - beta0).squaredNorm();
    });

    std::vector<ConsistencyCell> cells;
    for (std::size_t cell = 0; cell < np * nn; ++cell) {
        ConsistencyCell c;
        c.p = config.p_list[cell / nn];
        c.n = config.n_list[cell % nn];
        c.cre_loss = mean_se({cre_loss.begin() + cell * seeds, cre_loss.begin() + (cell + 1) * seeds});
        c.wme_loss = mean_se({wme_loss.begin() + cell * seeds, wme_loss.begin() + (cell + 1) * seeds});
        cells.push_back(c);
    }
    return cells;
}

namespace {

void csv_row(std::ostream& out, const std::string& scenario, const std::string& method, const std::string& metric,
             const MeanSe& v)
{
    out << scenario << ',' << method << ',' << metric << ',' << v.mean << ',' << v.se << ',' << v.count << '\n';
}

nlohmann::json to_json(const MeanSe& v) { return {{"mean", v.mean}, {"se", v.se}, {"count", v.count}}; }

} // namespace

void write_report_csv(const SimulationReport& report, const std::string& scenario, std::ostream& out)
{
    const auto old = out.precision(10);
    out << "scenario,method,metric,mean,se,count\n";
    for (const auto& m : report.methods) {
        const auto& s = report.summary.at(m);
        csv_row(out, scenario, m, "squared_error", s.squared_error);
        csv_row(out, scenario, m, "deviance", s.deviance);
        if (s.coverage.count) {
            csv_row(out, scenario, m, "coverage", s.coverage);
            csv_row(out, scenario, m, "width", s.width);
        }
        csv_row(out, scenario, m, "failures", {static_cast<double>(s.failures), 0.0, 1});
        csv_row(out, scenario, m, "diverged", {static_cast<double>(s.diverged), 0.0, 1});
    }
    csv_row(out, scenario, "all", "censoring", {report.realized_censoring, 0.0, static_cast<std::size_t>(report.replications)});
    out.precision(old);
}

std::string report_json(const SimulationReport& report, const std::string& scenario)
{
    nlohmann::json j;
    j["scenario"] = scenario;
    j["n"] = report.config.n;
    j["p"] = report.config.p;
    j["censor_rate"] = report.config.censor_rate;
    j["replications"] = report.replications;
    j["seed"] = report.config.seed;
    j["M"] = report.config.M;
    j["xi"] = report.xi;
    j["realized_censoring"] = report.realized_censoring;
    for (const auto& m : report.methods) {
        const auto& s = report.summary.at(m);
        nlohmann::json e{{"squared_error", to_json(s.squared_error)},
                         {"deviance", to_json(s.deviance)},
                         {"failures", s.failures},
                         {"diverged", s.diverged}};
        if (s.coverage.count) {
            e["coverage"] = to_json(s.coverage);
            e["width"] = to_json(s.width);
        }
        j["methods"][m] = e;
    }
    j["failure_messages"] = report.failure_messages;
    return j.dump(2);
}

void write_consistency_csv(const std::vector<ConsistencyCell>& cells, std::ostream& out)
{
    out << "p,n,cre_loss,cre_se,wme_loss,wme_se\n";
    for (const auto& c : cells)
        out << c.p << ',' << c.n << ',' << c.cre_loss.mean << ',' << c.cre_loss.se << ',' << c.wme_loss.mean << ','
            << c.wme_loss.se << '\n';
}

} // namespace catcox
