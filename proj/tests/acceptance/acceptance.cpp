// Acceptance runner: prints one "criterion k PASS|FAIL|SKIP: ..." line per criterion.
// Usage: catcox_acceptance [--strict] [k ...]   (no numbers = all twelve)

#include "catcox/bayes_sampler.hpp"
#include "catcox/cli_io.hpp"
#include "catcox/parallel.hpp"
#include "catcox/simlab.hpp"
#include "catcox/tuning.hpp"
#include "test_support.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#ifndef CATCOX_SOURCE_DIR
#define CATCOX_SOURCE_DIR "."
#endif
#ifndef CATCOX_DEFAULT_PBC_CSV
#define CATCOX_DEFAULT_PBC_CSV ""
#endif

using namespace catcox;
using catcox::testing::brute_force_log_pl;
using catcox::testing::fd_gradient;
using catcox::testing::fd_jacobian;
using catcox::testing::random_data;
using catcox::testing::rel_err;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
    Verdict verdict = Verdict::fail;
    std::string detail;
};

Outcome judge(bool ok, const std::ostringstream& detail) { return {ok ? Verdict::pass : Verdict::fail, detail.str()}; }

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

const std::uint64_t kStudySeed = 20240601;

SimulationConfig table2_config(Index p, double censor)
{
    SimulationConfig c;
    c.p = p;
    c.n = 100;
    c.censor_rate = censor;
    c.replications = 100;
    c.seed = kStudySeed;
    c.threads = default_thread_budget();
    return c;
}

void band(std::ostringstream& os, bool& ok, const SimulationReport& rep, const std::string& method, double target, double tol)
{
    const double m = rep.summary.at(method).squared_error.mean;
    const bool hit = within(m, target, tol);
    ok = ok && hit;
    os << ' ' << method << '=' << m << (hit ? "" : "(out)") << " [" << target << "+-" << tol << ']';
}

Outcome criterion1()
{
    const auto rep = run_study(table2_config(20, 0.2));
    std::ostringstream os;
    os.precision(3);
    bool ok = true;
    band(os, ok, rep, "mple", 0.95, 0.60);
    band(os, ok, rep, "cre_p", 0.86, 0.20);
    band(os, ok, rep, "wme_cv", 0.51, 0.20);
    band(os, ok, rep, "ridge_cv", 0.58, 0.30);
    band(os, ok, rep, "lasso_cv", 0.75, 0.40);
    os << " | unscored cre_cv=" << rep.summary.at("cre_cv").squared_error.mean
       << " wme_p=" << rep.summary.at("wme_p").squared_error.mean << " censoring=" << rep.realized_censoring;
    return judge(ok, os);
}

Outcome criterion2()
{
    auto cfg = table2_config(60, 0.2);
    cfg.methods = {"mple"};
    const auto rep = run_study(cfg);
    const auto& s = rep.summary.at("mple");
    std::ostringstream os;
    os << "p=60 mple squared error " << s.squared_error.mean << " (se " << s.squared_error.se << "), need > 15; diverged "
       << s.diverged << "/" << cfg.replications;
    return judge(s.squared_error.mean > 15, os);
}

Outcome criterion3()
{
    std::ostringstream os;
    os.precision(3);
    bool ok = true;
    for (const auto& [r, mple_t, mple_tol, wme_t, wme_tol] :
         {std::tuple{0.1, 0.84, 0.50, 0.48, 0.20}, std::tuple{0.4, 1.56, 1.10, 0.69, 0.30}}) {
        auto cfg = table2_config(20, r);
        cfg.methods = {"mple", "wme_cv"};
        const auto rep = run_study(cfg);
        os << " r=" << r << " (realized " << rep.realized_censoring << "):";
        band(os, ok, rep, "mple", mple_t, mple_tol);
        band(os, ok, rep, "wme_cv", wme_t, wme_tol);
    }
    return judge(ok, os);
}

Outcome criterion4()
{
    double wme_lo = 0, wme_hi = 0, cre_lo = 0, cre_hi = 0;
    bool converged = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = random_data(80, 3, seed);
        const auto s = make_synthetic(d, 200, CovariateGenSchema::from_data(d), seed);
        const auto base = mple(d);
        const SurvivalData<double> synth_only(s.covariates, s.times, StatusVec::Constant(s.size(), true));
        const auto target = mple(synth_only);
        const CatalyticPrior<double> weak(s, 1e-10, fit_exponential(d));
        const auto fits = {wme(d, s, 1e-10), wme(d, s, 1e10), cre(d, weak), cre(d, weak.with_tau(1e10))};
        for (const auto& f : fits) converged = converged && f.converged;
        converged = converged && base.converged && target.converged;
        const auto& f = std::data(fits);
        wme_lo = std::max(wme_lo, (f[0].beta - base.beta).cwiseAbs().maxCoeff());
        wme_hi = std::max(wme_hi, (f[1].beta - target.beta).cwiseAbs().maxCoeff());
        cre_lo = std::max(cre_lo, (f[2].beta - base.beta).cwiseAbs().maxCoeff());
        cre_hi = std::max(cre_hi, (f[3].beta - weak.kappa_result().argmax).cwiseAbs().maxCoeff());
    }
    std::ostringstream os;
    os << "max |diff| over 20 seeds: wme(1e-10)-mple " << wme_lo << ", wme(1e10)-synthetic mple " << wme_hi
       << ", cre(1e-10)-mple " << cre_lo << ", cre(1e10)-kappa argmax " << cre_hi;
    if (!converged) os << "; a fit did not converge";
    return judge(converged && std::max({wme_lo, wme_hi, cre_lo, cre_hi}) < 1e-4, os);
}

struct RandomInstance {
    SurvivalData<double> data;
    SyntheticDataset<double> synth;
    Vec<double> beta;
    Vec<double> direction;
};

RandomInstance random_instance(std::uint64_t seed, Index p)
{
    auto d = random_data(30, p, 1000 + seed);
    auto s = make_synthetic(d, 60, CovariateGenSchema::from_data(d), 1000 + seed);
    Rng rng = make_rng(seed, 77);
    std::normal_distribution<double> normal(0, 0.5);
    Vec<double> b(p), v(p);
    for (auto& e : b) e = normal(rng);
    for (auto& e : v) e = normal(rng);
    return {std::move(d), std::move(s), b, v};
}

struct Probe {
    std::string name;
    std::function<double(const Vec<double>&)> value;
    std::function<PlDerivatives<double>(const Vec<double>&)> derivatives;
};

PlDerivatives<double> as_derivatives(Evaluation<double> ev) { return {std::move(ev.gradient), std::move(ev.neg_hessian)}; }

std::vector<Probe> probes(const RandomInstance& in, std::uint64_t seed)
{
    const double tau = 0.5 + static_cast<double>(seed % 7);
    auto prior = std::make_shared<CatalyticPrior<double>>(in.synth, tau, fit_exponential(in.data));
    auto cre_obj = std::make_shared<CatalyticObjective<double>>(in.data, *prior);
    auto wme_obj = std::make_shared<CoxPartialLikelihood<double>>(wme_objective(in.data, in.synth, tau));
    const auto* d = &in.data;
    return {
        {"log PL", [d](const Vec<double>& b) { return log_partial_likelihood(b, *d); },
         [d](const Vec<double>& b) { return pl_derivatives(b, *d); }},
        {"catalytic prior", [prior](const Vec<double>& b) { return log_catalytic_prior(b, *prior); },
         [prior](const Vec<double>& b) { return log_catalytic_prior_derivatives(b, *prior); }},
        {"CRE objective", [cre_obj, prior](const Vec<double>& b) { return cre_obj->value(b); },
         [cre_obj, prior](const Vec<double>& b) { return as_derivatives(cre_obj->evaluate(b)); }},
        {"WME objective", [wme_obj](const Vec<double>& b) { return wme_obj->value(b); },
         [wme_obj](const Vec<double>& b) { return as_derivatives(wme_obj->evaluate(b)); }},
    };
}

Outcome criterion5()
{
    std::map<std::string, double> grad_err, hess_err;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto in = random_instance(seed, 3);
        for (const auto& pr : probes(in, seed)) {
            const auto der = pr.derivatives(in.beta);
            const auto g = fd_gradient(pr.value, in.beta);
            const auto h = fd_jacobian([&](const Vec<double>& b) { return pr.derivatives(b).gradient; }, in.beta);
            grad_err[pr.name] = std::max(grad_err[pr.name], rel_err(der.gradient, g));
            hess_err[pr.name] = std::max(hess_err[pr.name], rel_err(der.neg_hessian, Mat<double>(-h)));
        }
    }
    std::ostringstream os;
    os << "max relative error (gradient/Hessian) over 100 instances:";
    bool ok = true;
    for (const auto& [name, e] : grad_err) {
        os << ' ' << name << ' ' << e << '/' << hess_err[name] << ';';
        ok = ok && e < 1e-6 && hess_err[name] < 1e-6;
    }
    return judge(ok, os);
}

Outcome criterion6()
{
    std::map<std::string, double> worst;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto in = random_instance(seed, 4);
        Rng rng = make_rng(seed, 78);
        std::normal_distribution<double> wide(0, 2);
        for (auto& e : in.beta) e = wide(rng);
        for (const auto& pr : probes(in, seed)) {
            const auto der = pr.derivatives(in.beta);
            const double q = in.direction.dot(der.neg_hessian * in.direction) / in.direction.squaredNorm();
            auto it = worst.try_emplace(pr.name, q).first;
            it->second = std::min(it->second, q);
        }
    }
    std::ostringstream os;
    os << "min v'(-H)v/|v|^2 over 100 random points:";
    bool ok = true;
    for (const auto& [name, q] : worst) {
        os << ' ' << name << ' ' << q << ';';
        ok = ok && q >= -1e-8;
    }
    return judge(ok, os);
}

SyntheticDataset<double> gaussian_synth(Index M, std::uint64_t seed)
{
    Rng rng = make_rng(seed, 90);
    std::normal_distribution<double> normal(0, 1);
    std::exponential_distribution<double> expo(1.0);
    SyntheticDataset<double> s;
    s.covariates.resize(M, 1);
    s.times.resize(M);
    for (Index i = 0; i < M; ++i) {
        s.covariates(i, 0) = normal(rng);
        s.times[i] = expo(rng);
    }
    return s;
}

Outcome criterion7()
{
    double worst_tail = 0, worst_change = 0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto s = gaussian_synth(50, k);
        const double tau = 1.0;
        const CatalyticPrior<double> prior(s, tau, 1.0, AdaptiveHyper{});
        const double kappa = compute_kappa(prior);
        const auto lik = prior.mean_likelihood();
        const auto at = [](double b) -> Vec<double> { return Vec<double>::Constant(1, b); };

        double total = 0, tail = 0;
        const double h = 1e-3;
        for (double b = -40 + h / 2; b < 40; b += h) {
            const double f = std::exp(log_catalytic_prior(at(b), prior) - tau * kappa);
            total += f;
            if (std::abs(b) > 20) tail += f;
        }
        worst_tail = std::max(worst_tail, tail / total);

        // integrating tau out of the adaptive prior leaves (kappa + 1/gamma - l(b))^-(p + alpha)
        const AdaptiveHyper hyp;
        auto moment = [&](double window) {
            double mass = 0, m1 = 0;
            for (double b = -window + h / 2; b < window; b += h) {
                const double f = std::pow(kappa + 1 / hyp.gamma - lik.value(at(b)), -(1 + hyp.alpha));
                mass += f;
                m1 += f * std::pow(std::abs(b), hyp.alpha / 2);
            }
            return m1 / mass;
        };
        const double m20 = moment(20), m40 = moment(40);
        worst_change = std::max(worst_change, std::abs(m40 - m20) / m20);
    }
    std::ostringstream os;
    os << "10 Gaussian synthetic sets: max tail mass fraction beyond |b|>20 " << worst_tail
       << "; max relative change of adaptive E|b| from window 20 to 40 " << worst_change;
    return judge(worst_tail < 1e-6 && worst_change < 1e-3, os);
}

Outcome criterion8()
{
    const auto d = random_data(60, 3, 7);
    const auto s = make_synthetic(d, 150, CovariateGenSchema::from_data(d), 7);
    const CatalyticPrior<double> prior(s, 3.0, fit_exponential(d), AdaptiveHyper{});
    const double kappa = compute_kappa(prior);
    const auto lik = prior.mean_likelihood();
    Rng rng = make_rng(8);
    std::normal_distribution<double> normal(0, 0.7);
    const int N = 100000;
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
        Vec<double> b(3);
        for (auto& e : b) e = normal(rng);
        const double shape = 3 + AdaptiveHyper{}.alpha;
        const double rate = kappa + 1 / AdaptiveHyper{}.gamma - lik.value(b);
        std::vector<double> draws(N);
        for (auto& v : draws) v = sample_tau_conditional(b, prior, rng);
        std::sort(draws.begin(), draws.end());
        double ks = 0;
        for (int k = 0; k < N; ++k) {
            const double f = boost::math::gamma_p(shape, rate * draws[static_cast<std::size_t>(k)]);
            ks = std::max({ks, std::abs(f - static_cast<double>(k) / N), std::abs(f - static_cast<double>(k + 1) / N)});
        }
        worst = std::max(worst, ks);
    }
    std::ostringstream os;
    os << "max KS statistic over 5 beta values (1e5 draws each) " << worst;
    return judge(worst < 0.01, os);
}

Outcome criterion9()
{
    ConsistencyConfig cfg;
    cfg.seed = kStudySeed;
    cfg.threads = default_thread_budget();
    const auto cells = consistency_demo(cfg);
    std::ostringstream os;
    os.precision(4);
    bool ok = true;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto& c = cells[k];
        os << " p=" << c.p << ",n=" << c.n << ": cre " << c.cre_loss.mean << " wme " << c.wme_loss.mean << ';';
        if (k > 0 && cells[k - 1].p == c.p) {
            ok = ok && c.cre_loss.mean < cells[k - 1].cre_loss.mean && c.wme_loss.mean < cells[k - 1].wme_loss.mean;
        }
    }
    return judge(ok && cells.size() == 6, os);
}

Outcome criterion10()
{
    const auto raw = random_data(10, 2, 3, false);
    const SurvivalData<double> d(raw.covariates(), raw.times(), StatusVec::Constant(10, true));
    const auto synth = make_synthetic(d, 40, CovariateGenSchema::from_data(d), 3);
    PenaltyOptions unscaled;
    unscaled.standardize = false;
    const std::vector<double> grid{0.05, 0.5, 5.0};
    double worst = 0;
    bool deterministic = true;
    using Refit = std::function<Vec<double>(const SurvivalData<double>&, double)>;
    const std::vector<std::pair<TunedFit, Refit>> fits{
        {ridge_tuned(unscaled), [&](const SurvivalData<double>& t, double l) { return ridge(t, l, unscaled).beta; }},
        {wme_tuned(synth), [&](const SurvivalData<double>& t, double tau) { return wme(t, synth, tau).beta; }},
    };
    for (const auto& [tuned, refit] : fits) {
        CVConfig cfg;
        cfg.K = 10;
        cfg.grid = grid;
        cfg.seed = 9;
        const auto res = cvpl(d, tuned, cfg);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double total = 0;
            for (Index i = 0; i < 10; ++i) {
                std::vector<Index> keep;
                for (Index j = 0; j < 10; ++j)
                    if (j != i) keep.push_back(j);
                const auto train = d.subset(keep);
                const Vec<double> b = refit(train, grid[g]);
                total += brute_force_log_pl(b, d) - brute_force_log_pl(b, train);
            }
            worst = std::max(worst, std::abs(res.scores[g] - total));
        }
        const auto again = cvpl(d, tuned, cfg);
        deterministic = deterministic && again.scores == res.scores && again.folds == res.folds;
    }
    std::ostringstream os;
    os << "ridge and WME leave-one-out CVPL vs brute force: max |diff| " << worst << "; repeat run identical "
       << (deterministic ? "yes" : "no");
    return judge(worst < 1e-10 && deterministic, os);
}

SurvivalData<double> cox_data(Index n, const Vec<double>& beta, std::uint64_t seed)
{
    Rng rng = make_rng(seed, 50);
    std::normal_distribution<double> normal(0, 1);
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> cens(0, 5);
    const Index p = beta.size();
    Mat<double> x(n, p);
    Vec<double> t(n);
    StatusVec s(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) x(i, j) = normal(rng);
        const double ti = expo(rng) / std::exp(x.row(i).dot(beta));
        const double ci = cens(rng);
        t[i] = std::min(ti, ci);
        s[i] = ti <= ci;
    }
    return SurvivalData<double>(x, t, s);
}

// total variation between the one-interval h chain and its binned quadrature density
double one_interval_tv()
{
    Mat<double> x = Mat<double>::Zero(1, 1);
    const SurvivalData<double> d(x, Vec<double>::Ones(1), StatusVec::Constant(1, true));
    const auto g = build_partition(d, 1);
    const GammaProcessConfig gp{2.0, 1.0, 1.0};
    const double a = gp.increment_shapes(g)[0];
    SamplerConfig cfg;
    cfg.iterations = 202000;
    cfg.burnin = 2000;
    cfg.fix_beta = true;
    cfg.seed = 3;
    const auto samples = sample_posterior(d, g, gp, BetaPrior::make_gaussian(1.0), cfg);

    const int bins = 50, sub = 400;
    const double top = 8.0;
    auto density = [&](double h) { return (1 - std::exp(-h)) * std::pow(h, a - 1) * std::exp(-gp.c0 * h); };
    std::vector<double> mass(bins + 1, 0.0), counts(bins + 1, 0.0);
    double total = 0;
    for (int b = 0; b < bins; ++b) {
        for (int k = 0; k < sub; ++k) mass[static_cast<std::size_t>(b)] += density((b + (k + 0.5) / sub) * top / bins) * top / bins / sub;
        total += mass[static_cast<std::size_t>(b)];
    }
    for (double h = top + 0.0005; h < 60; h += 0.001) mass[bins] += density(h) * 0.001;
    total += mass[bins];
    for (Index i = 0; i < samples.h_draws.rows(); ++i) {
        const double h = samples.h_draws(i, 0);
        counts[static_cast<std::size_t>(h >= top ? bins : static_cast<int>(h / top * bins))] += 1;
    }
    double tv = 0;
    for (int b = 0; b <= bins; ++b) {
        tv += std::abs(counts[static_cast<std::size_t>(b)] / static_cast<double>(samples.h_draws.rows()) -
                       mass[static_cast<std::size_t>(b)] / total);
    }
    return 0.5 * tv;
}

Outcome criterion11()
{
    Vec<double> truth(2);
    truth << 0.6, -0.4;
    const auto d = cox_data(200, truth, 9);
    const auto g = build_partition(d, 20);
    const auto gp = GammaProcessConfig::from_data(d);
    const auto s = make_synthetic(d, 400, CovariateGenSchema::from_data(d), 9);
    const double h0 = fit_exponential(d);
    SamplerConfig cfg;
    cfg.iterations = 4000;
    cfg.burnin = 2000;
    cfg.seed = 21;

    const auto flat = posterior_summary(sample_posterior(d, g, gp, BetaPrior::make_catalytic(CatalyticPrior<double>(s, 1e-8, h0)), cfg));
    const auto fit = mple(d);
    double flat_sd = 0;
    for (Index j = 0; j < 2; ++j) {
        const auto& c = flat[static_cast<std::size_t>(j)];
        flat_sd = std::max(flat_sd, std::abs(c.mean - fit.beta[j]) / c.sd);
    }
    const CatalyticPrior<double> strong(s, 1e8, h0);
    const auto dom = posterior_summary(sample_posterior(d, g, gp, BetaPrior::make_catalytic(strong), cfg));
    double dom_gap = 0;
    for (Index j = 0; j < 2; ++j) dom_gap = std::max(dom_gap, std::abs(dom[static_cast<std::size_t>(j)].mean - strong.kappa_result().argmax[j]));
    const double tv = one_interval_tv();

    std::ostringstream os;
    os << "flat prior: max |mean - mple|/sd " << flat_sd << " (< 3); tau=1e8: max |mean - synthetic MLE| " << dom_gap
       << " (< 0.05); one-interval TV " << tv << " (< 0.05)";
    return judge(flat_sd < 3 && dom_gap < 0.05 && tv < 0.05, os);
}

std::string pbc_path()
{
    if (const char* env = std::getenv("CATCOX_PBC_CSV")) return env;
    return CATCOX_DEFAULT_PBC_CSV;
}

Outcome criterion12()
{
    const auto path = pbc_path();
    if (path.empty() || !std::filesystem::exists(path)) {
        return {Verdict::skip, "PBC file not found; set CATCOX_PBC_CSV to the pbc CSV"};
    }
    const auto schema = DatasetSchema::from_file(std::string(CATCOX_SOURCE_DIR) + "/data/pbc_schema.json");
    const auto ld = load_dataset(path, schema);
    const auto& d = ld.data;
    const auto col = [&](const std::string& name) {
        const auto it = std::find(ld.names.begin(), ld.names.end(), name);
        if (it == ld.names.end()) throw std::runtime_error("no column " + name);
        return static_cast<Index>(it - ld.names.begin());
    };
    const Index age = col("age"), bili = col("bili");
    const auto fit = mple(d);

    const double p = static_cast<double>(d.cols());
    const auto synth = make_synthetic(d, 1000, ld.generator, kStudySeed);
    const double psi = synth.meta.psi_hat;
    SamplerConfig cfg;
    cfg.iterations = 40000;
    cfg.burnin = 10000;
    cfg.chains = 2;
    cfg.seed = kStudySeed;
    cfg.threads = std::min(2, default_thread_budget());
    const auto post = sample_posterior(d, build_partition(d, 20), GammaProcessConfig::from_data(d),
                                       BetaPrior::make_catalytic(CatalyticPrior<double>(synth, p, psi)), cfg);
    const auto& b = posterior_summary(post)[static_cast<std::size_t>(bili)];

    std::ostringstream os;
    os << "n=" << d.rows() << " p=" << d.cols() << "; mple age " << fit.beta[age] << " bili " << fit.beta[bili]
       << "; posterior (tau=p) bili mean " << b.mean << " interval [" << b.lower << ", " << b.upper << "]";
    const bool ok = d.rows() == 276 && d.cols() == 18 && within(fit.beta[age], 0.309, 0.03) &&
                    within(fit.beta[bili], 0.369, 0.04) && within(b.mean, 0.433, 0.08) && (b.lower > 0 || b.upper < 0);
    return judge(ok, os);
}

} // namespace

int main(int argc, char** argv)
{
    const std::map<int, std::function<Outcome()>> criteria{
        {1, criterion1}, {2, criterion2},   {3, criterion3},   {4, criterion4},   {5, criterion5},   {6, criterion6},
        {7, criterion7}, {8, criterion8},   {9, criterion9},   {10, criterion10}, {11, criterion11}, {12, criterion12},
    };
    bool strict = false;
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--strict") {
            strict = true;
            continue;
        }
        const int k = std::atoi(arg.c_str());
        if (!criteria.count(k)) {
            std::cerr << "unknown criterion '" << arg << "'\n";
            return 2;
        }
        selected.push_back(k);
    }
    if (selected.empty())
        for (const auto& [k, fn] : criteria) selected.push_back(k);

    int failures = 0, errors = 0;
    for (int k : selected) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria.at(k)();
        } catch (const std::exception& e) {
            o = {Verdict::fail, std::string("error: ") + e.what()};
            ++errors;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::skip ? "SKIP" : "FAIL";
        if (o.verdict == Verdict::fail) ++failures;
        std::cout << "criterion " << k << ' ' << tag << ": " << o.detail << " (" << std::lround(secs) << " s)" << std::endl;
    }
    if (errors > 0) return 1;
    return strict && failures > 0 ? 1 : 0;
}
