#pragma once

#include "catcox/rng.hpp"
#include "catcox/stats.hpp"
#include "catcox/survival_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace catcox {

enum class CovariateLaw {
    table2,   // Bernoulli(0.1), chi2_1, chi2_4, then N(0,1)
    gaussian  // iid N(0,1)
};

struct SimulationConfig {
    Index n = 100;
    Index p = 20;
    double censor_rate = 0.2;
    int replications = 100;
    std::vector<std::string> methods{"mple", "cre_cv", "cre_p", "wme_cv", "wme_p", "ridge_cv", "lasso_cv"};
    Index M = 1000;
    std::uint64_t seed = 0;
    Index n_test = 100;
    int folds = 10;
    double base_rate = 0.5;
    CovariateLaw law = CovariateLaw::table2;
    Index xi_mc_size = 100000;
    int threads = 1;
    // Bayesian rows (cpm_p, cpm_cv, apm, gpm_cv)
    int bayes_iterations = 2000;
    int bayes_burnin = 1000;
    Index bayes_intervals = 20;
};

/// Point-estimator method tags understood by run_study.
const std::vector<std::string>& point_method_tags();
/// Posterior-mean method tags; these also report interval coverage and width.
const std::vector<std::string>& bayes_method_tags();

/// (4, -4, 3, -3, 1, -1, 1, -1, 1, ..., 1) / sqrt(p); needs p >= 8.
Vec<double> table2_beta(Index p);

/// `radius` times a uniform draw from the unit sphere in R^p.
Vec<double> sphere_beta(Index p, double radius, Rng& rng);

Mat<double> sample_covariates(CovariateLaw law, Index n, Index p, Rng& rng);

/// Column tags matching the law (the table2 first column is binary).
std::vector<ColumnKind> covariate_kinds(CovariateLaw law, Index p);

/**
 * T ~ Exponential(base_rate * exp(x'beta0)), C ~ Uniform(0, xi), Y = min(T, C).
 * xi = +inf means no censoring.
 */
SurvivalData<double> simulate_survival(const Mat<double>& x, const Vec<double>& beta0, double base_rate, double xi,
                                       Rng& rng, std::vector<ColumnKind> kinds = {});

/// Expected censoring fraction E[(1 - exp(-lambda xi)) / (lambda xi)] over the given hazards.
double censoring_probability(const Vec<double>& rates, double xi);

/**
 * Uniform censoring bound xi attaining `target` censoring on a Monte-Carlo
 * covariate sample of size mc_size, by bisection on log xi.
 */
double calibrate_xi(const Vec<double>& beta0, double target, CovariateLaw law, double base_rate, Index mc_size, Rng& rng);
double calibrate_xi(const SimulationConfig& config, const Vec<double>& beta0, Rng& rng);

struct SimulatedData {
    SurvivalData<double> data;
    Vec<double> beta0;
};

/// Training set of `config` (table2 coefficients) with the given censoring bound.
SimulatedData simulate_dataset(const SimulationConfig& config, double xi, Rng& rng);
/// Same, calibrating xi first from `rng`.
SimulatedData simulate_dataset(const SimulationConfig& config, Rng& rng);

struct MethodRecord {
    std::string method;
    int replication = 0;
    Vec<double> beta_hat;
    double squared_error = 0.0;
    double deviance = 0.0;
    bool diverged = false;
    double tuning = 0.0;       // selected tau / lambda (0 when untuned)
    double coverage = -1.0;    // Bayesian rows only
    double width = -1.0;
};

struct MethodSummary {
    MeanSe squared_error;
    MeanSe deviance;
    MeanSe coverage;  // count 0 for point estimators
    MeanSe width;
    int failures = 0;
    int diverged = 0;
};

struct SimulationReport {
    SimulationConfig config;
    double xi = 0.0;
    int replications = 0;
    double realized_censoring = 0.0;  // pooled over training sets
    std::vector<std::string> methods;
    std::map<std::string, MethodSummary> summary;
    std::vector<MethodRecord> records;  // replication-major, methods in config order
    std::vector<std::string> failure_messages;
};

/**
 * Replication r draws everything from streams (seed, r + 1, k): k = 0 training
 * data, 1 test data, 2 synthetic data, 3 fold assignment, 4 sampler. xi is
 * calibrated once from stream (seed, 0). Failures of one method in one
 * replication are counted and do not stop the study.
 */
SimulationReport run_study(const SimulationConfig& config);

struct BiasDemo {
    Vec<double> beta0;
    Vec<double> beta_hat;
    bool diverged = false;
};

/**
 * MPLE on a design with the first fifth of coefficients at +10, the next fifth
 * at -10 and the rest 0; X ~ N(0, 1/n), baseline hazard 1, no censoring.
 */
BiasDemo mple_bias_demo(Index p, Index n, Rng& rng);

struct ConsistencyCell {
    Index p = 0;
    Index n = 0;
    MeanSe cre_loss;
    MeanSe wme_loss;
};

struct ConsistencyConfig {
    std::vector<Index> p_list{5, 20};
    std::vector<Index> n_list{100, 400, 1600};
    Index M = 400;
    int seeds = 50;
    std::uint64_t seed = 0;
    double radius = 2.0;
    double censor_rate = 0.2;
    double base_rate = 0.5;
    int threads = 1;
};

/// Squared loss of CRE (tau = p) and WME (tau = p/5) per (p, n), with pure-resampling synthetic covariates.
std::vector<ConsistencyCell> consistency_demo(const ConsistencyConfig& config);

/// Long format: scenario,method,metric,mean,se,count
void write_report_csv(const SimulationReport& report, const std::string& scenario, std::ostream& out);
std::string report_json(const SimulationReport& report, const std::string& scenario);
void write_consistency_csv(const std::vector<ConsistencyCell>& cells, std::ostream& out);

} // namespace catcox
