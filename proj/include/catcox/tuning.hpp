#pragma once

#include "catcox/estimators.hpp"
#include "catcox/survival_core.hpp"
#include "catcox/synthesis.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace catcox {

struct CVConfig {
    int K = 10;
    std::vector<double> grid;
    std::uint64_t seed = 0;
    std::string estimator;
    int threads = 1;
};

/// An estimator as a function of its tuning value, fitted on a training subset.
using TunedFit = std::function<FitResult<double>(const SurvivalData<double>& train, double value)>;

struct CVResult {
    double best_value = 0.0;
    Index best_index = 0;
    std::vector<double> grid;
    std::vector<double> scores;
    std::vector<int> folds;   // fold of each subject
    std::uint64_t fold_seed = 0;
    int diverged_fits = 0;
};

/**
 * Fold of each subject: a seeded permutation, with position k going to fold k mod K.
 */
std::vector<int> assign_folds(Index n, int K, std::uint64_t seed);

/// True when every fold holds at least one event.
bool folds_have_events(const SurvivalData<double>& data, const std::vector<int>& folds, int K);

/**
 * Cross-validated partial log-likelihood over `config.grid`:
 * CVPL(v) = sum_k [log PL(b_{-k}) - log PL_{-k}(b_{-k})].
 * A fold assignment with an event-free fold is redrawn once with a derived seed.
 * Ties in the score go to the smaller grid value.
 */
CVResult cvpl(const SurvivalData<double>& data, const TunedFit& fit, const CVConfig& config);

/// CVPL with caller-supplied folds (no refolding).
CVResult cvpl_with_folds(const SurvivalData<double>& data, const TunedFit& fit, const std::vector<double>& grid,
                         const std::vector<int>& folds, int K, int threads = 1);

/// {p/8, p/4, p/2, p, 2p, 4p, 8p}
std::vector<double> default_tau_grid(Index p);

/// `count` log-spaced values over [1e-4, 1e2] * lambda_max (lasso zero threshold).
std::vector<double> default_lambda_grid(const SurvivalData<double>& data, int count = 30);

TunedFit cre_tuned(const CatalyticPrior<double>& prior, const SolverOptions& opts = {});
TunedFit wme_tuned(const SyntheticDataset<double>& synth, const SolverOptions& opts = {});
TunedFit ridge_tuned(const PenaltyOptions& opts = {});
TunedFit lasso_tuned(const PenaltyOptions& opts = {});

} // namespace catcox
