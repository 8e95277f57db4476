#include "catcox/tuning.hpp"

#include "catcox/parallel.hpp"
#include "catcox/rng.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace catcox {

std::vector<int> assign_folds(Index n, int K, std::uint64_t seed)
{
    if (K < 2) throw std::invalid_argument("cvpl: K must be >= 2");
    if (K > n) throw std::invalid_argument("cvpl: more folds than subjects");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    Rng rng = make_rng(seed, 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < order.size(); ++k) folds[static_cast<std::size_t>(order[k])] = static_cast<int>(k % K);
    return folds;
}

bool folds_have_events(const SurvivalData<double>& data, const std::vector<int>& folds, int K)
{
    std::vector<int> events(static_cast<std::size_t>(K), 0);
    for (Index i = 0; i < data.rows(); ++i)
        if (data.status()[i]) ++events[static_cast<std::size_t>(folds[static_cast<std::size_t>(i)])];
    return std::all_of(events.begin(), events.end(), [](int e) { return e > 0; });
}

CVResult cvpl_with_folds(const SurvivalData<double>& data, const TunedFit& fit, const std::vector<double>& grid,
                         const std::vector<int>& folds, int K, int threads)
{
    if (grid.empty()) throw std::invalid_argument("cvpl: empty grid");
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (!(grid[g] > 0)) throw std::invalid_argument("cvpl: grid values must be positive");
        if (g && !(grid[g] > grid[g - 1])) throw std::invalid_argument("cvpl: grid must be strictly increasing");
    }
    if (static_cast<Index>(folds.size()) != data.rows()) throw std::invalid_argument("cvpl: fold vector has wrong length");

    std::vector<SurvivalData<double>> train(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        std::vector<Index> keep;
        for (Index i = 0; i < data.rows(); ++i)
            if (folds[static_cast<std::size_t>(i)] != k) keep.push_back(i);
        train[static_cast<std::size_t>(k)] = data.subset(keep);
    }

    const std::size_t tasks = grid.size() * static_cast<std::size_t>(K);
    std::vector<double> terms(tasks, 0.0);
    std::vector<char> diverged(tasks, 0);
    parallel_for(tasks, threads, [&](std::size_t t) {
        const std::size_t g = t / static_cast<std::size_t>(K);
        const std::size_t k = t % static_cast<std::size_t>(K);
        const auto f = fit(train[k], grid[g]);
        diverged[t] = f.diverged ? 1 : 0;
        terms[t] = log_partial_likelihood(f.beta, data) - log_partial_likelihood(f.beta, train[k]);
    });

    CVResult out;
    out.grid = grid;
    out.folds = folds;
    out.scores.assign(grid.size(), 0.0);
    for (std::size_t t = 0; t < tasks; ++t) {
        out.scores[t / static_cast<std::size_t>(K)] += terms[t];
        out.diverged_fits += diverged[t];
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (out.scores[g] > out.scores[best]) best = g;
    out.best_index = static_cast<Index>(best);
    out.best_value = grid[best];
    return out;
}

CVResult cvpl(const SurvivalData<double>& data, const TunedFit& fit, const CVConfig& config)
{
    std::uint64_t seed = config.seed;
    auto folds = assign_folds(data.rows(), config.K, seed);
    if (!folds_have_events(data, folds, config.K)) {
        seed = derive_seed(config.seed, 1);
        folds = assign_folds(data.rows(), config.K, seed);
        if (!folds_have_events(data, folds, config.K)) {
            throw std::runtime_error("cvpl: a fold has no events after refolding (K = " + std::to_string(config.K) +
                                     ", events = " + std::to_string(data.event_count()) + ")");
        }
    }
    auto out = cvpl_with_folds(data, fit, config.grid, folds, config.K, config.threads);
    out.fold_seed = seed;
    return out;
}

std::vector<double> default_tau_grid(Index p)
{
    const double q = static_cast<double>(p);
    return {q / 8, q / 4, q / 2, q, 2 * q, 4 * q, 8 * q};
}

std::vector<double> default_lambda_grid(const SurvivalData<double>& data, int count)
{
    if (count < 2) throw std::invalid_argument("default_lambda_grid: need at least two points");
    const double lmax = lasso_lambda_max(data);
    if (!(lmax > 0)) throw std::domain_error("default_lambda_grid: lambda_max is zero");
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double lo = std::log(1e-4), hi = std::log(1e2);
    for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = lmax * std::exp(lo + (hi - lo) * k / (count - 1));
    return grid;
}

TunedFit cre_tuned(const CatalyticPrior<double>& prior, const SolverOptions& opts)
{
    auto base = std::make_shared<const CatalyticPrior<double>>(prior);
    return [base, opts](const SurvivalData<double>& train, double tau) { return cre(train, base->with_tau(tau), opts); };
}

TunedFit wme_tuned(const SyntheticDataset<double>& synth, const SolverOptions& opts)
{
    auto shared = std::make_shared<const SyntheticDataset<double>>(synth);
    return [shared, opts](const SurvivalData<double>& train, double tau) { return wme(train, *shared, tau, opts); };
}

TunedFit ridge_tuned(const PenaltyOptions& opts)
{
    return [opts](const SurvivalData<double>& train, double lambda) { return ridge(train, lambda, opts); };
}

TunedFit lasso_tuned(const PenaltyOptions& opts)
{
    return [opts](const SurvivalData<double>& train, double lambda) { return lasso(train, lambda, opts); };
}

} // namespace catcox
