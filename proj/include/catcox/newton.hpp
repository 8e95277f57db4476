#pragma once

#include "catcox/stats.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace catcox {

/**
 * Controls for the damped Newton maximizer shared by every smooth estimator.
 *
 * `tolerance` bounds the scaled gradient infinity-norm (gradient divided by the
 * objective's weight scale, which is 1 for ordinary partial likelihoods).
 */
struct SolverOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
    double divergence_bound = 50.0;
    int max_halvings = 30;
    // A Newton step longer than this at a numerically flat gradient marks a
    // likelihood that keeps increasing along a ray.
    double flat_step = 1e-2;
};

template <typename Scalar>
struct Evaluation {
    Scalar value = 0;
    Vec<Scalar> gradient;
    Mat<Scalar> neg_hessian;
};

template <typename Scalar>
struct FitResult {
    Vec<Scalar> beta;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    Scalar gradient_norm = 0;
    Scalar objective = 0;
    Mat<Scalar> neg_hessian;
};

/**
 * Maximizes a concave objective by Newton iterations with step-halving.
 *
 * `Objective` provides `Scalar value(const Vec&)`, `Evaluation<Scalar> evaluate(const Vec&)`
 * and `Scalar scale()`.
 */
template <typename Scalar, class Objective>
FitResult<Scalar> newton_maximize(const Objective& objective, Vec<Scalar> beta, const SolverOptions& opts)
{
    FitResult<Scalar> fit;
    const Scalar scale = std::max<Scalar>(Scalar(1), objective.scale());
    Evaluation<Scalar> ev = objective.evaluate(beta);
    if (!std::isfinite(static_cast<double>(ev.value))) {
        throw std::overflow_error("newton_maximize: objective not finite at the starting point");
    }

    int iter = 0;
    for (;; ++iter) {
        const Scalar gnorm = ev.gradient.size() ? ev.gradient.cwiseAbs().maxCoeff() / scale : Scalar(0);
        fit.gradient_norm = gnorm;

        Eigen::LDLT<Mat<Scalar>> ldlt(ev.neg_hessian);
        Vec<Scalar> step = ldlt.solve(ev.gradient);
        const bool step_ok = ldlt.info() == Eigen::Success && step.allFinite();

        if (gnorm <= Scalar(opts.tolerance)) {
            if (step_ok && step.cwiseAbs().maxCoeff() <= Scalar(opts.flat_step)) {
                fit.converged = true;
            } else {
                fit.diverged = true;
            }
            break;
        }
        if (iter >= opts.max_iterations) break;
        if (!step_ok) {
            fit.diverged = true;
            break;
        }

        const Scalar slack = Scalar(16) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(ev.value));
        Scalar t = 1;
        bool accepted = false;
        Vec<Scalar> candidate;
        Scalar cand_value = 0;
        for (int h = 0; h <= opts.max_halvings; ++h, t /= 2) {
            candidate = beta + t * step;
            cand_value = objective.value(candidate);
            if (std::isfinite(static_cast<double>(cand_value)) && cand_value >= ev.value - slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            fit.diverged = true;
            break;
        }
        beta = std::move(candidate);
        if (beta.size() && beta.cwiseAbs().maxCoeff() > Scalar(opts.divergence_bound)) {
            fit.diverged = true;
            ev = objective.evaluate(beta);
            ++iter;
            break;
        }
        ev = objective.evaluate(beta);
    }

    fit.iterations = iter;
    fit.beta = std::move(beta);
    fit.objective = ev.value;
    fit.neg_hessian = std::move(ev.neg_hessian);
    if (fit.diverged) fit.converged = false;
    return fit;
}

} // namespace catcox
