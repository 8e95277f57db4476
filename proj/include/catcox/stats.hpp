#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace catcox {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/**
 * Inverse of the standard normal CDF (Wichura's AS241, ~1e-16 relative accuracy).
 */
template <typename Scalar>
Scalar normal_quantile(Scalar prob)
{
    if (!(prob > 0 && prob < 1)) {
        if (prob == 0) return -std::numeric_limits<Scalar>::infinity();
        if (prob == 1) return std::numeric_limits<Scalar>::infinity();
        throw std::domain_error("normal_quantile: probability outside [0,1]");
    }
    const Scalar q = prob - Scalar(0.5);
    if (std::abs(q) <= Scalar(0.425)) {
        const Scalar r = Scalar(0.180625) - q * q;
        const Scalar num =
            (((((((Scalar(2509.0809287301226727) * r + Scalar(33430.575583588128105)) * r +
                  Scalar(67265.770927008700853)) * r + Scalar(45921.953931549871457)) * r +
                Scalar(13731.693765509461125)) * r + Scalar(1971.5909503065514427)) * r +
              Scalar(133.14166789178437745)) * r + Scalar(3.387132872796366608));
        const Scalar den =
            (((((((Scalar(5226.495278852545925) * r + Scalar(28729.085735721942674)) * r +
                  Scalar(39307.89580009271061)) * r + Scalar(21213.794301586595867)) * r +
                Scalar(5394.1960214247511077)) * r + Scalar(687.1870074920579083)) * r +
              Scalar(42.313330701600911252)) * r + Scalar(1));
        return q * num / den;
    }
    Scalar r = q < 0 ? prob : Scalar(1) - prob;
    r = std::sqrt(-std::log(r));
    Scalar val;
    if (r <= 5) {
        r -= Scalar(1.6);
        val = (((((((Scalar(7.7454501427834140764e-4) * r + Scalar(0.0227238449892691845833)) * r +
                    Scalar(0.24178072517745061177)) * r + Scalar(1.27045825245236838258)) * r +
                  Scalar(3.64784832476320460504)) * r + Scalar(5.7694972214606914055)) * r +
                Scalar(4.6303378461565452959)) * r + Scalar(1.42343711074968357734)) /
              (((((((Scalar(1.05075007164441684324e-9) * r + Scalar(5.475938084995344946e-4)) * r +
                    Scalar(0.0151986665636164571966)) * r + Scalar(0.14810397642748007459)) * r +
                  Scalar(0.68976733498510000455)) * r + Scalar(1.6763848301838038494)) * r +
                Scalar(2.05319162663775882187)) * r + Scalar(1));
    } else {
        r -= 5;
        val = (((((((Scalar(2.01033439929228813265e-7) * r + Scalar(2.71155556874348757815e-5)) * r +
                    Scalar(0.0012426609473880784386)) * r + Scalar(0.026532189526576123093)) * r +
                  Scalar(0.29656057182850489123)) * r + Scalar(1.7848265399172913358)) * r +
                Scalar(5.4637849111641143699)) * r + Scalar(6.6579046435011037772)) /
              (((((((Scalar(2.04426310338993978564e-15) * r + Scalar(1.4215117583164458887e-7)) * r +
                    Scalar(1.8463183175100546818e-5)) * r + Scalar(7.868691311456132591e-4)) * r +
                  Scalar(0.0148753612908506148525)) * r + Scalar(0.13692988092273580531)) * r +
                Scalar(0.59983220655588793769)) * r + Scalar(1));
    }
    return q < 0 ? -val : val;
}

/// Sample quantile with linear interpolation between order statistics (Hyndman-Fan type 7).
template <typename Scalar>
Scalar quantile_sorted(const std::vector<Scalar>& sorted, Scalar prob)
{
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const Scalar h = (static_cast<Scalar>(sorted.size()) - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const Scalar frac = h - static_cast<Scalar>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

template <typename Scalar>
Scalar quantile(const Vec<Scalar>& values, Scalar prob)
{
    std::vector<Scalar> v(values.data(), values.data() + values.size());
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, prob);
}

/// log(1 - exp(-z)) for z > 0 without cancellation.
template <typename Scalar>
Scalar log1mexp(Scalar z)
{
    using std::expm1;
    using std::exp;
    using std::log;
    using std::log1p;
    if (!(z > 0)) throw std::domain_error("log1mexp: argument must be positive");
    return z < Scalar(0.6931471805599453) ? log(-expm1(-z)) : log1p(-exp(-z));
}

/// Mean and standard error of a sample; SE is zero for fewer than two values.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

inline MeanSe mean_se(const std::vector<double>& values)
{
    MeanSe out;
    out.count = values.size();
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.se = std::sqrt(ss / (n - 1) / n);
    }
    return out;
}

} // namespace catcox
