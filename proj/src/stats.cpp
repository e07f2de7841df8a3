#include "bsle/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace bsle {

double sample_mean(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_se(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double a : v) s += (a - mean) * (a - mean);
    return std::sqrt(s / (static_cast<double>(v.size()) *
                          static_cast<double>(v.size() - 1)));
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = a[i] < b[j] ? a[i] : b[j];
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        const double diff = std::fabs(static_cast<double>(i) / na -
                                      static_cast<double>(j) / nb);
        if (diff > d) d = diff;
    }
    return d;
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bad alpha");
    const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    return c * std::sqrt((nn + mm) / (nn * mm));
}

double chi2_quantile(double p, unsigned dof) {
    return boost::math::quantile(boost::math::chi_squared(dof), p);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

}  // namespace bsle
