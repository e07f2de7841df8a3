#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bsle {

double sample_mean(std::span<const double> v);
// Standard error of the sample mean.
double sample_se(std::span<const double> v, double mean);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// Asymptotic two-sample critical value c(alpha) sqrt((n+m)/(nm)) with
// c(alpha) = sqrt(-ln(alpha/2)/2).
double ks_critical(std::size_t n, std::size_t m, double alpha);

// Quantile of the chi-squared distribution with dof degrees of freedom.
double chi2_quantile(double p, unsigned dof);

double normal_cdf(double x);

}  // namespace bsle
