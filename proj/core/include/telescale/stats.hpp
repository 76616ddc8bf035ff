#pragma once

#include <cstddef>
#include <span>

namespace telescale {

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t df = 0;
    /// Zero-variance differences; p follows the convention instead of the CDF.
    bool degenerate = false;
};

/// Two-sided paired-sample t-test on d = x - y with df = n - 1.
/// Zero-variance differences give p = 0 (nonzero mean) or t = 0, p = 1.
/// Throws std::invalid_argument on length mismatch or n < 2.
TTestResult paired_t_test(std::span<const double> xs, std::span<const double> ys);

/// I_x(a, b) by continued fraction (modified Lentz, tolerance 1e-10).
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);

double mean(std::span<const double> values);

/// n - 1 denominator; zero for fewer than two values.
double sample_std(std::span<const double> values);

}  // namespace telescale
