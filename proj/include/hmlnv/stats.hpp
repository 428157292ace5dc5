#pragma once

// Two-sample statistics: Welch's unequal-variance t-test with the
// Welch–Satterthwaite degrees of freedom, and the special functions it needs.

#include <span>

namespace hmlnv {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail probability of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct WelchResult {
    double t = 0;
    double df = 0;
    double p = 1;        // two-sided
    double mean_a = 0, mean_b = 0;
    double var_a = 0, var_b = 0;  // sample variances (n-1 denominator)
};

// Welch's t-test on two samples (each needs >= 2 points).  When both sample
// variances vanish the test degenerates: equal means give t=0, p=1, anything
// else t=+/-inf, p=0.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace hmlnv
