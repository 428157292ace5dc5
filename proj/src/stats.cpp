#include "hmlnv/stats.hpp"

#include <cmath>
#include <limits>

#include "hmlnv/errors.hpp"

namespace hmlnv {

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1, qam = a - 1;
    double c = 1, d = 1 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1) < kEps) return h;
    }
    return h;  // converged to working precision in practice
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0) || !(b > 0)) throw ContractViolation("incomplete beta needs a, b > 0");
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // use the faster-converging side
    if (x < (a + 1) / (a + b + 2)) return front * betacf(a, b, x) / a;
    return 1 - front * betacf(b, a, 1 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0)) throw ContractViolation("degrees of freedom must be positive");
    if (std::isinf(t)) return 0;
    if (t == 0) return 1;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2, 0.5, x);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw ContractViolation("each sample needs at least two points");
    WelchResult r;
    const double ka = static_cast<double>(a.size());
    const double kb = static_cast<double>(b.size());
    for (double v : a) r.mean_a += v;
    for (double v : b) r.mean_b += v;
    r.mean_a /= ka;
    r.mean_b /= kb;
    for (double v : a) r.var_a += (v - r.mean_a) * (v - r.mean_a);
    for (double v : b) r.var_b += (v - r.mean_b) * (v - r.mean_b);
    r.var_a /= ka - 1;
    r.var_b /= kb - 1;

    const double sa = r.var_a / ka, sb = r.var_b / kb;
    const double se2 = sa + sb;
    if (se2 == 0) {
        // no spread at all: identical means are a perfect match
        if (r.mean_a == r.mean_b) {
            r.t = 0;
            r.df = ka + kb - 2;
            r.p = 1;
        } else {
            r.t = (r.mean_a > r.mean_b) ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity();
            r.df = ka + kb - 2;
            r.p = 0;
        }
        return r;
    }
    r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
    r.df = se2 * se2 / (sa * sa / (ka - 1) + sb * sb / (kb - 1));
    r.p = student_t_two_sided_p(r.t, r.df);
    return r;
}

}  // namespace hmlnv
