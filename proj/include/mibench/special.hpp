#pragma once

// Scalar special functions used throughout the library: log-gamma, digamma,
// and the standard normal CDF / quantile pair.  All functions are pure and
// operate in double precision.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mibench {

inline double ln_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("ln_gamma: requires x > 0");
    }
    return std::lgamma(x);
}

// Digamma via upward recursion into the asymptotic (Stirling-type) series.
// Recursion threshold 10 keeps the truncated series below 1e-14 absolute.
inline double digamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("digamma: requires x > 0");
    }
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli-number coefficients of the asymptotic expansion.
    double series = inv2 * (1.0 / 12.0
                  - inv2 * (1.0 / 120.0
                  - inv2 * (1.0 / 252.0
                  - inv2 * (1.0 / 240.0
                  - inv2 * (1.0 / 132.0
                  - inv2 * (691.0 / 32760.0))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

// Wichura's PPND16 rational approximations (relative error < 1e-15).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: requires p in (0, 1)");
    }
    static constexpr double a[8] = {
        3.3871328727963666080e0,  1.3314166789178437745e2,
        1.9715909503065514427e3,  1.3731693765509461125e4,
        4.5921953931549871457e4,  6.7265770927008700853e4,
        3.3430575583588128105e4,  2.5090809287301226727e3};
    static constexpr double b[8] = {
        1.0,                      4.2313330701600911252e1,
        6.8718700749205790830e2,  5.3941960214247511077e3,
        2.1213794301586595867e4,  3.9307895800092710610e4,
        2.8729085735721942674e4,  5.2264952788528545610e3};
    static constexpr double c[8] = {
        1.42343711074968357734e0,  4.63033784615654529590e0,
        5.76949722146069140550e0,  3.64784832476320460504e0,
        1.27045825245236838258e0,  2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[8] = {
        1.0,                       2.05319162663775882187e0,
        1.67638483018380384940e0,  6.89767334985100004550e-1,
        1.48103976427480074590e-1, 1.51986665636164571966e-2,
        5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static constexpr double e[8] = {
        6.65790464350110377720e0,  5.46378491116411436990e0,
        1.78482653991729133580e0,  2.96560571828504891230e-1,
        2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[8] = {
        1.0,                       5.99832206555887937690e-1,
        1.36929880922735805310e-1, 1.48753612908506148525e-2,
        7.86869131145613259100e-4, 1.84631831751005468180e-5,
        1.42151175831644588870e-7, 2.04426310338993978564e-15};

    auto poly = [](const double (&cf)[8], double t) {
        double r = cf[7];
        for (int i = 6; i >= 0; --i) r = r * t + cf[i];
        return r;
    };

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * poly(a, r) / poly(b, r);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = poly(c, r) / poly(d, r);
    } else {
        r -= 5.0;
        value = poly(e, r) / poly(f, r);
    }
    return (q < 0.0) ? -value : value;
}

inline double standard_normal_log_pdf(double x) {
    static const double log_inv_sqrt_2pi = -0.5 * std::log(2.0 * M_PI);
    return log_inv_sqrt_2pi - 0.5 * x * x;
}

}  // namespace mibench
