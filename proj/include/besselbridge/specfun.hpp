#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace besselbridge::specfun {

/// Thrown when Gamma is asked for a value at (or within rounding of) a pole.
class PoleError : public std::domain_error {
public:
    explicit PoleError(double x) : std::domain_error("gamma: pole at x = " + std::to_string(x)), x_(x) {}
    double where() const noexcept { return x_; }

private:
    double x_;
};

namespace detail {

// Lanczos approximation, g = 7, n = 9.
inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_coef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_sum(double xm1) {
    double a = lanczos_coef[0];
    for (int i = 1; i < 9; ++i) a += lanczos_coef[i] / (xm1 + i);
    return a;
}

// log Gamma(x) for x >= 0.5
inline double log_gamma_lanczos(double x) {
    const double xm1 = x - 1.0;
    const double t = xm1 + lanczos_g + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (xm1 + 0.5) * std::log(t) - t + std::log(lanczos_sum(xm1));
}

inline bool near_nonpositive_integer(double x) {
    if (x > 0.5) return false;
    const double n = std::round(x);
    return std::abs(x - n) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
}

}  // namespace detail

/// Gamma function on the reals minus the nonpositive integers.
///
/// Lanczos for x >= 1; anything below is lifted by the recursion
/// Gamma(x) = Gamma(x+n) / (x (x+1) ... (x+n-1)).
inline double gamma(double x) {
    if (std::isnan(x)) return x;
    if (detail::near_nonpositive_integer(x)) throw PoleError(x);
    if (x >= 1.0) {
        if (x > 171.7) return std::numeric_limits<double>::infinity();
        const double xm1 = x - 1.0;
        const double t = xm1 + detail::lanczos_g + 0.5;
        if (x < 140.0)
            return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, xm1 + 0.5) * std::exp(-t) *
                   detail::lanczos_sum(xm1);
        return std::exp(detail::log_gamma_lanczos(x));
    }
    const int n = static_cast<int>(std::ceil(1.0 - x));
    double prod = 1.0;
    for (int j = 0; j < n; ++j) prod *= (x + j);
    return gamma(x + n) / prod;
}

/// Signed logarithm of |Gamma(x)|.
struct LogGamma {
    double log_abs;
    int sign;
};

inline LogGamma log_gamma_signed(double x) {
    if (detail::near_nonpositive_integer(x)) throw PoleError(x);
    if (x >= 1.0) return {detail::log_gamma_lanczos(x), 1};
    const int n = static_cast<int>(std::ceil(1.0 - x));
    double log_prod = 0.0;
    int sign = 1;
    for (int j = 0; j < n; ++j) {
        log_prod += std::log(std::abs(x + j));
        if (x + j < 0.0) sign = -sign;
    }
    return {detail::log_gamma_lanczos(x + n) - log_prod, sign};
}

/// log Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: x must be positive");
    return log_gamma_signed(x).log_abs;
}

namespace detail {

// e^{-z} I_nu(z) by the power series, assembled in log space.
inline double bessel_i_scaled_series(double nu, double z) {
    const double half_z = 0.5 * z;
    double term = std::exp(nu * std::log(half_z) - log_gamma(nu + 1.0) - z);
    double sum = term;
    const double q = half_z * half_z;
    for (int k = 0; k < 100000; ++k) {
        term *= q / ((k + 1.0) * (k + 1.0 + nu));
        sum += term;
        if (term <= 1e-17 * sum && k > half_z) break;
    }
    return sum;
}

// Hankel large-argument expansion of e^{-z} I_nu(z). Returns NaN when the
// asymptotic series stops decreasing before reaching full precision.
inline double bessel_i_scaled_asymptotic(double nu, double z) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * k * z);
        const double mag = std::abs(term);
        if (mag == 0.0) break;
        if (mag > prev) return std::numeric_limits<double>::quiet_NaN();
        sum += term;
        prev = mag;
        if (mag <= 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

}  // namespace detail

/// Series / asymptotic switchover point for bessel_i_scaled.
inline constexpr double bessel_switch_z = 20.0;

/// Exponentially scaled modified Bessel function of the first kind,
/// e^{-z} I_nu(z), for nu > -1 and z >= 0.
inline double bessel_i_scaled(double nu, double z) {
    if (!(nu > -1.0)) throw std::domain_error("bessel_i_scaled: order must exceed -1");
    if (!(z >= 0.0)) throw std::domain_error("bessel_i_scaled: argument must be nonnegative");
    if (z == 0.0) {
        if (nu == 0.0) return 1.0;
        return nu > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (z > bessel_switch_z) {
        const double v = detail::bessel_i_scaled_asymptotic(nu, z);
        if (std::isfinite(v)) return v;
    }
    return detail::bessel_i_scaled_series(nu, z);
}

}  // namespace besselbridge::specfun
