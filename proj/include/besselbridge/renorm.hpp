#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadrature.hpp"
#include "specfun.hpp"

namespace besselbridge {

/// A rapidly decaying smooth function on [0, inf) with analytic derivatives
/// up to a declared order.
class ScalarTestFunction {
public:
    using Derivative = std::function<double(int, double)>;

    ScalarTestFunction(std::string name, int max_order, Derivative d, bool decays = true)
        : name_(std::move(name)), max_order_(max_order), d_(std::make_shared<Derivative>(std::move(d))),
          decays_(decays) {
        if (max_order_ < 4) throw std::invalid_argument("ScalarTestFunction: max order must be at least 4");
    }

    double value(double x) const { return (*d_)(0, x); }
    double operator()(double x) const { return value(x); }

    double derivative(int k, double x) const {
        if (k < 0 || k > max_order_)
            throw std::out_of_range("ScalarTestFunction '" + name_ + "': derivative order " + std::to_string(k) +
                                    " exceeds declared maximum " + std::to_string(max_order_));
        return (*d_)(k, x);
    }

    int max_order() const noexcept { return max_order_; }
    bool decays() const noexcept { return decays_; }
    const std::string& name() const noexcept { return name_; }

    /// The j-th derivative as a test function in its own right.
    ScalarTestFunction derivative_instance(int j = 1) const {
        if (j < 0 || max_order_ - j < 4) throw std::out_of_range("derivative_instance: order budget exhausted");
        auto base = d_;
        return ScalarTestFunction(name_ + "^(" + std::to_string(j) + ")", max_order_ - j,
                                  [base, j](int k, double x) { return (*base)(k + j, x); }, decays_);
    }

private:
    std::string name_;
    int max_order_;
    std::shared_ptr<Derivative> d_;
    bool decays_;
};

namespace detail {

// Probabilists' Hermite polynomials He_0..He_n at y.
inline void hermite_he(int n, double y, double* out) {
    out[0] = 1.0;
    if (n >= 1) out[1] = y;
    for (int k = 1; k < n; ++k) out[k + 1] = y * out[k] - k * out[k - 1];
}

inline double gaussian_derivative(double c, int k, double x) {
    const double sc = std::sqrt(c);
    const double y = sc * x;
    const double e = std::exp(-0.5 * y * y);
    if (e == 0.0) return 0.0;
    double he[64];
    hermite_he(k, y, he);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(sc, k) * he[k] * e;
}

inline double binomial(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace detail

namespace test_functions {

inline constexpr int default_max_order = 30;

/// x -> exp(-lambda x)
inline ScalarTestFunction exponential(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return ScalarTestFunction("exp(-" + std::to_string(lambda) + "x)", default_max_order, [lambda](int k, double x) {
        return std::pow(-lambda, k) * std::exp(-lambda * x);
    });
}

/// x -> exp(-C x^2 / 2)
inline ScalarTestFunction gaussian(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("gaussian: C must be positive");
    return ScalarTestFunction("exp(-" + std::to_string(c) + "x^2/2)", default_max_order,
                              [c](int k, double x) { return detail::gaussian_derivative(c, k, x); });
}

/// x -> P(x) exp(-C x^2 / 2), P given by ascending coefficients.
inline ScalarTestFunction poly_gaussian(std::vector<double> coeffs, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("poly_gaussian: C must be positive");
    if (coeffs.empty()) coeffs.push_back(0.0);
    std::string name = "poly" + std::to_string(coeffs.size() - 1) + "*exp(-" + std::to_string(c) + "x^2/2)";
    return ScalarTestFunction(std::move(name), default_max_order, [coeffs, c](int k, double x) {
        const int deg = static_cast<int>(coeffs.size()) - 1;
        double total = 0.0;
        for (int j = 0; j <= std::min(k, deg); ++j) {
            const double g = detail::gaussian_derivative(c, k - j, x);
            if (g == 0.0) continue;  // far tail: P(x) may overflow where the Gaussian underflows
            // j-th derivative of P at x
            double pj = 0.0;
            double xp = 1.0;
            for (int i = j; i <= deg; ++i) {
                double falling = 1.0;
                for (int t = 0; t < j; ++t) falling *= (i - t);
                pj += coeffs[i] * falling * xp;
                xp *= x;
            }
            total += detail::binomial(k, j) * pj * g;
        }
        return total;
    });
}

/// x -> sum_i w_i exp(-C_i x^2 / 2)
inline ScalarTestFunction gaussian_mixture(std::vector<std::pair<double, double>> weight_and_c) {
    for (const auto& [w, c] : weight_and_c)
        if (!(c > 0.0) || !std::isfinite(w)) throw std::invalid_argument("gaussian_mixture: bad term");
    return ScalarTestFunction("gaussian_mixture", default_max_order, [terms = std::move(weight_and_c)](int k, double x) {
        double s = 0.0;
        for (const auto& [w, c] : terms) s += w * detail::gaussian_derivative(c, k, x);
        return s;
    });
}

}  // namespace test_functions

/// Spot check of Schwartz-type decay: |phi^(k)(x)| x^l stays below `bound`
/// on the sample grid for all k <= K, l <= L.
inline bool schwartz_spot_check(const ScalarTestFunction& phi, int K, int L, const std::vector<double>& grid,
                                double bound = 1e6) {
    for (int k = 0; k <= std::min(K, phi.max_order()); ++k)
        for (double x : grid)
            for (int l = 0; l <= L; ++l) {
                const double v = std::abs(phi.derivative(k, x)) * std::pow(x, l);
                if (!std::isfinite(v) || v > bound) return false;
            }
    return true;
}

namespace detail {

// T^n_x phi / x^{n+1} via the integral form of the remainder,
// (1/n!) int_0^1 (1-s)^n phi^{(n+1)}(x s) ds.
inline double scaled_remainder(const ScalarTestFunction& phi, int n, double x) {
    if (n < 0) return phi.value(x);
    const auto& gl = quadrature::gauss_legendre32();
    const double s = gl([&](double u) { return std::pow(1.0 - u, n) * phi.derivative(n + 1, x * u); });
    return s / factorial(n);
}

}  // namespace detail

/// phi(x) minus its Taylor polynomial of order n at 0; the plain value for n < 0.
inline double taylor_remainder(const ScalarTestFunction& phi, int n, double x) {
    if (n < 0) return phi.value(x);
    if (n > phi.max_order()) throw std::out_of_range("taylor_remainder: order exceeds test function");
    if (x == 0.0) return 0.0;
    // integral form avoids the cancellation of the direct difference near 0
    if (n + 1 <= phi.max_order() && std::abs(x) <= 1.0) return std::pow(x, n + 1) * detail::scaled_remainder(phi, n, x);
    double poly = 0.0;
    double xp = 1.0;
    for (int j = 0; j <= n; ++j) {
        poly += xp * phi.derivative(j, 0.0) / detail::factorial(j);
        xp *= x;
    }
    return phi.value(x) - poly;
}

/// Quadrature settings for the renormalized integrals.
struct RenormOptions {
    double split = 1.0;
    quadrature::Options quad{1e-13, 1e-12, 4000};
};

/// int_0^inf x^{s-1} T^n_x phi dx, for parameters where it converges
/// (s + n + 1 > 0 after discarding vanishing Taylor coefficients, and every
/// surviving polynomial term decays at infinity).
///
/// Head [0, split]: the remainder in integral form, x = split t^q with q chosen
/// so that the endpoint power becomes a nonnegative integer. Tail: the plain
/// integral numerically in log scale, the polynomial part in closed form.
inline double remainder_mellin(const ScalarTestFunction& phi, double s, int n, const RenormOptions& opt = {}) {
    if (n < -1) n = -1;
    if (n + 1 > phi.max_order()) throw std::out_of_range("remainder_mellin: order exceeds test function");
    const double split = opt.split;
    if (!(split > 0.0)) throw std::invalid_argument("remainder_mellin: split must be positive");

    // T^n = T^{n+1} whenever phi^{(n+1)}(0) vanishes
    int n_eff = n;
    for (int bump = 0; bump < 3 && n_eff + 2 <= phi.max_order(); ++bump) {
        if (phi.derivative(n_eff + 1, 0.0) != 0.0) break;
        ++n_eff;
    }

    const double beta = s + n_eff;
    if (!(beta > -1.0)) throw std::domain_error("remainder_mellin: integrand not integrable at 0");
    const double m = std::ceil(beta + 1.0);
    const double q = m / (beta + 1.0);
    const double pref = q * std::pow(split, beta + 1.0);
    auto head_integrand = [&](double t) {
        if (t <= 0.0) return m == 1.0 ? pref * detail::scaled_remainder(phi, n_eff, 0.0) : 0.0;
        return pref * std::pow(t, m - 1.0) * detail::scaled_remainder(phi, n_eff, split * std::pow(t, q));
    };
    const double head = quadrature::integrate(head_integrand, 0.0, 1.0, opt.quad, "remainder_mellin head").value;

    auto tail_integrand = [&](double u) {
        const double x = split * std::exp(u);
        if (!std::isfinite(x)) return 0.0;
        const double v = phi.value(x);
        if (v == 0.0) return 0.0;
        return std::pow(x, s) * v;
    };
    double tail = quadrature::integrate_to_infinity(tail_integrand, 0.0, opt.quad, "remainder_mellin tail").value;

    for (int j = 0; j <= n; ++j) {
        const double cj = phi.derivative(j, 0.0);
        if (cj == 0.0) continue;
        if (!(s + j < 0.0)) throw std::domain_error("remainder_mellin: polynomial part diverges at infinity");
        // int_split^inf x^{s-1+j} dx = -split^{s+j} / (s+j)
        tail -= cj / detail::factorial(j) * (-std::pow(split, s + j) / (s + j));
    }
    return head + tail;
}

/// Width of the band around nonpositive integers where the exact derivative
/// branch replaces the quadrature.
inline constexpr double pole_guard = 1e-9;

/// <mu_alpha, phi> for real alpha.
inline double pair_mu(double alpha, const ScalarTestFunction& phi, const RenormOptions& opt = {}) {
    const double nearest = std::round(alpha);
    if (nearest <= 0.0 && std::abs(alpha - nearest) < pole_guard) {
        const int k = static_cast<int>(-nearest);
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        return sign * phi.derivative(k, 0.0);
    }
    const int k = alpha > 0.0 ? -1 : static_cast<int>(std::floor(-alpha));
    if (k + 1 > phi.max_order()) throw std::out_of_range("pair_mu: test function lacks derivatives");
    return remainder_mellin(phi, alpha, k, opt) / specfun::gamma(alpha);
}

/// 2^{1-x} int_0^inf a^{2x-1} T^{2 floor(-x)}_a exp(-C a^2/2) da, which equals
/// Gamma(x) C^{-x} off the poles.
inline double renorm_gamma_integral(double x, double c, const RenormOptions& opt = {}) {
    if (specfun::detail::near_nonpositive_integer(x)) throw specfun::PoleError(x);
    if (!(c > 0.0)) throw std::invalid_argument("renorm_gamma_integral: C must be positive");
    const int n = 2 * static_cast<int>(std::floor(-x));
    RenormOptions o = opt;
    o.split = std::min(opt.split, 1.0 / std::sqrt(c));
    return std::pow(2.0, 1.0 - x) * remainder_mellin(test_functions::gaussian(c), 2.0 * x, n, o);
}

}  // namespace besselbridge
