#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "measures.hpp"
#include "ode.hpp"
#include "renorm.hpp"
#include "specfun.hpp"

namespace besselbridge {

/// Dimension parameter and its derived constants.
struct Dimension {
    double delta;

    explicit Dimension(double d) : delta(d) {
        if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("Dimension: delta must be positive");
    }

    double nu() const { return 0.5 * delta - 1.0; }
    double kappa() const { return (delta - 3.0) * (delta - 1.0) / 4.0; }
    int k() const { return static_cast<int>(std::floor((3.0 - delta) / 2.0)); }
    /// 2^{1-delta/2} / Gamma(delta/2)
    double a_const() const { return std::exp(log_a_const()); }
    double log_a_const() const {
        return (1.0 - 0.5 * delta) * std::numbers::ln2 - specfun::log_gamma(0.5 * delta);
    }
};

/// Phi(X) = sum_i gamma_i exp(-<m_i, X^2>), one cached OdeSolution per distinct measure.
class ExpFunctional {
public:
    struct Term {
        double coefficient;
        std::shared_ptr<const OdeSolution> solution;
        const FiniteMeasure& measure() const { return solution->measure(); }
    };

    ExpFunctional() = default;

    ExpFunctional(std::vector<std::pair<double, FiniteMeasure>> terms, std::string name = "") : name_(std::move(name)) {
        for (auto& [c, m] : terms) add(c, std::move(m));
        if (terms_.empty()) throw std::invalid_argument("ExpFunctional: at least one term required");
    }

    static ExpFunctional one() { return ExpFunctional({{1.0, FiniteMeasure::zero()}}, "1"); }
    static ExpFunctional exp_of(FiniteMeasure m, std::string name = "") {
        return ExpFunctional({{1.0, std::move(m)}}, std::move(name));
    }

    void add(double coefficient, FiniteMeasure m) {
        if (!std::isfinite(coefficient)) throw std::invalid_argument("ExpFunctional: coefficient must be finite");
        for (auto& t : terms_)
            if (t.measure() == m) {
                t.coefficient += coefficient;
                return;
            }
        terms_.push_back({coefficient, std::make_shared<const OdeSolution>(std::move(m))});
    }

    const std::vector<Term>& terms() const noexcept { return terms_; }
    const std::string& name() const noexcept { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

    /// Interior nodes of every term's measure, merged.
    std::vector<double> nodes() const {
        std::vector<double> n;
        for (const auto& t : terms_) {
            auto tn = t.solution->nodes();
            n.insert(n.end(), tn.begin(), tn.end());
        }
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
        return n;
    }

    /// Phi evaluated from precomputed <m_i, X^2> values.
    double evaluate(const std::vector<double>& quadratic_forms) const {
        double s = 0.0;
        for (std::size_t i = 0; i < terms_.size(); ++i) s += terms_[i].coefficient * std::exp(-quadratic_forms[i]);
        return s;
    }

private:
    std::vector<Term> terms_;
    std::string name_;
};

/// Squared Bessel transition density q^delta_t(x, y).
inline double besq_transition(double delta, double t, double x, double y) {
    const Dimension dim(delta);
    if (!(t > 0.0) || !(x >= 0.0) || !(y >= 0.0)) throw std::domain_error("besq_transition: bad arguments");
    if (y == 0.0) {
        if (x > 0.0) return 0.0;
        return delta < 2.0 ? std::numeric_limits<double>::infinity() : (delta == 2.0 ? 1.0 / (2.0 * t) : 0.0);
    }
    const double nu = dim.nu();
    if (x == 0.0) {
        const double h = 0.5 * delta;
        return std::exp(-h * std::log(2.0 * t) - specfun::log_gamma(h) + (h - 1.0) * std::log(y) - y / (2.0 * t));
    }
    const double z = std::sqrt(x * y) / t;
    const double sx = std::sqrt(x), sy = std::sqrt(y);
    double log_i = 0.0;
    const double iv = specfun::bessel_i_scaled(nu, z);
    if (iv > 0.0 && std::isfinite(iv))
        log_i = std::log(iv);
    else
        log_i = nu * std::log(0.5 * z) - specfun::log_gamma(nu + 1.0) - z;
    return std::exp(-std::log(2.0 * t) + 0.5 * nu * std::log(y / x) - (sx - sy) * (sx - sy) / (2.0 * t) + log_i);
}

/// Bessel transition density p^delta_t(a, b) = 2 b q^delta_t(a^2, b^2).
inline double bessel_transition(double delta, double t, double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0)) throw std::domain_error("bessel_transition: bad arguments");
    if (b == 0.0) return 0.0;
    return 2.0 * b * besq_transition(delta, t, a * a, b * b);
}

/// Density of X_r under the Bessel bridge from 0 to 0.
inline double bridge_marginal(double delta, double r, double a) {
    const Dimension dim(delta);
    if (!(r > 0.0 && r < 1.0) || !(a >= 0.0)) throw std::domain_error("bridge_marginal: bad arguments");
    const double v = r * (1.0 - r);
    if (a == 0.0) {
        if (delta > 1.0) return 0.0;
        if (delta < 1.0) return std::numeric_limits<double>::infinity();
        return std::exp(dim.log_a_const() - 0.5 * std::log(v));
    }
    return std::exp(dim.log_a_const() + (delta - 1.0) * std::log(a) - 0.5 * delta * std::log(v) - a * a / (2.0 * v));
}

/// Density of X_r^2 under the squared Bessel bridge: Gamma(delta/2, rate 1/(2 r (1-r))).
inline double squared_bridge_marginal(double delta, double r, double z) {
    if (!(r > 0.0 && r < 1.0) || !(z >= 0.0)) throw std::domain_error("squared_bridge_marginal: bad arguments");
    return besq_transition(delta, r * (1.0 - r), 0.0, z);
}

/// Sigma^delta_r(exp(-<m,X^2>) | a) for a single solved measure.
inline double sigma_eval(double delta, const OdeSolution& sol, double r, double a) {
    const Dimension dim(delta);
    const double c = sol.c(r);
    const double d = sol.d(r);
    return std::exp(dim.log_a_const() + 0.5 * delta * std::log(d) - 0.5 * a * a * c);
}

/// Coefficient-weighted Sigma over the terms of Phi.
inline double sigma_eval(double delta, const ExpFunctional& phi, double r, double a) {
    double s = 0.0;
    for (const auto& t : phi.terms()) s += t.coefficient * sigma_eval(delta, *t.solution, r, a);
    return s;
}

/// d^{2j}/da^{2j} Sigma at a = 0; odd orders vanish identically.
inline double sigma_derivative_at_zero(double delta, const ExpFunctional& phi, double r, int order) {
    if (order % 2 == 1) return 0.0;
    const int j = order / 2;
    double s = 0.0;
    for (const auto& t : phi.terms()) {
        const double c = t.solution->c(r);
        // (2j)!/j! (-C/2)^j
        double f = 1.0;
        for (int i = j + 1; i <= 2 * j; ++i) f *= i;
        s += t.coefficient * sigma_eval(delta, *t.solution, r, 0.0) * f * std::pow(-0.5 * c, j);
    }
    return s;
}

/// a -> Sigma^delta_r(Phi | a) as a Gaussian mixture test function.
inline ScalarTestFunction sigma_function(double delta, const ExpFunctional& phi, double r) {
    std::vector<std::pair<double, double>> mix;
    for (const auto& t : phi.terms()) mix.emplace_back(t.coefficient * sigma_eval(delta, *t.solution, r, 0.0), t.solution->c(r));
    return test_functions::gaussian_mixture(std::move(mix));
}

/// Largest C_r over the terms of Phi.
inline double max_c(const ExpFunctional& phi, double r) {
    double c = 0.0;
    for (const auto& t : phi.terms()) c = std::max(c, t.solution->c(r));
    return c;
}

/// E^delta[exp(-<m,X^2>) | X_r = a].
inline double conditional_laplace(double delta, const OdeSolution& sol, double r, double a) {
    const double v = r * (1.0 - r);
    return std::exp(-0.5 * a * a * (sol.c(r) - 1.0 / v) + 0.5 * delta * std::log(v * sol.d(r)));
}

inline double conditional_laplace(double delta, const ExpFunctional& phi, double r, double a) {
    double s = 0.0;
    for (const auto& t : phi.terms()) s += t.coefficient * conditional_laplace(delta, *t.solution, r, a);
    return s;
}

/// E^delta[Phi(X)] = sum_i gamma_i psi_1(m_i)^{-delta/2}.
inline double bridge_expectation(double delta, const ExpFunctional& phi) {
    const Dimension dim(delta);
    double s = 0.0;
    for (const auto& t : phi.terms()) s += t.coefficient * std::pow(t.solution->psi_1(), -0.5 * dim.delta);
    return s;
}

/// E^delta[X_r exp(-<m,X^2>)].
inline double weighted_first_moment(double delta, const OdeSolution& sol, double r) {
    const double lg = specfun::log_gamma(0.5 * (delta + 1.0)) - specfun::log_gamma(0.5 * delta);
    return std::numbers::sqrt2 * std::exp(lg) * std::pow(sol.psi_1(), -0.5 * (delta + 1.0)) *
           std::sqrt(sol.psi(r) * sol.psi_hat(r));
}

}  // namespace besselbridge
