#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "measures.hpp"

namespace besselbridge {

enum class Side { left, right };

namespace detail {

// Exact transfer across a density piece of u'' = 2c u over a length dx,
// forward (dx > 0) or backward (dx < 0).
inline std::pair<double, double> propagate(double c, double u, double up, double dx) {
    if (c == 0.0) return {u + up * dx, up};
    const double k = std::sqrt(2.0 * c);
    const double ch = std::cosh(k * dx);
    const double sh = std::sinh(k * dx);
    return {u * ch + up * sh / k, u * k * sh + up * ch};
}

// Solution of u''(dr) = 2 u m(dr) carried across the node structure of m,
// storing u and both one-sided derivatives at every node.
class PiecewiseSolution {
public:
    PiecewiseSolution() = default;

    // Initial data at r = 0 (forward) or at r = 1 (backward). For the forward
    // direction `up` is u'(0+); for the backward one it is u'(1-).
    PiecewiseSolution(const FiniteMeasure& m, double u, double up, bool forward) {
        nodes_ = {0.0};
        for (double x : m.nodes()) nodes_.push_back(x);
        nodes_.push_back(1.0);
        const std::size_t n = nodes_.size();
        dens_.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) dens_[i] = m.density_at(0.5 * (nodes_[i] + nodes_[i + 1]));
        jump_.assign(n, 0.0);
        for (const auto& a : m.atoms()) {
            auto it = std::lower_bound(nodes_.begin(), nodes_.end(), a.r);
            jump_[static_cast<std::size_t>(it - nodes_.begin())] += 2.0 * a.w;
        }
        u_.assign(n, 0.0);
        left_.assign(n, 0.0);
        right_.assign(n, 0.0);
        if (forward) {
            u_[0] = u;
            right_[0] = up;
            left_[0] = up;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                auto [v, vp] = propagate(dens_[i], u_[i], right_[i], nodes_[i + 1] - nodes_[i]);
                u_[i + 1] = v;
                left_[i + 1] = vp;
                right_[i + 1] = vp + jump_[i + 1] * v;
            }
        } else {
            u_[n - 1] = u;
            left_[n - 1] = up;
            right_[n - 1] = up;
            for (std::size_t i = n - 1; i > 0; --i) {
                auto [v, vp] = propagate(dens_[i - 1], u_[i], left_[i], nodes_[i - 1] - nodes_[i]);
                u_[i - 1] = v;
                right_[i - 1] = vp;
                left_[i - 1] = vp - jump_[i - 1] * v;
            }
        }
    }

    double value(double r) const { return eval(r, Side::right).first; }
    double derivative(double r, Side side = Side::right) const { return eval(r, side).second; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }

private:
    std::pair<double, double> eval(double r, Side side) const {
        if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("ode evaluator: r outside [0,1]");
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
        std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        if (nodes_[i] == r) return {u_[i], side == Side::left ? left_[i] : right_[i]};
        // Propagate from whichever end of the piece is nearer for accuracy
        // of small values close to the boundary.
        if (r - nodes_[i] <= nodes_[i + 1] - r) return propagate(dens_[i], u_[i], right_[i], r - nodes_[i]);
        return propagate(dens_[i], u_[i + 1], left_[i + 1], r - nodes_[i + 1]);
    }

    std::vector<double> nodes_;
    std::vector<double> dens_;
    std::vector<double> jump_;
    std::vector<double> u_;
    std::vector<double> left_;
    std::vector<double> right_;
};

}  // namespace detail

/// psi, hat-psi and the kernels C_r, D_r for a measure m.
class OdeSolution {
public:
    explicit OdeSolution(FiniteMeasure m)
        : m_(std::move(m)), psi_(m_, 0.0, 1.0, true), psi_hat_(m_, 0.0, -1.0, false), psi_1_(psi_.value(1.0)) {}

    const FiniteMeasure& measure() const noexcept { return m_; }

    double psi(double r) const { return psi_.value(r); }
    double psi_prime(double r, Side side = Side::right) const { return psi_.derivative(r, side); }
    double psi_hat(double r) const { return psi_hat_.value(r); }
    double psi_hat_prime(double r, Side side = Side::right) const { return psi_hat_.derivative(r, side); }
    double psi_1() const noexcept { return psi_1_; }

    double c(double r) const { return psi_1_ / (psi(r) * psi_hat(r)); }
    double d(double r) const { return 1.0 / (psi(r) * psi_hat(r)); }

    /// Interior atoms and breakpoints of m.
    std::vector<double> nodes() const { return m_.nodes(); }

private:
    FiniteMeasure m_;
    detail::PiecewiseSolution psi_;
    detail::PiecewiseSolution psi_hat_;
    double psi_1_;
};

inline OdeSolution solve(const FiniteMeasure& m) { return OdeSolution(m); }

class ShootingError : public std::runtime_error {
public:
    ShootingError(double residual)
        : std::runtime_error("solve_phi: shooting did not converge, residual " + std::to_string(residual)),
          residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// phi with phi_0 = 1, phi'_1 = 0.
class PhiSolution {
public:
    PhiSolution(detail::PiecewiseSolution s, double slope0, double residual)
        : s_(std::move(s)), slope0_(slope0), residual_(residual) {}
    double phi(double r) const { return s_.value(r); }
    double phi_prime(double r, Side side = Side::right) const { return s_.derivative(r, side); }
    double initial_slope() const noexcept { return slope0_; }
    double residual() const noexcept { return residual_; }

private:
    detail::PiecewiseSolution s_;
    double slope0_;
    double residual_;
};

/// Bisection shooting on phi'_0 in [-2M e^{2M}, 0], M the total mass.
inline PhiSolution solve_phi(const FiniteMeasure& m, double tol = 1e-12, int max_iter = 200) {
    const double mass = m.total_mass();
    auto end_slope = [&](double s) { return detail::PiecewiseSolution(m, 1.0, s, true).derivative(1.0, Side::left); };
    double lo = -2.0 * mass * std::exp(2.0 * mass);
    double hi = 0.0;
    if (end_slope(hi) <= 0.0) {
        // m = 0: phi is constant
        double r = end_slope(hi);
        if (std::abs(r) <= tol) return {detail::PiecewiseSolution(m, 1.0, 0.0, true), 0.0, std::abs(r)};
    }
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (end_slope(mid) > 0.0 ? hi : lo) = mid;
    }
    const double rl = end_slope(lo);
    const double rh = end_slope(hi);
    const double s = std::abs(rl) < std::abs(rh) ? lo : hi;
    const double residual = std::min(std::abs(rl), std::abs(rh));
    if (!(residual <= tol)) throw ShootingError(residual);
    return {detail::PiecewiseSolution(m, 1.0, s, true), s, residual};
}

}  // namespace besselbridge
