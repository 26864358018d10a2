#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace besselbridge::quadrature {

/// Raised when an adaptive rule exhausts its interval budget before reaching
/// the requested tolerance. Carries the best value and error estimate so far.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& where, double value, double achieved, double requested)
        : std::runtime_error(make_message(where, achieved, requested)),
          value_(value), achieved_(achieved), requested_(requested) {}

    double value() const noexcept { return value_; }
    double achieved_tolerance() const noexcept { return achieved_; }
    double requested_tolerance() const noexcept { return requested_; }

private:
    static std::string make_message(const std::string& where, double achieved, double requested) {
        std::ostringstream os;
        os << where << ": quadrature did not converge (achieved error " << achieved
           << ", requested " << requested << ")";
        return os.str();
    }

    double value_;
    double achieved_;
    double requested_;
};

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    std::size_t max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

template <class F>
Interval gk15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<double, 15> fv{};
    fv[14] = f(center);
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        fv[2 * j] = f(center - dx);
        fv[2 * j + 1] = f(center + dx);
    }
    double kronrod = fv[14] * kronrod_weights[7];
    double gauss = fv[14] * gauss_weights[3];
    double resabs = std::abs(kronrod);
    for (int j = 0; j < 7; ++j) {
        kronrod += kronrod_weights[j] * (fv[2 * j] + fv[2 * j + 1]);
        resabs += kronrod_weights[j] * (std::abs(fv[2 * j]) + std::abs(fv[2 * j + 1]));
        if (j % 2 == 1) gauss += gauss_weights[j / 2] * (fv[2 * j] + fv[2 * j + 1]);
    }
    const double mean = 0.5 * kronrod;
    double resasc = kronrod_weights[7] * std::abs(fv[14] - mean);
    for (int j = 0; j < 7; ++j)
        resasc += kronrod_weights[j] * (std::abs(fv[2 * j] - mean) + std::abs(fv[2 * j + 1] - mean));
    resasc *= std::abs(half);
    resabs *= std::abs(half);
    double err = std::abs((kronrod - gauss) * half);
    // QUADPACK error scaling
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(err, 50.0 * eps * resabs);
    if (!std::isfinite(kronrod)) err = std::numeric_limits<double>::infinity();
    return {a, b, kronrod * half, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
/// Bisects the interval with the largest error estimate until
/// error <= max(abs_tol, rel_tol * |value|).
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}, const char* where = "integrate") {
    if (a == b) return {};
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument(std::string(where) + ": finite bounds required");
    std::priority_queue<detail::Interval> heap;
    auto first = detail::gk15(f, a, b);
    double total = first.value;
    double total_err = first.error;
    heap.push(first);
    std::size_t evals = 15;
    while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (heap.size() >= opt.max_intervals) {
            throw QuadratureError(where, total, total_err, std::max(opt.abs_tol, opt.rel_tol * std::abs(total)));
        }
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval cannot be split further in floating point.
            throw QuadratureError(where, total, total_err, std::max(opt.abs_tol, opt.rel_tol * std::abs(total)));
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        evals += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if (heap.size() % 64 == 0) {
            // Re-accumulate to keep running sums from drifting.
            auto copy = heap;
            total = 0.0;
            total_err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                total_err += copy.top().error;
                copy.pop();
            }
        }
    }
    return {total, total_err, evals};
}

/// Integral over [a, b] split at the given interior points.
template <class F>
Result integrate_split(F&& f, double a, double b, const std::vector<double>& cuts, const Options& opt = {},
                       const char* where = "integrate_split") {
    std::vector<double> pts{a};
    for (double c : cuts)
        if (c > a && c < b) pts.push_back(c);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    Result out;
    Options piece = opt;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        auto r = integrate(f, pts[i], pts[i + 1], piece, where);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    return out;
}

/// Integral of f over [a, inf) through the map x = a + t / (1 - t).
template <class F>
Result integrate_to_infinity(F&& f, double a, const Options& opt = {}, const char* where = "integrate_to_infinity") {
    auto mapped = [&](double t) {
        const double one_minus = 1.0 - t;
        if (one_minus <= 0.0) return 0.0;
        const double x = a + t / one_minus;
        const double v = f(x);
        return std::isfinite(x) ? v / (one_minus * one_minus) : 0.0;
    };
    return integrate(mapped, 0.0, 1.0, opt, where);
}

/// Fixed n-point Gauss-Legendre rule on [0, 1], nodes from Newton iteration
/// on P_n.
template <int N>
struct GaussLegendre01 {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussLegendre01() {
        for (int i = 0; i < N; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= N; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= N; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N * (x * p1 - p0) / (x * x - 1.0);
            }
            nodes[i] = 0.5 * (1.0 - x);
            weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    template <class F>
    double operator()(F&& f) const {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

inline const GaussLegendre01<32>& gauss_legendre32() {
    static const GaussLegendre01<32> rule;
    return rule;
}

}  // namespace besselbridge::quadrature
