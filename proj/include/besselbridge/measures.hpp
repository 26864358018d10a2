#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadrature.hpp"

namespace besselbridge {

struct Atom {
    double r;
    double w;
    bool operator==(const Atom&) const = default;
};

/// Nonnegative finite measure on [0,1]: point masses plus a piecewise-constant
/// density. Endpoint atoms are rejected.
class FiniteMeasure {
public:
    FiniteMeasure() : breaks_{0.0, 1.0}, values_{0.0} {}

    FiniteMeasure(std::vector<Atom> atoms, std::vector<double> breaks, std::vector<double> values)
        : atoms_(std::move(atoms)), breaks_(std::move(breaks)), values_(std::move(values)) {
        validate();
    }

    static FiniteMeasure zero() { return {}; }
    static FiniteMeasure lebesgue(double c = 1.0) { return FiniteMeasure({}, {0.0, 1.0}, {c}); }
    static FiniteMeasure atom(double r, double w) { return FiniteMeasure({{r, w}}, {0.0, 1.0}, {0.0}); }
    /// c on [a, b], zero elsewhere
    static FiniteMeasure window(double a, double b, double c) {
        if (!(0.0 <= a && a < b && b <= 1.0)) throw std::invalid_argument("window: need 0 <= a < b <= 1");
        std::vector<double> br{0.0};
        std::vector<double> v;
        if (a > 0.0) {
            br.push_back(a);
            v.push_back(0.0);
        }
        br.push_back(b);
        v.push_back(c);
        if (b < 1.0) {
            br.push_back(1.0);
            v.push_back(0.0);
        }
        return FiniteMeasure({}, br, v);
    }

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    const std::vector<double>& breaks() const noexcept { return breaks_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Density value on the piece containing r (right-continuous; last piece closed).
    double density_at(double r) const {
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), r);
        std::size_t j = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
        if (j >= values_.size()) j = values_.size() - 1;
        return values_[j];
    }

    double total_mass() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.w;
        for (std::size_t j = 0; j < values_.size(); ++j) s += values_[j] * (breaks_[j + 1] - breaks_[j]);
        return s;
    }

    bool is_zero() const { return total_mass() == 0.0; }

    /// Interior points where the measure changes character: atoms and breakpoints.
    std::vector<double> nodes() const {
        std::vector<double> n;
        for (const auto& a : atoms_) n.push_back(a.r);
        for (std::size_t j = 1; j + 1 < breaks_.size(); ++j) n.push_back(breaks_[j]);
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
        return n;
    }

    FiniteMeasure scaled(double c) const {
        if (!(c >= 0.0)) throw std::invalid_argument("FiniteMeasure::scaled: factor must be nonnegative");
        auto out = *this;
        for (auto& a : out.atoms_) a.w *= c;
        for (auto& v : out.values_) v *= c;
        return out;
    }

    friend FiniteMeasure operator+(const FiniteMeasure& a, const FiniteMeasure& b) {
        std::vector<Atom> atoms = a.atoms_;
        for (const auto& x : b.atoms_) {
            auto it = std::find_if(atoms.begin(), atoms.end(), [&](const Atom& y) { return y.r == x.r; });
            if (it != atoms.end())
                it->w += x.w;
            else
                atoms.push_back(x);
        }
        std::sort(atoms.begin(), atoms.end(), [](const Atom& p, const Atom& q) { return p.r < q.r; });
        std::vector<double> br = a.breaks_;
        br.insert(br.end(), b.breaks_.begin(), b.breaks_.end());
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        std::vector<double> v(br.size() - 1);
        for (std::size_t j = 0; j + 1 < br.size(); ++j) {
            const double mid = 0.5 * (br[j] + br[j + 1]);
            v[j] = a.density_at(mid) + b.density_at(mid);
        }
        return FiniteMeasure(atoms, br, v);
    }

    bool operator==(const FiniteMeasure&) const = default;

    std::string describe() const {
        std::ostringstream os;
        os.precision(6);
        os << "atoms[";
        for (std::size_t i = 0; i < atoms_.size(); ++i) os << (i ? ";" : "") << atoms_[i].r << ":" << atoms_[i].w;
        os << "] density[";
        for (std::size_t j = 0; j < values_.size(); ++j) os << (j ? ";" : "") << breaks_[j] << "-" << breaks_[j + 1] << ":" << values_[j];
        os << "]";
        return os.str();
    }

private:
    void validate() const {
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            const auto& a = atoms_[i];
            if (!(a.r > 0.0 && a.r < 1.0))
                throw std::invalid_argument("FiniteMeasure: atoms must lie strictly inside (0,1)");
            if (!(a.w >= 0.0) || !std::isfinite(a.w)) throw std::invalid_argument("FiniteMeasure: atom weight must be >= 0");
            if (i > 0 && !(atoms_[i - 1].r < a.r))
                throw std::invalid_argument("FiniteMeasure: atom locations must be strictly increasing");
        }
        if (breaks_.size() < 2 || breaks_.front() != 0.0 || breaks_.back() != 1.0)
            throw std::invalid_argument("FiniteMeasure: breakpoints must run from 0 to 1");
        for (std::size_t j = 1; j < breaks_.size(); ++j)
            if (!(breaks_[j - 1] < breaks_[j])) throw std::invalid_argument("FiniteMeasure: breakpoints must be strictly increasing");
        if (values_.size() + 1 != breaks_.size())
            throw std::invalid_argument("FiniteMeasure: need one density value per piece");
        for (double v : values_)
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("FiniteMeasure: density must be >= 0");
    }

    std::vector<Atom> atoms_;
    std::vector<double> breaks_;
    std::vector<double> values_;
};

/// <m, f>
template <class F>
double integrate(const FiniteMeasure& m, F&& f, const quadrature::Options& opt = {1e-10, 1e-12, 4000}) {
    double s = 0.0;
    for (const auto& a : m.atoms()) s += a.w * f(a.r);
    const auto& br = m.breaks();
    const auto& v = m.values();
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] == 0.0) continue;
        s += v[j] * quadrature::integrate(f, br[j], br[j + 1], opt, "integrate(m, f)").value;
    }
    return s;
}

inline double total_mass(const FiniteMeasure& m) { return m.total_mass(); }

/// Weights w_i = int hat_i dm of the piecewise-linear hat basis on `grid`
/// (grid includes 0 and 1). Sum_i w_i f(t_i) is then <m, f> for the linear
/// interpolant of f.
inline std::vector<double> hat_weights(const FiniteMeasure& m, const std::vector<double>& grid) {
    const std::size_t n = grid.size();
    if (n < 2 || grid.front() != 0.0 || grid.back() != 1.0)
        throw std::invalid_argument("hat_weights: grid must run from 0 to 1");
    std::vector<double> w(n, 0.0);
    for (const auto& a : m.atoms()) {
        auto it = std::lower_bound(grid.begin(), grid.end(), a.r);
        const auto i = static_cast<std::size_t>(it - grid.begin());
        if (*it == a.r) {
            w[i] += a.w;
        } else {
            const double lam = (a.r - grid[i - 1]) / (grid[i] - grid[i - 1]);
            w[i - 1] += a.w * (1.0 - lam);
            w[i] += a.w * lam;
        }
    }
    const auto& br = m.breaks();
    const auto& v = m.values();
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] == 0.0) continue;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double lo = std::max(grid[i], br[j]);
            const double hi = std::min(grid[i + 1], br[j + 1]);
            if (!(hi > lo)) continue;
            const double h = grid[i + 1] - grid[i];
            // int_lo^hi (t_{i+1} - r)/h dr and int_lo^hi (r - t_i)/h dr
            const double left = ((grid[i + 1] - lo) * (grid[i + 1] - lo) - (grid[i + 1] - hi) * (grid[i + 1] - hi)) / (2.0 * h);
            const double right = ((hi - grid[i]) * (hi - grid[i]) - (lo - grid[i]) * (lo - grid[i])) / (2.0 * h);
            w[i] += v[j] * left;
            w[i + 1] += v[j] * right;
        }
    }
    return w;
}

/// The atomic measure sum_i w_i delta_{t_i} over the interior grid points.
inline FiniteMeasure discretize_on_grid(const FiniteMeasure& m, const std::vector<double>& grid) {
    const auto w = hat_weights(m, grid);
    std::vector<Atom> atoms;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
        if (w[i] > 0.0) atoms.push_back({grid[i], w[i]});
    return FiniteMeasure(atoms, {0.0, 1.0}, {0.0});
}

/// Test function h in C^2 on [0,1] vanishing to second order at the boundary
/// of its support.
class TestFunctionH {
public:
    enum class Family { poly, bump };

    /// r^2 (1-r)^2 P(r), P with ascending coefficients
    static TestFunctionH poly(std::vector<double> coeffs) {
        if (coeffs.empty()) throw std::invalid_argument("TestFunctionH::poly: need at least one coefficient");
        return TestFunctionH(Family::poly, std::move(coeffs));
    }

    /// c (1 - y^2)^4 on [a, b], y = (2r - a - b)/(b - a)
    static TestFunctionH bump(double a, double b, double c = 1.0) {
        if (!(0.0 < a && a < b && b < 1.0)) throw std::invalid_argument("TestFunctionH::bump: need 0 < a < b < 1");
        return TestFunctionH(Family::bump, {a, b, c});
    }

    static TestFunctionH from_params(const std::string& family, const std::vector<double>& params) {
        if (family == "poly") return poly(params);
        if (family == "bump") {
            if (params.size() != 2 && params.size() != 3)
                throw std::invalid_argument("TestFunctionH: bump takes [a, b] or [a, b, c]");
            return bump(params[0], params[1], params.size() == 3 ? params[2] : 1.0);
        }
        throw std::invalid_argument("TestFunctionH: unknown family '" + family + "'");
    }

    Family family() const noexcept { return family_; }
    const std::vector<double>& params() const noexcept { return p_; }

    std::pair<double, double> support() const {
        if (family_ == Family::bump) return {p_[0], p_[1]};
        return {0.0, 1.0};
    }

    double value(double r) const { return eval(r, 0); }
    double operator()(double r) const { return eval(r, 0); }
    double first_derivative(double r) const { return eval(r, 1); }
    double second_derivative(double r) const { return eval(r, 2); }

    TestFunctionH scaled(double c) const {
        auto out = *this;
        if (family_ == Family::bump)
            out.p_[2] *= c;
        else
            for (auto& x : out.p_) x *= c;
        return out;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(6);
        os << (family_ == Family::bump ? "bump[" : "poly[");
        for (std::size_t i = 0; i < p_.size(); ++i) os << (i ? ";" : "") << p_[i];
        os << "]";
        return os.str();
    }

private:
    TestFunctionH(Family f, std::vector<double> p) : family_(f), p_(std::move(p)) {}

    double eval(double r, int order) const {
        if (family_ == Family::bump) {
            const double a = p_[0], b = p_[1], c = p_[2];
            if (r <= a || r >= b) return 0.0;
            const double s = 2.0 / (b - a);
            const double y = (2.0 * r - a - b) / (b - a);
            const double u = 1.0 - y * y;
            switch (order) {
                case 0: return c * u * u * u * u;
                case 1: return c * s * (-8.0 * y) * u * u * u;
                default: return c * s * s * u * u * (56.0 * y * y - 8.0);
            }
        }
        // B(r) = r^2 (1-r)^2 and its derivatives
        const double B = r * r * (1.0 - r) * (1.0 - r);
        const double B1 = 2.0 * r - 6.0 * r * r + 4.0 * r * r * r;
        const double B2 = 2.0 - 12.0 * r + 12.0 * r * r;
        double P = 0.0, P1 = 0.0, P2 = 0.0;
        for (std::size_t i = p_.size(); i-- > 0;) {
            P2 = P2 * r + 2.0 * P1;
            P1 = P1 * r + P;
            P = P * r + p_[i];
        }
        switch (order) {
            case 0: return B * P;
            case 1: return B1 * P + B * P1;
            default: return B2 * P + 2.0 * B1 * P1 + B * P2;
        }
    }

    Family family_;
    std::vector<double> p_;
};

}  // namespace besselbridge
