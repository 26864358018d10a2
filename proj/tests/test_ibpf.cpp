#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "besselbridge/ibpf.hpp"
#include "oracles.hpp"

using namespace besselbridge;
constexpr double pi = std::numbers::pi;

namespace {

const TestFunctionH poly = TestFunctionH::poly({1.0});  // r^2 (1-r)^2
const TestFunctionH bump = TestFunctionH::bump(0.2, 0.8);

std::vector<ExpFunctional> functionals() {
    return {ExpFunctional::one(), ExpFunctional::exp_of(FiniteMeasure::lebesgue(0.5), "half_lebesgue"),
            ExpFunctional::exp_of(FiniteMeasure::atom(0.5, 1.0), "atom_half"),
            ExpFunctional({{0.7, FiniteMeasure::lebesgue(0.5)},
                           {0.3, FiniteMeasure::atom(0.3, 0.8) + FiniteMeasure::window(0.5, 0.9, 1.0)}},
                          "two_term")};
}

}  // namespace

TEST(LhsClosed, BetaIntegralValues) {
    const double beta = pi / 8.0;  // B(3/2, 3/2)
    EXPECT_NEAR(lhs_closed(3.0, ExpFunctional::one(), poly), -beta / std::sqrt(2 * pi), 1e-10);
    EXPECT_NEAR(lhs_closed(1.0, ExpFunctional::one(), poly), -beta / (std::pow(2.0, 1.5) * std::sqrt(pi)), 1e-10);
}

TEST(LhsClosed, CriticalThreeIsHalfSigmaAtZero) {
    for (const auto& h : {poly, bump}) {
        const double ref =
            -0.5 * oracle::simpson_unit([&](double r) { return h(r) * std::sqrt(2.0 / pi) * std::pow(r * (1 - r), -1.5); });
        EXPECT_NEAR(lhs_closed(3.0, ExpFunctional::one(), h), ref, 1e-9);
    }
}

TEST(RhsSpecial, MatchesLhsClosedAtCriticalDimensions) {
    for (const auto& phi : functionals())
        for (double d : {1.0, 3.0})
            for (const auto& h : {poly, bump})
                EXPECT_NEAR(rhs_special(d, phi, h), lhs_closed(d, phi, h), 1e-9) << phi.name() << " " << d;
    EXPECT_THROW(rhs_special(2.0, ExpFunctional::one(), poly), std::domain_error);
}

TEST(RhsQuadrature, RefusesCriticalDimensions) {
    EXPECT_THROW(rhs_quadrature(1.0, ExpFunctional::one(), poly), std::domain_error);
    EXPECT_THROW(rhs_quadrature(3.0, ExpFunctional::one(), poly), std::domain_error);
    EXPECT_THROW(rhs_unified(2.0, ExpFunctional::one(), poly), std::domain_error);
}

TEST(RhsQuadrature, ClassicalRegimeClosedForm) {
    // delta > 3, Phi = 1: -kappa int h E[X_r^{-3}] dr with the chi-type moment in closed form
    const double d = 3.5;
    const Dimension dim(d);
    const double ref = -dim.kappa() * oracle::simpson_unit([&](double r) {
        const double v = r * (1 - r);
        const double moment = dim.a_const() * std::pow(v, -0.5 * d) * 0.5 * std::pow(2 * v, 0.5 * (d - 3)) * std::tgamma(0.5 * (d - 3));
        return poly(r) * moment;
    });
    EXPECT_NEAR(rhs_quadrature(d, ExpFunctional::one(), poly), ref, 1e-9);
    EXPECT_NEAR(lhs_closed(d, ExpFunctional::one(), poly), ref, 1e-9);
}

TEST(RhsQuadrature, AgreesWithLhsClosedAcrossRegimes) {
    for (double d : {0.5, 2.0, 2.5})
        for (const auto& phi : functionals())
            EXPECT_NEAR(rhs_quadrature(d, phi, bump), lhs_closed(d, phi, bump), 1e-6) << phi.name() << " " << d;
}

TEST(RhsUnified, ReducesToSpecialAndQuadrature) {
    const auto phi = functionals()[3];
    for (double d : {1.0, 3.0}) EXPECT_NEAR(rhs_unified(d, phi, bump), rhs_special(d, phi, bump), 1e-12);
    EXPECT_NEAR(rhs_unified(2.5, phi, bump), rhs_quadrature(2.5, phi, bump), 1e-8);
}

TEST(RhsUnified, PrefactorIdentity) {
    for (double d : {0.5, 1.5, 2.5, 3.5, 4.2}) {
        const double lhs = Dimension(d).kappa() * std::tgamma(d - 3.0);
        EXPECT_NEAR(lhs, std::tgamma(d) / (4.0 * (d - 2.0)), 1e-12 * std::abs(lhs)) << d;
    }
}

TEST(CriticalContinuity, QuadratureApproachesSpecialValues) {
    for (const auto& phi : {functionals()[0], functionals()[2]})
        for (double crit : {1.0, 3.0}) {
            const double target = rhs_special(crit, phi, bump);
            for (double sgn : {-1.0, 1.0}) {
                const double far = std::abs(rhs_quadrature(crit + sgn * 0.01, phi, bump) - target);
                const double near = std::abs(rhs_quadrature(crit + sgn * 0.001, phi, bump) - target);
                EXPECT_LE(near, 1e-3);
                EXPECT_LT(near, far) << phi.name() << " " << crit << " " << sgn;
            }
        }
}

TEST(Skeleton, ResidualsVanish) {
    EXPECT_LE(skeleton_check(FiniteMeasure::zero(), poly), 1e-8);
    EXPECT_LE(skeleton_check(FiniteMeasure::lebesgue(0.5), bump), 1e-6);
    EXPECT_LE(skeleton_check(FiniteMeasure::atom(0.5, 1.0), poly), 1e-6);
    EXPECT_LE(skeleton_check(FiniteMeasure::window(0.1, 0.6, 2.0), bump.scaled(5.0)), 5e-6);
}

TEST(Skeleton, BothSidesAtZeroMeasure) {
    // int sqrt(r(1-r)) h'' dr = -1/4 int h (r(1-r))^{-3/2} dr = -pi/32 for h = r^2 (1-r)^2
    const double lhs = oracle::simpson_unit([&](double r) { return std::sqrt(r * (1 - r)) * poly.second_derivative(r); });
    EXPECT_NEAR(lhs, -pi / 32.0, 1e-9);
}

TEST(LhsMc, AgreesWithClosedForm) {
    McOptions opt;
    opt.n = 20000;
    opt.seed = 3;
    opt.threads = 1;
    const auto e = lhs_mc(3.0, ExpFunctional::one(), poly, opt);
    EXPECT_NEAR(e.mean, lhs_closed(3.0, ExpFunctional::one(), poly), 3.0 * e.se);
    const auto atom = functionals()[2];
    const auto f = lhs_mc(1.0, atom, poly, opt);
    EXPECT_NEAR(f.mean, lhs_closed(1.0, atom, poly), 3.0 * f.se);
}

TEST(RhsClassical, CriticalThreeIsSpecialValue) {
    const auto phi = functionals()[1];
    const auto e = rhs_classical(3.0, phi, bump, McOptions{});
    EXPECT_EQ(e.n, 0u);
    EXPECT_NEAR(e.mean, rhs_special(3.0, phi, bump), 1e-9);
    EXPECT_THROW(rhs_classical(2.5, phi, bump, McOptions{}), std::domain_error);
}

TEST(Verify, ReportRowsAndCsv) {
    const auto rep = verify(3.0, functionals()[2], bump);
    EXPECT_TRUE(rep.rhs_special.has_value());
    EXPECT_TRUE(rep.rhs_unified.has_value());
    EXPECT_FALSE(rep.rhs_quadrature.has_value());
    EXPECT_NEAR(*rep.rhs_special, *rep.rhs_unified, 1e-12);
    EXPECT_TRUE(rep.pass());
    const auto two = verify(2.0, ExpFunctional::one(), bump);
    EXPECT_FALSE(two.rhs_unified.has_value());
    EXPECT_TRUE(two.rhs_quadrature.has_value());
    EXPECT_TRUE(two.pass());

    const std::string path = ::testing::TempDir() + "ibpf_rows.csv";
    write_ibpf_csv(path, {rep, two});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "delta,phi_id,h_id,route,value,se_or_tol,residual_vs_lhs_closed");
    std::remove(path.c_str());
}
