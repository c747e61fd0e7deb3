#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "mfsim/stochastic.hpp"

using namespace mfsim;

namespace {

// Oracle: Student qG density is the Student-t density of t = sqrt(L) x,
// rescaled by the Jacobian sqrt(L).
double student_oracle(double x, double alpha, double L) {
    return std::sqrt(L) * boost::math::pdf(boost::math::students_t(alpha), std::sqrt(L) * x);
}

double student_cdf_oracle(double x, double alpha, double L) {
    return boost::math::cdf(boost::math::students_t(alpha), std::sqrt(L) * x);
}

// One-sample KS statistic against an analytic CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf_fn) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf_fn(xs[i]);
        d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return d;
}

// Critical value of sqrt(n) D at p = 0.01.
constexpr double ks_crit_01 = 1.628;

std::vector<double> draws(const PriceSamplerSpec& spec, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample_relative_price(spec, rng);
    return xs;
}

} // namespace

TEST(Density, StudentMatchesBoostStudentT) {
    for (double alpha : {0.9, 1.3, 1.9, 3.0})
        for (double L : {3.0, 9.813e4})
            for (double x : {0.0, 1e-4, -3e-3, 0.02, 1.7})
                EXPECT_NEAR(density(StudentQG{alpha, L}, x) / student_oracle(x, alpha, L), 1.0, 1e-10)
                    << "alpha=" << alpha << " L=" << L << " x=" << x;
}

TEST(Density, LaplaceAndGaussianMatchBoost) {
    for (double x : {0.0, 1e-3, -4e-3, 0.01}) {
        EXPECT_NEAR(density(Laplace{208.9}, x), boost::math::pdf(boost::math::laplace_distribution<>(0.0, 1.0 / 208.9), x), 1e-9);
        EXPECT_NEAR(density(Gaussian{3.82e-3}, x), boost::math::pdf(boost::math::normal(0.0, 3.82e-3), x), 1e-9);
    }
}

TEST(Density, ValuesAtZero) {
    EXPECT_NEAR(density(Laplace{208.9}, 0.0), 104.45, 1e-9);
    const double sigma = 3.82e-3;
    EXPECT_NEAR(density(Gaussian{sigma}, 0.0), 1.0 / (sigma * std::sqrt(2 * std::numbers::pi)), 1e-9);
    const auto p = solve_continuity(1.3, 0.0024);
    EXPECT_NEAR(density(StudentQG{1.3, p.L}, 0.0), 104.4, 0.1);
}

TEST(Density, InvalidParametersRejected) {
    EXPECT_THROW(validate(StudentQG{-1.0, 1.0}), domain_error);
    EXPECT_THROW(validate(Laplace{0.0}), domain_error);
    EXPECT_THROW(validate(Gaussian{-2.0}), domain_error);
}

TEST(Density, BetaFunctionMatchesBoost) {
    for (double a : {0.45, 0.65, 0.95, 1.5})
        EXPECT_NEAR(beta_fn(0.5, a) / boost::math::beta(0.5, a), 1.0, 1e-12);
}

TEST(Continuity, ReferenceValues) {
    const auto p = solve_continuity(1.3, 0.0024);
    EXPECT_NEAR(p.L, 1.3 / (2.3 * 0.0024 * 0.0024), 1e-6);
    EXPECT_NEAR(p.L, 9.813e4, 5.0);  // four significant digits
    EXPECT_NEAR(p.lambda, 208.9, 0.1);
    EXPECT_NEAR(p.sigma, 3.820e-3, 1e-6);
}

TEST(Continuity, EquationsHoldToTenDigits) {
    for (double alpha : {0.9, 1.3, 1.9}) {
        const auto p = solve_continuity(alpha, 0.0024);
        const double B = boost::math::beta(0.5, alpha / 2);
        EXPECT_NEAR(p.L / (alpha / ((1 + alpha) * 0.0024 * 0.0024)), 1.0, 1e-10);
        EXPECT_NEAR(p.lambda * B / (2 * std::sqrt(p.L / alpha)), 1.0, 1e-10);
        EXPECT_NEAR(p.sigma * std::sqrt(2 * std::numbers::pi * p.L / alpha) / B, 1.0, 1e-10);
        EXPECT_NEAR(p.lambda * p.lambda * p.sigma * p.sigma / (2 / std::numbers::pi), 1.0, 1e-10);
        const double fq = density(StudentQG{alpha, p.L}, 0.0);
        const double fl = density(Laplace{p.lambda}, 0.0);
        const double fg = density(Gaussian{p.sigma}, 0.0);
        EXPECT_LT(std::abs(fq - fl) / fq, 1e-10);
        EXPECT_LT(std::abs(fq - fg) / fq, 1e-10);
        EXPECT_LT(std::abs(fl - fg) / fl, 1e-10);
    }
}

TEST(Continuity, DomainErrors) {
    EXPECT_THROW(solve_continuity(0.0, 0.0024), domain_error);
    EXPECT_THROW(solve_continuity(1.3, -1.0), domain_error);
}

TEST(Sampler, StudentMatchesAnalyticCdf) {
    const auto spec = make_sampler_spec(FamilyKind::studentqg, FamilyKind::studentqg, 1.3, 0.0024);
    const double L = std::get<StudentQG>(spec.left).L;
    const auto xs = draws(spec, 100'000, 7);
    const double d = ks_statistic(xs, [&](double x) { return student_cdf_oracle(x, 1.3, L); });
    EXPECT_LT(d * std::sqrt(1e5), ks_crit_01);
}

TEST(Sampler, LaplaceAndGaussianHalves) {
    const auto p = solve_continuity(1.3, 0.0024);
    const boost::math::laplace_distribution<> lap(0.0, 1.0 / p.lambda);
    const boost::math::normal gau(0.0, p.sigma);
    for (auto kind : {FamilyKind::laplace, FamilyKind::gaussian}) {
        const auto spec = make_sampler_spec(kind, kind, 1.3, 0.0024);
        const auto xs = draws(spec, 100'000, 11);
        double mean = 0, ss = 0;
        for (double x : xs) mean += x;
        mean /= 1e5;
        for (double x : xs) ss += (x - mean) * (x - mean);
        EXPECT_LT(std::abs(mean), 5 * std::sqrt(ss / 1e5) / std::sqrt(1e5));
        const double d = ks_statistic(xs, [&](double x) { return kind == FamilyKind::laplace ? boost::math::cdf(lap, x) : boost::math::cdf(gau, x); });
        EXPECT_LT(d * std::sqrt(1e5), ks_crit_01);
    }
}

TEST(Sampler, MixedHalvesHaveEqualMass) {
    const auto spec = make_sampler_spec(FamilyKind::laplace, FamilyKind::gaussian, 1.3, 0.0024);
    const std::size_t n = 1'000'000;
    const auto xs = draws(spec, n, 13);
    const double neg = static_cast<double>(std::count_if(xs.begin(), xs.end(), [](double x) { return x < 0; })) / static_cast<double>(n);
    EXPECT_NEAR(neg, 0.5, 3 * std::sqrt(0.25 / static_cast<double>(n)));

    // Density continuity at zero: counts in equal-width bins on either side.
    const double w = 2e-4;
    const auto left = std::count_if(xs.begin(), xs.end(), [&](double x) { return x < 0 && x >= -w; });
    const auto right = std::count_if(xs.begin(), xs.end(), [&](double x) { return x >= 0 && x < w; });
    EXPECT_LT(std::abs(static_cast<double>(left - right)), 4 * std::sqrt(static_cast<double>(left + right)));
}

TEST(Sampler, Deterministic) {
    const auto spec = make_sampler_spec(FamilyKind::studentqg, FamilyKind::gaussian, 1.5, 0.0024);
    EXPECT_EQ(draws(spec, 1000, 3), draws(spec, 1000, 3));
}

TEST(Fgn, AutocorrelationAtLagOne) {
    Rng rng(5);
    for (double H : {0.3, 0.8}) {
        const auto z = generate_fgn(H, 1 << 16, rng);
        double m = 0, v = 0, c = 0;
        for (double x : z) m += x;
        m /= static_cast<double>(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            v += (z[i] - m) * (z[i] - m);
            if (i + 1 < z.size()) c += (z[i] - m) * (z[i + 1] - m);
        }
        EXPECT_NEAR(v / static_cast<double>(z.size()), 1.0, 0.1);
        EXPECT_NEAR(c / v, std::pow(2.0, 2 * H - 1) - 1, 0.03) << "H=" << H;
    }
}

TEST(Signs, ValuesAreUnitSigns) {
    Rng rng(9);
    const auto s = generate_sign_series(0.8, 10'000, rng);
    ASSERT_EQ(s.values.size(), 10'000u);
    for (auto v : s.values) ASSERT_TRUE(v == 1 || v == -1);
}

TEST(Signs, DfaRecoversTargetHurst) {
    for (double H : {0.5, 0.7, 0.8}) {
        Rng rng(derive_seed(21, static_cast<std::uint64_t>(H * 10)));
        const auto s = generate_sign_series(H, 1 << 17, rng);
        EXPECT_NEAR(estimate_hurst(std::span<const std::int8_t>(s.values)), H, 0.05) << "H=" << H;
    }
}

TEST(Hurst, WhiteNoise) {
    Rng rng(1);
    std::normal_distribution<double> n01;
    std::vector<double> z(1 << 16);
    for (auto& v : z) v = n01(rng);
    EXPECT_NEAR(estimate_hurst(z), 0.5, 0.05);
}

TEST(Hurst, FgnTargets) {
    for (double H : {0.3, 0.7}) {
        Rng rng(derive_seed(2, static_cast<std::uint64_t>(H * 10)));
        EXPECT_NEAR(estimate_hurst(generate_fgn(H, 1 << 16, rng)), H, 0.05) << "H=" << H;
    }
}

TEST(Hurst, Errors) {
    EXPECT_THROW(estimate_hurst(std::vector<double>(512, 0.1)), data_error);
    EXPECT_THROW(estimate_hurst(std::vector<double>(4096, 1.0)), data_error);
}
