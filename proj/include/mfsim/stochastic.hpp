#pragma once

// Stochastic inputs of the order flow: relative prices drawn from a
// composite density whose left (x <= 0) and right (x >= 0) halves may come
// from different families, and long-memory order signs obtained by
// thresholding fractional Gaussian noise.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fftw3.h>

#include "mfsim/error.hpp"
#include "mfsim/random.hpp"

namespace mfsim {

// ---------------------------------------------------------------------------
// Density families
// ---------------------------------------------------------------------------

/// Student / q-Gaussian with tail exponent `alpha` and scale parameter `L`:
///   f(x) = sqrt(L) alpha^(alpha/2) / B(1/2, alpha/2) * (alpha + L x^2)^(-(alpha+1)/2)
struct StudentQG {
    double alpha;
    double L;
};

/// Laplace (double exponential): f(x) = lambda/2 exp(-lambda |x|)
struct Laplace {
    double lambda;
};

/// Zero-mean normal: f(x) = exp(-x^2 / 2 sigma^2) / (sqrt(2 pi) sigma)
struct Gaussian {
    double sigma;
};

using DensityFamily = std::variant<StudentQG, Laplace, Gaussian>;

enum class FamilyKind { studentqg, laplace, gaussian };

inline std::string_view to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::studentqg: return "studentqg";
        case FamilyKind::laplace: return "laplace";
        case FamilyKind::gaussian: return "gaussian";
    }
    return "?";
}

/// Short tag used in directory names: qG, DE, G.
inline std::string_view short_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::studentqg: return "qG";
        case FamilyKind::laplace: return "DE";
        case FamilyKind::gaussian: return "G";
    }
    return "?";
}

inline FamilyKind parse_family(std::string_view s) {
    if (s == "studentqg" || s == "student" || s == "qG" || s == "qg") return FamilyKind::studentqg;
    if (s == "laplace" || s == "DE" || s == "de") return FamilyKind::laplace;
    if (s == "gaussian" || s == "normal" || s == "G" || s == "g") return FamilyKind::gaussian;
    throw domain_error("unknown density family '" + std::string(s) + "'");
}

inline FamilyKind kind_of(const DensityFamily& f) {
    return static_cast<FamilyKind>(f.index());
}

/// Euler Beta function through log-Gamma.
inline double beta_fn(double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

inline void validate(const DensityFamily& fam) {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            bool ok = true;
            if constexpr (std::is_same_v<T, StudentQG>) ok = f.alpha > 0 && f.L > 0 && std::isfinite(f.alpha) && std::isfinite(f.L);
            if constexpr (std::is_same_v<T, Laplace>) ok = f.lambda > 0 && std::isfinite(f.lambda);
            if constexpr (std::is_same_v<T, Gaussian>) ok = f.sigma > 0 && std::isfinite(f.sigma);
            if (!ok) throw domain_error("density parameters must be finite and positive");
        },
        fam);
}

inline double density(const DensityFamily& fam, double x) {
    struct {
        double x;
        double operator()(const StudentQG& f) const {
            const double log_norm = 0.5 * std::log(f.L) + 0.5 * f.alpha * std::log(f.alpha)
                                    - std::log(beta_fn(0.5, 0.5 * f.alpha));
            return std::exp(log_norm - 0.5 * (f.alpha + 1.0) * std::log(f.alpha + f.L * x * x));
        }
        double operator()(const Laplace& f) const { return 0.5 * f.lambda * std::exp(-f.lambda * std::abs(x)); }
        double operator()(const Gaussian& f) const {
            return std::exp(-x * x / (2.0 * f.sigma * f.sigma)) / (std::sqrt(2.0 * std::numbers::pi) * f.sigma);
        }
    } eval{x};
    return std::visit(eval, fam);
}

/// P(X > a) for a >= 0 under the symmetric family.
inline double upper_tail(const DensityFamily& fam, double a) {
    namespace bm = boost::math;
    struct {
        double a;
        double operator()(const StudentQG& f) const {
            return bm::cdf(bm::complement(bm::students_t_distribution<double>(f.alpha), a * std::sqrt(f.L)));
        }
        double operator()(const Laplace& f) const { return 0.5 * std::exp(-f.lambda * a); }
        double operator()(const Gaussian& f) const { return 0.5 * std::erfc(a / (f.sigma * std::numbers::sqrt2)); }
    } eval{a};
    return std::visit(eval, fam);
}

inline double cdf(const DensityFamily& fam, double x) {
    return x >= 0 ? 1.0 - upper_tail(fam, x) : upper_tail(fam, -x);
}

/// Inverse of upper_tail: the a >= 0 with P(X > a) = q, for q in (0, 1/2].
inline double upper_tail_quantile(const DensityFamily& fam, double q) {
    namespace bm = boost::math;
    struct {
        double q;
        double operator()(const StudentQG& f) const {
            const double t = bm::quantile(bm::complement(bm::students_t_distribution<double>(f.alpha), q));
            return t / std::sqrt(f.L);
        }
        double operator()(const Laplace& f) const { return -std::log(2.0 * q) / f.lambda; }
        double operator()(const Gaussian& f) const {
            return f.sigma * bm::quantile(bm::complement(bm::normal_distribution<double>(), q));
        }
    } eval{q};
    return std::max(0.0, std::visit(eval, fam));
}

// ---------------------------------------------------------------------------
// Continuity at x = 0
// ---------------------------------------------------------------------------

struct ContinuityParams {
    double L;
    double lambda;
    double sigma;
};

/// Parameters of the three families that share the same density at zero for
/// a given tail exponent and target scale:
///   L      = alpha / ((1 + alpha) sigma_x^2)
///   lambda = 2 sqrt(L/alpha) / B(1/2, alpha/2)
///   sigma  = B(1/2, alpha/2) / sqrt(2 pi L / alpha)
inline ContinuityParams solve_continuity(double alpha_x, double sigma_x) {
    if (!(alpha_x > 0) || !(sigma_x > 0) || !std::isfinite(alpha_x) || !std::isfinite(sigma_x))
        throw domain_error("solve_continuity: alpha_x and sigma_x must be positive");
    const double L = alpha_x / ((1.0 + alpha_x) * sigma_x * sigma_x);
    const double B = beta_fn(0.5, 0.5 * alpha_x);
    const double lambda = 2.0 * std::sqrt(L / alpha_x) / B;
    const double sigma = B / std::sqrt(2.0 * std::numbers::pi * L / alpha_x);
    return {L, lambda, sigma};
}

inline DensityFamily make_family(FamilyKind k, double alpha_x, const ContinuityParams& p) {
    switch (k) {
        case FamilyKind::studentqg: return StudentQG{alpha_x, p.L};
        case FamilyKind::laplace: return Laplace{p.lambda};
        case FamilyKind::gaussian: return Gaussian{p.sigma};
    }
    throw domain_error("bad family kind");
}

struct PriceSamplerSpec {
    DensityFamily left;
    DensityFamily right;
    double alpha_x = 1.3;
    double sigma_x = 0.0024;

    FamilyKind left_kind() const { return kind_of(left); }
    FamilyKind right_kind() const { return kind_of(right); }
};

/// Builds a composite spec; every family parameter is solved from
/// (alpha_x, sigma_x), never set by hand.
inline PriceSamplerSpec make_sampler_spec(FamilyKind left, FamilyKind right, double alpha_x, double sigma_x) {
    const auto p = solve_continuity(alpha_x, sigma_x);
    return {make_family(left, alpha_x, p), make_family(right, alpha_x, p), alpha_x, sigma_x};
}

/// Composite density: left family for x < 0, right family for x >= 0.
inline double composite_density(const PriceSamplerSpec& spec, double x) {
    return density(x < 0 ? spec.left : spec.right, x);
}

/// Draws x from the composite density. Each symmetric half carries mass 1/2,
/// so the side is a fair coin and the magnitude comes from the inverse CDF of
/// the chosen half.
inline double sample_relative_price(const PriceSamplerSpec& spec, Rng& rng) {
    const bool negative = uniform01(rng) < 0.5;
    const double q = 0.5 * uniform_open(rng);
    const double mag = upper_tail_quantile(negative ? spec.left : spec.right, q);
    return negative ? -mag : mag;
}

// ---------------------------------------------------------------------------
// Fractional Gaussian noise and order signs
// ---------------------------------------------------------------------------

/// Autocovariance of unit-variance fractional Gaussian noise at lag k.
inline double fgn_autocovariance(double hurst, std::size_t k) {
    const double h2 = 2.0 * hurst;
    const double kk = static_cast<double>(k);
    return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(std::abs(kk - 1.0), h2));
}

namespace detail {

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// In-place forward DFT. Planning is serialized because the FFTW planner is
/// not reentrant; execution is.
inline void forward_dft(fftw_complex* data, int m) {
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(m, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

} // namespace detail

/// Exact fractional Gaussian noise (unit variance) by circulant embedding.
inline std::vector<double> generate_fgn(double hurst, std::size_t n, Rng& rng) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw domain_error("Hurst index must lie in (0,1)");
    if (n == 0) throw domain_error("series length must be positive");
    if (n == 1) {
        std::normal_distribution<double> z;
        return {z(rng)};
    }
    std::size_t m = 2;
    while (m < 2 * (n - 1)) m <<= 1;
    const int mi = static_cast<int>(m);

    detail::FftwBuffer buf(fftw_alloc_complex(m));
    for (std::size_t j = 0; j < m; ++j) {
        buf[j][0] = fgn_autocovariance(hurst, j <= m / 2 ? j : m - j);
        buf[j][1] = 0.0;
    }
    detail::forward_dft(buf.get(), mi);

    std::vector<double> eig(m);
    double max_eig = 0.0;
    for (std::size_t k = 0; k < m; ++k) max_eig = std::max(max_eig, buf[k][0]);
    for (std::size_t k = 0; k < m; ++k) {
        double e = buf[k][0];
        if (e < 0.0) {
            if (e < -1e-9 * max_eig) throw error("circulant embedding is not nonnegative definite");
            e = 0.0;
        }
        eig[k] = e;
    }

    std::normal_distribution<double> z;
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double s = std::sqrt(eig[k] * inv_m);
        const double re = z(rng);
        const double im = z(rng);
        buf[k][0] = s * re;
        buf[k][1] = s * im;
    }
    detail::forward_dft(buf.get(), mi);

    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = buf[j][0];
    return out;
}

struct SignSeries {
    std::vector<std::int8_t> values;
    double target_hurst = 0.5;
};

/// Order signs as the sign of fractional Gaussian noise; exact zeros map to +1.
inline SignSeries generate_sign_series(double hurst, std::size_t n, Rng& rng) {
    const auto noise = generate_fgn(hurst, n, rng);
    SignSeries s{std::vector<std::int8_t>(n), hurst};
    std::transform(noise.begin(), noise.end(), s.values.begin(),
                   [](double v) -> std::int8_t { return v < 0.0 ? -1 : 1; });
    return s;
}

/// Detrended fluctuation analysis (linear detrending) estimate of the Hurst
/// exponent. Box sizes are log-spaced from 16 to n/8.
inline double estimate_hurst(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 1024) throw data_error("DFA needs at least 1024 points");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> profile(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += series[i] - mean;
        profile[i] = acc;
    }

    std::vector<std::size_t> scales;
    const double lo = std::log(16.0), hi = std::log(static_cast<double>(n) / 8.0);
    constexpr int n_scales = 24;
    for (int i = 0; i < n_scales; ++i) {
        const auto s = static_cast<std::size_t>(std::lround(std::exp(lo + (hi - lo) * i / (n_scales - 1))));
        if (scales.empty() || s != scales.back()) scales.push_back(s);
    }

    std::vector<double> lx, ly;
    for (std::size_t s : scales) {
        const std::size_t boxes = n / s;
        // x = 0..s-1 within each box; closed-form linear least squares.
        const double sd = static_cast<double>(s);
        const double sx = sd * (sd - 1) / 2, sxx = (sd - 1) * sd * (2 * sd - 1) / 6;
        const double det = sd * sxx - sx * sx;
        double total = 0.0;
        for (std::size_t b = 0; b < boxes; ++b) {
            const double* raw = profile.data() + b * s;
            const double shift = raw[0];
            double sy = 0, sxy = 0, syy = 0;
            for (std::size_t i = 0; i < s; ++i) {
                const double y = raw[i] - shift;
                sy += y;
                sxy += static_cast<double>(i) * y;
                syy += y * y;
            }
            const double slope = (sd * sxy - sx * sy) / det;
            const double icpt = (sy - slope * sx) / sd;
            // Residual sum of squares of the fitted line.
            const double rss = syy - icpt * sy - slope * sxy;
            total += std::max(rss, 0.0) / sd;
        }
        const double f2 = total / static_cast<double>(boxes);
        if (f2 <= 0.0) throw data_error("DFA: degenerate (constant) series");
        lx.push_back(std::log(sd));
        ly.push_back(0.5 * std::log(f2));
    }

    const double k = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= k;
    my /= k;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
}

inline double estimate_hurst(std::span<const std::int8_t> signs) {
    std::vector<double> v(signs.begin(), signs.end());
    return estimate_hurst(std::span<const double>(v));
}

} // namespace mfsim
