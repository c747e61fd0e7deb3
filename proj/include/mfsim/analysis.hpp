#pragma once

// Statistics on return samples: CCDFs, power-law tail fits, Student density
// fits, kurtosis, two-sample KS distance, the power-law verdict used by the
// f_L/f_R case studies, and the alpha_r(alpha_x, H_s) regression surface.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "mfsim/error.hpp"
#include "mfsim/stochastic.hpp"

namespace mfsim {

struct CcdfPoint {
    double value;
    double probability;  ///< P(X >= value)
};

/// Empirical P(X >= x) at each distinct sample value, ascending in x.
inline std::vector<CcdfPoint> ccdf(std::span<const double> samples) {
    if (samples.empty()) throw data_error("ccdf of an empty sample");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    std::vector<CcdfPoint> out;
    for (std::size_t i = 0; i < x.size();) {
        std::size_t j = i;
        while (j < x.size() && x[j] == x[i]) ++j;
        out.push_back({x[i], static_cast<double>(x.size() - i) / n});
        i = j;
    }
    return out;
}

enum class TailSide { positive, negative, absolute };

inline std::string_view to_string(TailSide s) {
    switch (s) {
        case TailSide::positive: return "positive";
        case TailSide::negative: return "negative";
        case TailSide::absolute: return "absolute";
    }
    return "?";
}

/// Magnitudes on one side: g > 0, -g for g < 0, or |g|.
inline std::vector<double> tail_values(std::span<const double> samples, TailSide side) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (double s : samples) {
        switch (side) {
            case TailSide::positive: if (s > 0) v.push_back(s); break;
            case TailSide::negative: if (s < 0) v.push_back(-s); break;
            case TailSide::absolute: v.push_back(std::abs(s)); break;
        }
    }
    std::sort(v.begin(), v.end());
    return v;
}

struct ScalingRange {
    double lo;
    double hi;
};

struct TailFit {
    double exponent = 0.0;
    double standard_error = 0.0;
    ScalingRange range{0, 0};
    TailSide side = TailSide::absolute;
    std::size_t n_in_range = 0;
    double rms_residual = 0.0;
};

namespace detail {

inline constexpr double bins_per_decade = 25.0;

/// Log-spaced grid from lo to hi inclusive of lo.
inline std::vector<double> log_grid(double lo, double hi, double per_decade = bins_per_decade) {
    std::vector<double> g;
    const double step = std::log(10.0) / per_decade;
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int k = 0;; ++k) {
        const double u = llo + step * k;
        if (u > lhi + 1e-12) break;
        g.push_back(std::exp(u));
    }
    return g;
}

/// Number of sorted values >= x.
inline std::size_t count_at_least(const std::vector<double>& sorted, double x) {
    return static_cast<std::size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x));
}

struct LineFit {
    double intercept;
    double slope;
    double slope_stderr;  ///< sandwich estimate under CCDF correlation
    double rms;
};

/// OLS of log S on log x for CCDF points S_i = P(X >= x_i) estimated from n
/// samples. The slope's standard error uses the asymptotic covariance of the
/// log empirical CCDF, cov(log S_i, log S_j) = (1 - S_i) / (n S_i) for
/// x_i <= x_j, in the sandwich (X'X)^-1 X' V X (X'X)^-1.
inline LineFit fit_log_ccdf(const std::vector<double>& x, const std::vector<double>& s, double n) {
    const Eigen::Index k = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd X(k, 2);
    Eigen::VectorXd y(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = std::log(x[i]);
        y(i) = std::log(s[i]);
    }
    const Eigen::Matrix2d xtx_inv = (X.transpose() * X).inverse();
    const Eigen::Vector2d beta = xtx_inv * X.transpose() * y;
    Eigen::MatrixXd V(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
            const double si = s[std::min(i, j)];  // larger S belongs to the smaller x
            V(i, j) = (1.0 - si) / (n * si);
        }
    const Eigen::Matrix2d cov = xtx_inv * X.transpose() * V * X * xtx_inv;
    const Eigen::VectorXd r = y - X * beta;
    return {beta(0), beta(1), std::sqrt(std::max(cov(1, 1), 0.0)),
            std::sqrt(r.squaredNorm() / static_cast<double>(k))};
}

/// Largest value that still has at least `min_tail` samples at or above it.
inline double tail_cap(const std::vector<double>& sorted, std::size_t min_tail) {
    if (sorted.size() < min_tail) return sorted.empty() ? 0.0 : sorted.front();
    return sorted[sorted.size() - min_tail];
}

} // namespace detail

/// Minimum number of observations beyond the top of a fitted range.
inline constexpr std::size_t tail_fit_min_exceedances = 10;

/// Power-law exponent from an OLS fit of log CCDF against log value over the
/// requested range; the exponent is the negated slope. The upper end is
/// capped where fewer than ten observations remain beyond it.
inline TailFit fit_tail_exponent(std::span<const double> samples, ScalingRange range, TailSide side) {
    if (!(range.lo > 0) || !(range.hi > range.lo)) throw domain_error("scaling range must satisfy 0 < lo < hi");
    const auto v = tail_values(samples, side);
    const double n = static_cast<double>(v.size());
    const double hi = std::min(range.hi, detail::tail_cap(v, tail_fit_min_exceedances));

    const std::size_t in_range =
        static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), range.hi) - std::lower_bound(v.begin(), v.end(), range.lo));
    if (in_range < 50 || !(hi > range.lo))
        throw data_error("fit_tail_exponent: fewer than 50 samples inside the scaling range");

    std::vector<double> gx, gs;
    for (double g : detail::log_grid(range.lo, hi)) {
        const auto c = detail::count_at_least(v, g);
        if (c == 0) break;
        gx.push_back(g);
        gs.push_back(static_cast<double>(c) / n);
    }
    if (gx.size() < 3) throw data_error("fit_tail_exponent: scaling range spans too few grid points");
    const auto lf = detail::fit_log_ccdf(gx, gs, n);

    TailFit fit;
    fit.exponent = -lf.slope;
    fit.standard_error = lf.slope_stderr;
    fit.range = {range.lo, hi};
    fit.side = side;
    fit.n_in_range = in_range;
    fit.rms_residual = lf.rms;
    return fit;
}

/// Picks the widest scaling range over which local log-log slopes of the
/// CCDF (half-decade windows) stay within +-0.1 of each other, searching
/// between `lo_min` and the point with ten observations beyond it.
inline ScalingRange auto_scaling_range(std::span<const double> samples, TailSide side, double lo_min = 1.0) {
    const auto v = tail_values(samples, side);
    if (v.size() < 100) throw data_error("auto_scaling_range: too few samples");
    const double n = static_cast<double>(v.size());
    const double cap = detail::tail_cap(v, tail_fit_min_exceedances);
    const double lo = std::max(lo_min, v.front() > 0 ? v.front() : lo_min);
    if (!(cap > lo)) throw data_error("auto_scaling_range: no tail beyond the lower bound");

    const auto grid = detail::log_grid(lo, cap);
    std::vector<double> lx, ls;
    for (double g : grid) {
        const auto c = detail::count_at_least(v, g);
        if (c == 0) break;
        lx.push_back(std::log(g));
        ls.push_back(std::log(static_cast<double>(c) / n));
    }
    const std::size_t w = static_cast<std::size_t>(detail::bins_per_decade / 2);
    if (lx.size() <= w + 1) return {lo, cap};

    std::vector<double> slope(lx.size() - w);
    for (std::size_t j = 0; j < slope.size(); ++j) {
        double mx = 0, my = 0;
        for (std::size_t i = j; i <= j + w; ++i) { mx += lx[i]; my += ls[i]; }
        mx /= static_cast<double>(w + 1);
        my /= static_cast<double>(w + 1);
        double num = 0, den = 0;
        for (std::size_t i = j; i <= j + w; ++i) {
            num += (lx[i] - mx) * (ls[i] - my);
            den += (lx[i] - mx) * (lx[i] - mx);
        }
        slope[j] = num / den;
    }

    std::size_t best_a = 0, best_b = 0;
    for (std::size_t a = 0; a < slope.size(); ++a) {
        double mn = slope[a], mxs = slope[a];
        for (std::size_t b = a; b < slope.size(); ++b) {
            mn = std::min(mn, slope[b]);
            mxs = std::max(mxs, slope[b]);
            if (mxs - mn > 0.2) break;
            if (b - a > best_b - best_a) { best_a = a; best_b = b; }
        }
    }
    return {std::exp(lx[best_a]), std::exp(lx[best_b + w])};
}

/// Tail fit over an automatically chosen scaling range.
inline TailFit fit_tail_exponent(std::span<const double> samples, TailSide side, double lo_min = 1.0) {
    return fit_tail_exponent(samples, auto_scaling_range(samples, side, lo_min), side);
}

/// Hill estimator on the k largest magnitudes; cross-check only.
inline double hill_estimator(std::span<const double> samples, std::size_t k, TailSide side = TailSide::absolute) {
    const auto v = tail_values(samples, side);
    if (k < 2 || k >= v.size()) throw data_error("hill_estimator: need 2 <= k < n");
    const double threshold = v[v.size() - k - 1];
    if (!(threshold > 0)) throw data_error("hill_estimator: nonpositive threshold");
    double acc = 0.0;
    for (std::size_t i = v.size() - k; i < v.size(); ++i) acc += std::log(v[i] / threshold);
    return static_cast<double>(k) / acc;
}

inline double kurtosis(std::span<const double> samples) {
    if (samples.size() < 4) throw data_error("kurtosis needs at least 4 samples");
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double m2 = 0.0, m4 = 0.0;
    for (double v : samples) {
        const double d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= static_cast<double>(samples.size());
    m4 /= static_cast<double>(samples.size());
    if (!(m2 > 0.0) || m2 <= 1e-300) throw data_error("kurtosis of a zero-variance sample");
    return m4 / (m2 * m2);
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw data_error("ks_distance of an empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Student density fit
// ---------------------------------------------------------------------------

struct DensityPoint {
    double g;
    double density;
    std::size_t count;
};

/// Empirical density on log-spaced bins (25 per decade) of |g| in
/// [min_abs, max |g|], separately for g > 0 and g < 0. Points are placed at
/// the geometric bin centre, negative side with negative g.
inline std::vector<DensityPoint> log_binned_density(std::span<const double> g, double min_abs = 0.5) {
    std::vector<DensityPoint> out;
    if (g.empty()) return out;
    const double n = static_cast<double>(g.size());
    for (TailSide side : {TailSide::negative, TailSide::positive}) {
        const auto v = tail_values(g, side);
        if (v.empty() || v.back() < min_abs) continue;
        const auto edges = detail::log_grid(min_abs, v.back() * 1.0000001);
        std::vector<DensityPoint> pts;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const double lo = edges[k];
            const double hi = k + 1 < edges.size() ? edges[k + 1] : lo * std::pow(10.0, 1.0 / detail::bins_per_decade);
            const auto c = detail::count_at_least(v, lo) - detail::count_at_least(v, hi);
            const double centre = std::sqrt(lo * hi);
            pts.push_back({side == TailSide::negative ? -centre : centre, static_cast<double>(c) / (n * (hi - lo)), c});
        }
        if (side == TailSide::negative) std::reverse(pts.begin(), pts.end());
        out.insert(out.end(), pts.begin(), pts.end());
    }
    return out;
}

struct StudentFit {
    double alpha = 0.0;
    double L = 0.0;
    double residual = 0.0;  ///< RMS of log-density residuals
    bool converged = false;
    std::size_t bins = 0;
};

namespace detail {

struct StudentLogResidual {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<DensityPoint>* pts;

    int inputs() const { return 2; }
    int values() const { return static_cast<int>(pts->size()); }

    int operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& fvec) const {
        const double alpha = std::exp(std::clamp(theta(0), -5.0, 12.0));
        const double L = std::exp(std::clamp(theta(1), -20.0, 20.0));
        const double log_norm = 0.5 * std::log(L) + 0.5 * alpha * std::log(alpha)
                                - (std::lgamma(0.5) + std::lgamma(0.5 * alpha) - std::lgamma(0.5 * alpha + 0.5));
        for (std::size_t i = 0; i < pts->size(); ++i) {
            const auto& p = (*pts)[i];
            const double model = log_norm - 0.5 * (alpha + 1.0) * std::log(alpha + L * p.g * p.g);
            fvec(static_cast<Eigen::Index>(i)) = std::log(p.density) - model;
        }
        return 0;
    }
};

} // namespace detail

/// Nonlinear least squares of log binned density against the log Student
/// density, over |g| >= 0.5 and bins holding at least 10 observations.
/// Non-convergence is reported in the result rather than thrown.
inline StudentFit fit_student_density(std::span<const double> g, double min_abs = 0.5) {
    if (g.size() < 10'000) throw data_error("fit_student_density needs at least 10^4 samples");
    std::vector<DensityPoint> pts;
    for (const auto& p : log_binned_density(g, min_abs))
        if (p.count >= 10) pts.push_back(p);
    if (pts.size() < 4) throw data_error("fit_student_density: too few populated bins");

    detail::StudentLogResidual f{&pts};
    Eigen::NumericalDiff<detail::StudentLogResidual> nd(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::StudentLogResidual>> lm(nd);
    lm.parameters.maxfev = 4000;
    Eigen::VectorXd theta(2);
    theta << std::log(3.0), std::log(3.0);
    const auto status = lm.minimize(theta);

    StudentFit fit;
    fit.alpha = std::exp(std::clamp(theta(0), -5.0, 12.0));
    fit.L = std::exp(std::clamp(theta(1), -20.0, 20.0));
    Eigen::VectorXd r(pts.size());
    f(theta, r);
    fit.residual = std::sqrt(r.squaredNorm() / static_cast<double>(pts.size()));
    fit.bins = pts.size();
    using namespace Eigen::LevenbergMarquardtSpace;
    fit.converged = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall
                    || status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall;
    fit.converged = fit.converged && theta(0) < 12.0 && std::isfinite(fit.residual);
    return fit;
}

/// Student density with parameters (alpha, L) as used by the fits.
inline double student_density(double g, double alpha, double L) {
    return density(StudentQG{alpha, L}, g);
}

// ---------------------------------------------------------------------------
// Power-law verdict
// ---------------------------------------------------------------------------

struct PowerLawVerdict {
    bool power_law = false;
    double curvature = 0.0;   ///< quadratic coefficient of log S in log x
    double pareto_rss = 0.0;  ///< log S linear in log x
    double exp_rss = 0.0;     ///< log S linear in x
    ScalingRange range{0, 0};
    std::size_t points = 0;
};

/// Decides whether the tail of |samples| is a power law. The tail runs from
/// the 90th percentile of |x| to the point with ten observations beyond it;
/// the CCDF is taken at distinct sample values thinned to 25 per decade.
/// No power law iff the log-log CCDF is concave (steepening local slope)
/// and a straight line in log-log fits worse than one in log-linear.
inline PowerLawVerdict power_law_verdict(std::span<const double> samples) {
    const auto v = tail_values(samples, TailSide::absolute);
    if (v.size() < 200) throw data_error("power_law_verdict: too few samples");
    const double n = static_cast<double>(v.size());
    double lo = v[static_cast<std::size_t>(0.9 * n)];
    const double hi = detail::tail_cap(v, tail_fit_min_exceedances);
    if (!(lo > 0)) lo = *std::upper_bound(v.begin(), v.end(), 0.0);
    if (!(hi > lo)) throw data_error("power_law_verdict: degenerate tail");

    std::vector<double> xs, ls;
    double last_u = -INFINITY;
    const double min_du = std::log(10.0) / detail::bins_per_decade;
    for (const auto& p : ccdf(v)) {
        if (p.value < lo || p.value > hi) continue;
        const double u = std::log(p.value);
        if (u - last_u < min_du) continue;
        last_u = u;
        xs.push_back(p.value);
        ls.push_back(std::log(p.probability));
    }
    if (xs.size() < 4) throw data_error("power_law_verdict: too few distinct tail values");

    const auto k = static_cast<Eigen::Index>(xs.size());
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ls.data(), k);
    auto rss = [&](const Eigen::MatrixXd& X) {
        const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
        return std::pair{(y - X * b).squaredNorm(), b};
    };
    Eigen::MatrixXd Xq(k, 3), Xp(k, 2), Xe(k, 2);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double u = std::log(xs[i]);
        Xq.row(i) << 1.0, u, u * u;
        Xp.row(i) << 1.0, u;
        Xe.row(i) << 1.0, xs[i];
    }
    PowerLawVerdict out;
    out.curvature = rss(Xq).second(2);
    out.pareto_rss = rss(Xp).first;
    out.exp_rss = rss(Xe).first;
    out.range = {lo, hi};
    out.points = xs.size();
    out.power_law = !(out.curvature < 0.0 && out.pareto_rss > out.exp_rss);
    return out;
}

// ---------------------------------------------------------------------------
// alpha_r surface
// ---------------------------------------------------------------------------

struct SurfacePoint {
    double alpha_x;
    double hurst;
    double alpha_r;
};

/// alpha_r = c0 + c1 alpha_x + c2 H_s + c3 H_s alpha_x
struct SurfaceRegression {
    double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
    double r_squared = 0;

    double predict(double alpha_x, double hurst) const { return c0 + c1 * alpha_x + c2 * hurst + c3 * hurst * alpha_x; }
    /// d alpha_r / d H_s at fixed alpha_x.
    double hurst_sensitivity(double alpha_x) const { return c2 + c3 * alpha_x; }
};

inline SurfaceRegression regress_alpha_surface(std::span<const SurfacePoint> grid) {
    if (grid.size() < 8) throw data_error("regress_alpha_surface needs at least 8 grid points");
    const auto k = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd X(k, 4);
    Eigen::VectorXd y(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& p = grid[static_cast<std::size_t>(i)];
        X.row(i) << 1.0, p.alpha_x, p.hurst, p.hurst * p.alpha_x;
        y(i) = p.alpha_r;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < 4) throw data_error("regress_alpha_surface: rank-deficient design");
    const Eigen::VectorXd b = qr.solve(y);
    SurfaceRegression s{b(0), b(1), b(2), b(3), 0.0};
    const double ss_tot = (y.array() - y.mean()).square().sum();
    const double ss_res = (y - X * b).squaredNorm();
    s.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return s;
}

} // namespace mfsim
