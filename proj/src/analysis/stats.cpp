#include "gap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gap::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) fail(Errc::InsufficientData, "mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) fail(Errc::InsufficientData, "standard deviation needs at least 2 samples");
    const double m = mean(xs);
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(Errc::InvalidArgument, "pearson_r needs equal-length inputs");
    if (x.size() < 3) fail(Errc::InsufficientData, "pearson_r needs at least 3 pairs");
    const double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) fail(Errc::UndefinedCorrelation, "constant input has no correlation");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double skewness(std::span<const double> xs) {
    if (xs.size() < 3) fail(Errc::InsufficientData, "skewness needs at least 3 samples");
    const double m = mean(xs);
    double m2 = 0, m3 = 0;
    for (double x : xs) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    const double n = static_cast<double>(xs.size());
    m2 /= n;
    m3 /= n;
    if (m2 == 0) fail(Errc::UndefinedSkewness, "zero variance");
    return m3 / std::pow(m2, 1.5);
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1, qam = a - 1;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0) || !(b > 0)) fail(Errc::InvalidArgument, "incomplete_beta needs a, b > 0");
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0)) fail(Errc::InvalidArgument, "degrees of freedom must be positive");
    const double x = df / (df + t * t);
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
    if (!(p > 0 && p < 1)) fail(Errc::InvalidArgument, "quantile probability must be in (0, 1)");
    if (p == 0.5) return 0.0;
    // Bracket then bisect; the cdf is monotone so this converges unconditionally.
    double lo = -1.0, hi = 1.0;
    while (student_t_cdf(lo, df) > p) lo *= 2.0;
    while (student_t_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double f_sf(double f, double df1, double df2) {
    if (!(df1 > 0) || !(df2 > 0)) fail(Errc::InvalidArgument, "degrees of freedom must be positive");
    if (f <= 0) return 1.0;
    // P(F > f) = I_{df2/(df2 + df1 f)}(df2/2, df1/2)
    return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

MeanCI mean_ci95(std::span<const double> xs) {
    if (xs.size() < 2) fail(Errc::InsufficientData, "a confidence interval needs at least 2 samples");
    MeanCI ci;
    ci.n = xs.size();
    ci.mean = mean(xs);
    const double n = static_cast<double>(xs.size());
    const double half = student_t_quantile(0.975, n - 1) * sample_sd(xs) / std::sqrt(n);
    ci.lower = ci.mean - half;
    ci.upper = ci.mean + half;
    return ci;
}

AnovaResult anova_oneway(const std::map<std::string, std::vector<double>>& groups) {
    if (groups.size() < 2) fail(Errc::InsufficientData, "ANOVA needs at least 2 groups");
    double total = 0;
    std::size_t n_total = 0;
    for (const auto& [name, xs] : groups) {
        if (xs.size() < 2) fail(Errc::InsufficientData, "group '" + name + "' has fewer than 2 values");
        total += std::accumulate(xs.begin(), xs.end(), 0.0);
        n_total += xs.size();
    }
    const double grand = total / static_cast<double>(n_total);
    AnovaResult r;
    for (const auto& [_, xs] : groups) {
        const double m = mean(xs);
        r.ss_between += static_cast<double>(xs.size()) * (m - grand) * (m - grand);
        for (double x : xs) r.ss_within += (x - m) * (x - m);
    }
    r.df_between = static_cast<int>(groups.size()) - 1;
    r.df_within = static_cast<int>(n_total - groups.size());
    const double ss_total = r.ss_between + r.ss_within;
    r.ges = ss_total > 0 ? r.ss_between / ss_total : 0.0;

    const double ms_between = r.ss_between / r.df_between;
    const double ms_within = r.ss_within / r.df_within;
    if (ms_within == 0) {
        // Every group constant: no between variance means F = 0, otherwise separation is perfect.
        r.f_value = ms_between == 0 ? 0.0 : std::numeric_limits<double>::infinity();
        r.p_value = ms_between == 0 ? 1.0 : 0.0;
        return r;
    }
    r.f_value = ms_between / ms_within;
    r.p_value = std::clamp(f_sf(r.f_value, r.df_between, r.df_within), 0.0, 1.0);
    return r;
}

}  // namespace gap::stats
