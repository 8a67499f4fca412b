#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gap/error.hpp"

namespace gap::stats {

/// Product-moment correlation. Throws UndefinedCorrelation for a constant input
/// and InsufficientData for fewer than 3 pairs.
double pearson_r(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> xs);

/// Biased Fisher-Pearson coefficient g1 = m3 / m2^1.5.
double skewness(std::span<const double> xs);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);
/// Inverse of student_t_cdf.
double student_t_quantile(double p, double df);

/// Upper-tail probability P(F > f) for F(df1, df2).
double f_sf(double f, double df1, double df2);

struct MeanCI {
    double mean = 0;
    double lower = 0;
    double upper = 0;
    std::size_t n = 0;
};

/// mean +/- t(0.975, n-1) * sd / sqrt(n).
MeanCI mean_ci95(std::span<const double> xs);

struct AnovaResult {
    double f_value = 0;
    int df_between = 0;
    int df_within = 0;
    double p_value = 1;
    double ges = 0;
    double ss_between = 0;
    double ss_within = 0;
};

/// One-way between-subjects ANOVA; ges = SS_between / (SS_between + SS_within).
AnovaResult anova_oneway(const std::map<std::string, std::vector<double>>& groups);

}  // namespace gap::stats
