#pragma once

#include <span>
#include <string>
#include <vector>

namespace neurodrive {

double accuracy(std::span<const int> labels, std::span<const int> predictions);

/// Mann-Whitney statistic with midranks for tied scores. Throws
/// undefined_metric when only one class is present.
double auc(std::span<const int> labels, std::span<const double> scores);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int df = 0;
  bool degenerate = false;  // zero variance of the differences
};

/// Paired t-test on a - b. Identical inputs give t = 0, p = 1; a constant
/// nonzero difference gives t = +-inf, p = 0; both are flagged degenerate.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double student_t_two_sided_p(double t, double df);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  int df_between = 0;
  int df_within = 0;
  bool degenerate = false;  // zero within-group variance
};

AnovaResult anova_f(const std::vector<std::vector<double>>& groups);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1); 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

/// "95.71 ± 3.95%" for fractions when percent is set, "0.85 ± 0.02" otherwise.
std::string format_mean_std(const MeanStd& m, bool percent, int decimals = 2);

}  // namespace neurodrive
