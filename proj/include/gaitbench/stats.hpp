#pragma once

#include <span>
#include <vector>

namespace gaitbench {

struct TTestResult {
  double t = 0;
  double p = 1;  // two-sided
  int df = 0;
};

/// Paired-samples t-test on xs - ys. All-zero differences give t = 0, p = 1.
TTestResult paired_t_test(std::span<const double> xs, std::span<const double> ys);

/// mean(d) / sd(d) with the sample standard deviation of d = xs - ys.
double cohens_d_paired(std::span<const double> xs, std::span<const double> ys);

/// Each p multiplied by k, capped at 1.
std::vector<double> bonferroni(std::span<const double> p_values, int k);

/// Two-sided tail probability 2 * P(T > |t|) of Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace gaitbench
