#include "gaitbench/stats.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <string>

#include "gaitbench/error.hpp"

namespace gaitbench {
namespace {

struct Differences {
  double mean = 0;
  double sd = 0;
  int n = 0;
};

Differences differences(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    fail(ErrorKind::invalid_argument, "paired samples differ in length");
  if (xs.size() < 2) fail(ErrorKind::invalid_argument, "paired samples need n >= 2");
  Differences d;
  d.n = static_cast<int>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) d.mean += xs[i] - ys[i];
  d.mean /= d.n;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = xs[i] - ys[i] - d.mean;
    ss += r * r;
  }
  d.sd = std::sqrt(ss / (d.n - 1));
  return d;
}

}  // namespace

double student_t_two_sided(double t, double df) {
  if (!(df > 0)) fail(ErrorKind::invalid_argument, "degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> xs, std::span<const double> ys) {
  const auto d = differences(xs, ys);
  TTestResult r;
  r.df = d.n - 1;
  if (d.sd == 0) {
    if (d.mean == 0) return r;
    r.t = std::copysign(INFINITY, d.mean);
    r.p = 0;
    return r;
  }
  r.t = d.mean / (d.sd / std::sqrt(static_cast<double>(d.n)));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

double cohens_d_paired(std::span<const double> xs, std::span<const double> ys) {
  const auto d = differences(xs, ys);
  if (d.sd == 0) fail(ErrorKind::numerical, "effect size undefined: differences have zero spread");
  return d.mean / d.sd;
}

std::vector<double> bonferroni(std::span<const double> p_values, int k) {
  if (k < static_cast<int>(p_values.size()) || k < 1)
    fail(ErrorKind::invalid_argument,
         "bonferroni factor " + std::to_string(k) + " is below the number of comparisons");
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) out.push_back(std::min(1.0, p * k));
  return out;
}

}  // namespace gaitbench
