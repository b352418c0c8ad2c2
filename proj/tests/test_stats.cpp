#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gaitbench/error.hpp"
#include "gaitbench/stats.hpp"

using namespace gaitbench;

namespace {

// Two-sided tail of Student's t by composite Simpson quadrature of the density on [0, |t|].
double t_tail_quadrature(double t, double df) {
  const double c = std::tgamma((df + 1) / 2) / (std::sqrt(df * std::numbers::pi) * std::tgamma(df / 2));
  const auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 200000;
  const double a = std::abs(t), h = a / n;
  double s = pdf(0) + pdf(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return 1 - 2 * s * h / 3;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("paired t on differences 1, 2, 3") {
  const std::vector<double> xs{2, 4, 6}, ys{1, 2, 3};
  const auto r = paired_t_test(xs, ys);
  CHECK(r.t == doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(r.df == 2);
  const double oracle = t_tail_quadrature(r.t, 2);
  CHECK(oracle == doctest::Approx(0.0742).epsilon(1e-3 / 0.0742));
  CHECK(std::abs(r.p - oracle) < 1e-6);
}

TEST_CASE("t tail against quadrature across degrees of freedom") {
  for (double df : {1.0, 3.0, 9.0, 47.0})
    for (double t : {0.1, 1.0, 2.5, 4.0}) CHECK(std::abs(student_t_two_sided(t, df) - t_tail_quadrature(t, df)) < 1e-7);
  CHECK(student_t_two_sided(0.0, 5) == 1.0);
  CHECK(student_t_two_sided(-2.0, 5) == student_t_two_sided(2.0, 5));
}

TEST_CASE("identical samples give t = 0 and p = 1") {
  const std::vector<double> xs{0.3, 0.5, 0.9};
  const auto r = paired_t_test(xs, xs);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
}

TEST_CASE("paired t is antisymmetric") {
  const std::vector<double> xs{0.61, 0.72, 0.55, 0.90, 0.33}, ys{0.58, 0.75, 0.41, 0.80, 0.30};
  const auto a = paired_t_test(xs, ys), b = paired_t_test(ys, xs);
  CHECK(a.t == -b.t);
  CHECK(a.p == b.p);
}

TEST_CASE("paired t rejects bad input") {
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), Error);
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("cohen's d") {
  const std::vector<double> xs{2, 4, 6}, ys{1, 2, 3};
  CHECK(cohens_d_paired(xs, ys) == 2.0);
  CHECK(cohens_d_paired(ys, xs) == -2.0);
  const std::vector<double> shifted{1.5, 2.5, 3.5};
  CHECK_THROWS_AS(cohens_d_paired(shifted, ys), Error);
}

TEST_CASE("bonferroni") {
  CHECK(bonferroni(std::vector<double>{0.01}, 3)[0] == doctest::Approx(0.03));
  CHECK(bonferroni(std::vector<double>{0.5}, 3)[0] == 1.0);
  const std::vector<double> ps{0.2, 0.04, 0.9};
  CHECK(bonferroni(std::vector<double>{0.2}, 1)[0] == 0.2);
  CHECK_THROWS_AS(bonferroni(ps, 2), Error);
}

}  // TEST_SUITE
