#include <doctest.h>

#include <cmath>
#include <omp.h>
#include <random>

#include "gaitbench/ingest.hpp"
#include "gaitbench/kernels.hpp"
#include "gaitbench/learn.hpp"
#include "gaitbench/preprocess.hpp"

using namespace gaitbench;

namespace {

std::vector<double> noisy_tone(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.2);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(2 * M_PI * 4.0 * i / 1000.0) + g(rng);
  return x;
}

struct Threads {
  explicit Threads(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~Threads() { omp_set_num_threads(saved); }
  int saved;
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("cut-off scores: parallel equals serial") {
  const auto x = noisy_tone(700, 1);
  const auto candidates = cutoff_candidates(1000.0);
  for (int threads : {1, 2, 5}) {
    Threads t(threads);
    CHECK(kernels::cutoff_scores_parallel(x, 1000.0, candidates) ==
          kernels::cutoff_scores_serial(x, 1000.0, candidates));
  }
}

TEST_CASE("auto filter: parallel equals serial") {
  std::vector<std::vector<double>> series;
  for (int i = 0; i < 9; ++i) series.push_back(noisy_tone(400 + 37 * i, i));
  const auto serial = kernels::auto_filter_serial(series, 1000.0);
  Threads t(4);
  const auto parallel = kernels::auto_filter_parallel(series, 1000.0);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].cutoff == parallel[i].cutoff);
    CHECK(serial[i].values == parallel[i].values);
    CHECK(serial[i].cutoff == optimal_cutoff(series[i], 1000.0));
  }
}

TEST_CASE("tree growing: parallel equals serial") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(60, 8);
  Labels y;
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 8; ++j) x(i, j) = g(rng) + (j == i % 6 ? 2.0 : 0.0);
    y.push_back(i % 6);
  }
  const auto serial = kernels::grow_trees_serial(x, y, 6, 24, 6, 77);
  for (int threads : {2, 3}) {
    Threads t(threads);
    CHECK(kernels::grow_trees_parallel(x, y, 6, 24, 6, 77) == serial);
  }
}

TEST_CASE("prepared subjects do not depend on the parallel path") {
  const auto ds = synthesize_dataset(1, 4)[0];
  Threads t(3);
  const PreparedSubject a(ds, false), b(ds, true);
  CHECK(a.cutoffs() == b.cutoffs());
  const auto& fa = a.signals(Filtering::auto_cutoff);
  const auto& fb = b.signals(Filtering::auto_cutoff);
  REQUIRE(fa.size() == fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
}

}  // TEST_SUITE
