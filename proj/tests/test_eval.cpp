#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "gaitbench/error.hpp"
#include "gaitbench/eval.hpp"
#include "gaitbench/ingest.hpp"

using namespace gaitbench;

namespace {

std::vector<int> session_labels() {
  std::vector<int> s;
  for (int session = 1; session <= 6; ++session)
    for (int t = 0; t < 15; ++t) s.push_back(session);
  return s;
}

// Per-class precision and recall straight from the label pairs.
MetricsRecord brute_force_metrics(const Labels& truth, const Labels& pred, int k) {
  double p_sum = 0, r_sum = 0;
  for (int c = 0; c < k; ++c) {
    int tp = 0, pred_c = 0, true_c = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && pred[i] == c;
      pred_c += pred[i] == c;
      true_c += truth[i] == c;
    }
    p_sum += pred_c ? static_cast<double>(tp) / pred_c : 0.0;
    r_sum += true_c ? static_cast<double>(tp) / true_c : 0.0;
  }
  MetricsRecord m;
  m.precision = p_sum / k;
  m.recall = r_sum / k;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0;
  int hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  m.accuracy = static_cast<double>(hit) / static_cast<double>(truth.size());
  return m;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("folds partition the trials with one trial per session in test and validation") {
  const auto sessions = session_labels();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto folds = stratified_folds(sessions, seed);
    REQUIRE(folds.size() == 15);
    std::vector<int> tested(90, 0);
    for (int f = 0; f < 15; ++f) {
      const auto& s = folds[f];
      CHECK(s.fold_index == f);
      REQUIRE(s.train.size() == 78);
      REQUIRE(s.validation.size() == 6);
      REQUIRE(s.test.size() == 6);
      std::vector<int> all = s.train;
      all.insert(all.end(), s.validation.begin(), s.validation.end());
      all.insert(all.end(), s.test.begin(), s.test.end());
      std::sort(all.begin(), all.end());
      std::vector<int> expect(90);
      std::iota(expect.begin(), expect.end(), 0);
      CHECK(all == expect);
      std::set<int> vs, ts;
      for (int i : s.validation) vs.insert(sessions[i]);
      for (int i : s.test) ts.insert(sessions[i]);
      CHECK(vs.size() == 6);
      CHECK(ts.size() == 6);
      for (int i : s.test) tested[i]++;
      CHECK(folds[(f + 1) % 15].test == s.validation);
    }
    CHECK(std::all_of(tested.begin(), tested.end(), [](int n) { return n == 1; }));
  }
}

TEST_CASE("folds depend on the seed only") {
  const auto sessions = session_labels();
  CHECK(stratified_folds(sessions, 3)[4].test == stratified_folds(sessions, 3)[4].test);
  CHECK(stratified_folds(sessions, 3)[4].test != stratified_folds(sessions, 4)[4].test);
  CHECK_THROWS_AS(stratified_folds(std::vector<int>(89, 1), 0), Error);
  auto skewed = sessions;
  skewed[0] = 2;
  CHECK_THROWS_AS(stratified_folds(skewed, 0), Error);
}

TEST_CASE("metrics match a brute-force oracle") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cls(0, 5);
  for (int round = 0; round < 200; ++round) {
    const int n = 6 + round % 40;
    Labels truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = cls(rng);
      pred[i] = round % 3 == 0 ? truth[i] : cls(rng);
    }
    const auto got = score(truth, pred);
    const auto want = brute_force_metrics(truth, pred, 6);
    CHECK(got.precision == doctest::Approx(want.precision).epsilon(1e-12));
    CHECK(got.recall == doctest::Approx(want.recall).epsilon(1e-12));
    CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
    CHECK(got.accuracy == doctest::Approx(want.accuracy).epsilon(1e-12));
    for (const auto& c : got.counts) CHECK(c.tp + c.fp + c.fn + c.tn == n);
  }
}

TEST_CASE("balanced one-per-class splits: accuracy equals macro recall") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> cls(0, 5);
  const Labels truth{0, 1, 2, 3, 4, 5};
  for (int round = 0; round < 1000; ++round) {
    Labels pred(6);
    for (int& p : pred) p = cls(rng);
    const auto m = score(truth, pred);
    CHECK(std::abs(m.accuracy - m.recall) < 1e-12);
  }
}

TEST_CASE("constant prediction scores chance accuracy") {
  const Labels truth{0, 1, 2, 3, 4, 5};
  for (int c = 0; c < 6; ++c) {
    const auto m = score(truth, Labels(6, c));
    CHECK(std::abs(m.accuracy - 1.0 / 6.0) < 1e-12);
    CHECK(std::abs(m.recall - 1.0 / 6.0) < 1e-12);
    CHECK(m.precision == doctest::Approx(1.0 / 36.0));
  }
}

TEST_CASE("metrics are invariant to relabelling classes") {
  const Labels truth{0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5};
  const Labels pred{0, 1, 1, 3, 5, 5, 0, 2, 2, 3, 4, 0};
  const std::array<int, 6> perm{3, 5, 0, 1, 4, 2};
  Labels t2, p2;
  for (int v : truth) t2.push_back(perm[v]);
  for (int v : pred) p2.push_back(perm[v]);
  const auto a = score(truth, pred), b = score(t2, p2);
  CHECK(a.f1 == doctest::Approx(b.f1).epsilon(1e-15));
  CHECK(a.accuracy == b.accuracy);
}

TEST_CASE("invalid labels are rejected") {
  CHECK_THROWS_AS(score({0, 1}, {0}), Error);
  CHECK_THROWS_AS(score({0, 6}, {0, 1}), Error);
}

TEST_CASE("session classes are zero based") {
  CHECK(session_classes({1, 6, 3}) == Labels{0, 5, 2});
}

TEST_CASE("end-to-end evaluation separates synthetic sessions") {
  const auto ds = synthesize_dataset(1, 8)[0];
  CombinationSpec spec;
  spec.filtering = Filtering::auto_cutoff;
  spec.reduction = Reduction::pca;
  spec.time_points = 101;
  const PreparedSubject prepared(ds);
  const auto r = evaluate_combination(prepared, spec, 11);
  REQUIRE(r.folds.size() == 15);
  double f1 = 0;
  for (const auto& f : r.folds) f1 += f.metrics.f1;
  CHECK(r.mean.f1 == doctest::Approx(f1 / 15));
  CHECK(r.mean.f1 >= 0.9);

  // identical seed: identical outcome
  const auto again = evaluate_combination(prepared, spec, 11);
  CHECK(again.mean.f1 == r.mean.f1);

  EvalOptions foldwise;
  foldwise.pca_foldwise = true;
  CHECK(evaluate_combination(prepared, spec, 11, foldwise).mean.f1 >= 0.85);
}

TEST_CASE("permuted labels fall to chance") {
  const auto ds = synthesize_dataset(1, 8)[0];
  CombinationSpec spec;
  spec.reduction = Reduction::pca;
  EvalOptions opts;
  opts.label_permutation_seed = 3;
  const auto r = evaluate_combination(ds, spec, 11, opts);
  CHECK(std::abs(r.mean.f1 - 1.0 / 6.0) <= 0.10);
}

}  // TEST_SUITE
