#include <doctest.h>

#include <cmath>
#include <random>

#include "gaitbench/error.hpp"
#include "gaitbench/eval.hpp"
#include "gaitbench/learn.hpp"
#include "gaitbench/preprocess.hpp"

using namespace gaitbench;

namespace {

struct Blobs {
  Eigen::MatrixXd x;
  Labels y;
};

// `classes` Gaussian clusters around well separated centres.
Blobs blobs(int classes, int per_class, int d, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd centres(classes, d);
  for (int c = 0; c < classes; ++c)
    for (int j = 0; j < d; ++j) centres(c, j) = (j % classes == c ? 6.0 : 0.0) + 0.5 * g(rng);
  Blobs b;
  b.x.resize(classes * per_class, d);
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      for (int j = 0; j < d; ++j) b.x(c * per_class + i, j) = centres(c, j) + spread * g(rng);
      b.y.push_back(c);
    }
  return b;
}

double accuracy(const Labels& a, const Labels& b) {
  int hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
  return static_cast<double>(hit) / static_cast<double>(a.size());
}

// Central differences of `loss` around `flat`, compared coordinate-wise with `analytic`.
template <typename Loss>
void check_gradient(Eigen::VectorXd flat, const Eigen::VectorXd& analytic, Loss loss,
                    int stride = 1) {
  const double h = 1e-6;
  double worst = 0;
  for (Eigen::Index i = 0; i < flat.size(); i += stride) {
    const double keep = flat(i);
    flat(i) = keep + h;
    const double up = loss(flat);
    flat(i) = keep - h;
    const double down = loss(flat);
    flat(i) = keep;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic(i)), 1e-3});
    worst = std::max(worst, std::abs(numeric - analytic(i)) / scale);
  }
  CHECK(worst < 1e-4);
}

}  // namespace

TEST_SUITE("learn") {

TEST_CASE("grid presets") {
  const auto paper = HyperGrid::make(GridPreset::paper);
  CHECK(paper.points(ClassifierKind::svm).size() == 81);
  CHECK(paper.svm_cost.front() == std::exp2(-5.0));
  CHECK(paper.svm_cost[1] == std::exp2(-4.75));
  CHECK(paper.svm_cost.back() == std::exp2(15.0));
  CHECK(paper.points(ClassifierKind::rfc).size() == 7 * 5);
  CHECK(paper.points(ClassifierKind::mlp).size() == 7);
  CHECK(paper.mlp_alpha.back() == doctest::Approx(1e-7));
  CHECK(paper.points(ClassifierKind::cnn).size() == 1);

  const auto coarse = HyperGrid::make(GridPreset::coarse);
  CHECK(coarse.points(ClassifierKind::svm).size() == 11);
  CHECK(coarse.points(ClassifierKind::rfc).size() == 9);
  CHECK(coarse.points(ClassifierKind::mlp).size() == 4);
  // the coarse grid is a subset of the paper grid
  for (double c : coarse.svm_cost)
    CHECK(std::find(paper.svm_cost.begin(), paper.svm_cost.end(), c) != paper.svm_cost.end());
  for (int t : coarse.rfc_trees)
    CHECK(std::find(paper.rfc_trees.begin(), paper.rfc_trees.end(), t) != paper.rfc_trees.end());

  CHECK(parse_grid_preset("paper") == GridPreset::paper);
  CHECK_THROWS_AS(parse_grid_preset("fine"), Error);
}

TEST_CASE("training data validation") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 2);
  CHECK_THROWS_AS(check_training_data(x, {0, 0, 0, 0}, 6), Error);
  CHECK_THROWS_AS(check_training_data(x, {0, 1, 0}, 6), Error);
  CHECK_THROWS_AS(check_training_data(x, {0, 1, 0, 9}, 6), Error);
  x(1, 1) = NAN;
  CHECK_THROWS_AS(check_training_data(x, {0, 1, 0, 1}, 6), Error);
}

TEST_CASE("svm separates well separated clusters") {
  const auto b = blobs(6, 12, 10, 0.3, 1);
  const auto m = train_svm(b.x, b.y, 1.0, 0);
  CHECK(accuracy(m.predict(b.x), b.y) == 1.0);
}

TEST_CASE("svm dual objective decreases monotonically to a small gap") {
  const auto b = blobs(6, 13, 30, 2.5, 2);  // overlapping, so many bounded multipliers
  for (double cost : {0.03125, 1.0, 32.0, 32768.0}) {
    const auto m = train_svm(b.x, b.y, cost, 0, kSessions, true);
    for (const auto& s : std::get<SvmParams>(m.params).solves) {
      CHECK(s.converged);
      CHECK(s.gap < 1e-4 * std::max(1.0, s.primal));
      for (std::size_t i = 1; i < s.dual_trace.size(); ++i)
        CHECK(s.dual_trace[i] <= s.dual_trace[i - 1] + 1e-12 * std::abs(s.dual_trace[i - 1]));
    }
  }
}

TEST_CASE("svm dual solution satisfies the box and KKT conditions") {
  const auto b = blobs(2, 20, 5, 2.0, 3);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y(i) = b.y[i] == 0 ? 1.0 : -1.0;
  const Eigen::MatrixXd gram = svm_gram(b.x);
  Eigen::VectorXd alpha;
  const double cost = 2.0;
  const auto info = solve_svm_dual(gram, y, cost, alpha);
  CHECK(info.converged);
  const Eigen::VectorXd margin = y.cwiseProduct(gram * alpha.cwiseProduct(y));
  for (int i = 0; i < 40; ++i) {
    CHECK(alpha(i) >= 0.0);
    CHECK(alpha(i) <= cost);
    if (alpha(i) == 0.0) CHECK(margin(i) >= 1.0 - 1e-3);
    if (alpha(i) == cost) CHECK(margin(i) <= 1.0 + 1e-3);
  }
}

TEST_CASE("warm-started cost path agrees with cold starts") {
  const auto b = blobs(6, 13, 30, 2.5, 4);
  const Eigen::MatrixXd gram = svm_gram(b.x);
  const std::vector<double> costs{0.125, 2.0, 32.0};
  const auto path = train_svm_path(b.x, gram, b.y, costs, 0, kSessions);
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const auto cold = train_svm_from_gram(b.x, gram, b.y, costs[i], 0, kSessions);
    const Eigen::MatrixXd a = path[i].decision(b.x), c = cold.decision(b.x);
    CHECK((a - c).cwiseAbs().maxCoeff() < 1e-2 * std::max(1.0, c.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("random forest fits separable clusters") {
  const auto b = blobs(6, 13, 12, 0.5, 5);
  const auto m = train_rfc(b.x, b.y, 200, 8, 42);
  CHECK(accuracy(m.predict(b.x), b.y) >= 0.95);
}

TEST_CASE("depth-one forests cannot represent xor") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.1);
  Eigen::MatrixXd x(80, 2);
  Labels y;
  for (int i = 0; i < 80; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    x(i, 0) = a + g(rng);
    x(i, 1) = b + g(rng);
    y.push_back(a ^ b);
  }
  // brute force over every stump: best training accuracy
  double best = 0;
  for (int f = 0; f < 2; ++f)
    for (int t = 0; t < 80; ++t) {
      int left[2] = {0, 0}, right[2] = {0, 0};
      for (int i = 0; i < 80; ++i) (x(i, f) <= x(t, f) ? left : right)[y[i]]++;
      best = std::max(best, (std::max(left[0], left[1]) + std::max(right[0], right[1])) / 80.0);
    }
  CHECK(best <= 0.75);
  const auto m = train_rfc(x, y, 200, 1, 7, 2);
  CHECK(accuracy(m.predict(x), y) <= 0.75);
  const auto deep = train_rfc(x, y, 200, 4, 7, 2);
  CHECK(accuracy(deep.predict(x), y) >= 0.95);
}

TEST_CASE("forest truncation equals direct training") {
  const auto b = blobs(6, 13, 20, 2.0, 8);
  const auto big = train_rfc(b.x, b.y, 30, 7, 99);
  for (auto [trees, depth] : {std::pair{30, 7}, {10, 3}, {17, 5}, {1, 1}}) {
    const auto direct = train_rfc(b.x, b.y, trees, depth, 99);
    const auto cut = truncate_forest(big, trees, depth);
    CHECK(direct.decision(b.x) == cut.decision(b.x));
  }
  CHECK_THROWS_AS(truncate_forest(big, 31, 7), Error);
  CHECK_THROWS_AS(truncate_forest(big, 10, 8), Error);
}

TEST_CASE("forest training is reproducible from the seed") {
  const auto b = blobs(6, 13, 20, 2.0, 9);
  const auto a = train_rfc(b.x, b.y, 20, 6, 5);
  const auto c = train_rfc(b.x, b.y, 20, 6, 5);
  CHECK(std::get<ForestParams>(a.params).trees == std::get<ForestParams>(c.params).trees);
  const auto d = train_rfc(b.x, b.y, 20, 6, 6);
  CHECK_FALSE(std::get<ForestParams>(a.params).trees == std::get<ForestParams>(d.params).trees);
}

TEST_CASE("mlp gradient matches finite differences") {
  const auto b = blobs(6, 1, 7, 1.0, 10);
  Eigen::MatrixXd x = b.x.topRows(5);
  const Labels y(b.y.begin(), b.y.begin() + 5);
  auto p = init_mlp(7, 6, 3, 16);
  p.flat += 0.05 * Eigen::VectorXd::Random(p.flat.size());
  for (double alpha : {0.0, 0.1}) {
    Eigen::VectorXd grad;
    mlp_loss(p, x, y, alpha, &grad);
    check_gradient(p.flat, grad, [&](const Eigen::VectorXd& f) {
      DenseParams q = p;
      q.flat = f;
      return mlp_loss(q, x, y, alpha);
    });
  }
}

TEST_CASE("cnn gradient matches finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (CnnShape shape : {CnnShape{6, 11}, CnnShape{1, 28}}) {
    Eigen::MatrixXd x(5, shape.channels * shape.length);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const Labels y{0, 1, 2, 3, 4};
    const auto p = init_cnn(shape, 6, 12);
    Eigen::VectorXd grad;
    cnn_loss(p, x, y, &grad);
    check_gradient(p.flat, grad,
                   [&](const Eigen::VectorXd& f) {
                     CnnParams q = p;
                     q.flat = f;
                     return cnn_loss(q, x, y);
                   },
                   7);
  }
}

TEST_CASE("conv stack output lengths") {
  CHECK(conv_lengths(101) == std::array<int, 3>{51, 26, 9});
  CHECK(conv_lengths(11) == std::array<int, 3>{6, 4, 2});
  CHECK(conv_lengths(1) == std::array<int, 3>{1, 1, 1});
}

TEST_CASE("mlp fits session-separable synthetic waveforms") {
  const auto ds = synthesize_dataset(1, 3)[0];
  CombinationSpec spec;
  spec.time_points = 11;
  const auto fm = build_features(PreparedSubject(ds, true, false), spec);
  const Labels y = session_classes(fm.labels);
  const auto m = train_mlp(fm.values, y, 1e-4, 1);
  CHECK(accuracy(m.predict(fm.values), y) >= 0.9);
}

TEST_CASE("cnn training lowers the loss and beats chance") {
  const auto ds = synthesize_dataset(1, 3)[0];
  CombinationSpec spec;
  spec.time_points = 11;
  const auto fm = build_features(PreparedSubject(ds, true, false), spec);
  const Labels y = session_classes(fm.labels);
  const CnnShape shape{6, 11};
  AdamOptions adam;
  adam.iterations = 300;
  const auto start = init_cnn(shape, 6, 2);
  const auto m = train_cnn(fm.values, y, shape, 2, 6, adam);
  CHECK(cnn_loss(std::get<CnnParams>(m.params), fm.values, y) < cnn_loss(start, fm.values, y));
  CHECK(accuracy(m.predict(fm.values), y) > 0.5);
}

TEST_CASE("grid search: single point, ties and argmax") {
  const auto b = blobs(6, 15, 8, 3.0, 13);
  std::vector<int> train_rows, val_rows;
  for (int i = 0; i < 90; ++i) (i % 15 == 0 ? val_rows : train_rows).push_back(i);

  Hyperparameters h;
  h.C = 0.5;
  const auto one = search_fold(ClassifierKind::svm, b.x, b.y, {}, train_rows, val_rows, {h}, 3);
  const auto direct = train_svm(take_rows(b.x, train_rows), take(b.y, train_rows), 0.5, 3);
  CHECK(one.model.decision(b.x) == direct.decision(b.x));

  const auto tie = search_fold(ClassifierKind::svm, b.x, b.y, {}, train_rows, val_rows, {h, h}, 3);
  CHECK(tie.best_index == 0);
  CHECK(tie.validation_f1[0] == tie.validation_f1[1]);

  const auto grid = HyperGrid::make(GridPreset::coarse);
  for (ClassifierKind kind : {ClassifierKind::svm, ClassifierKind::rfc}) {
    const auto s = search_fold(kind, b.x, b.y, {}, train_rows, val_rows, grid.points(kind), 3);
    for (double f : s.validation_f1) CHECK(s.validation_f1[s.best_index] >= f);
    for (std::size_t i = 0; i < s.best_index; ++i) CHECK(s.validation_f1[i] < s.validation_f1[s.best_index]);
    CHECK(s.best == grid.points(kind)[s.best_index]);
  }

  Hyperparameters r;
  r.n_trees = 25;
  r.max_depth = 5;
  const auto rf = search_fold(ClassifierKind::rfc, b.x, b.y, {}, train_rows, val_rows, {r}, 4);
  const auto rf_direct = train_rfc(take_rows(b.x, train_rows), take(b.y, train_rows), 25, 5, 4);
  CHECK(rf.model.decision(b.x) == rf_direct.decision(b.x));
}

}  // TEST_SUITE
