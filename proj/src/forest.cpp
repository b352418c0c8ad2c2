#include <algorithm>
#include <cmath>
#include <random>

#include "gaitbench/error.hpp"
#include "gaitbench/learn.hpp"
#include "gaitbench/parallel.hpp"
#include "gaitbench/seed.hpp"

namespace gaitbench {

int DecisionTree::predict(const double* row, int max_depth) const {
  int i = 0;
  while (nodes[i].feature >= 0 && nodes[i].depth < max_depth)
    i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].majority;
}

bool DecisionTree::operator==(const DecisionTree& o) const {
  if (nodes.size() != o.nodes.size()) return false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto &a = nodes[i], &b = o.nodes[i];
    if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left ||
        a.right != b.right || a.depth != b.depth || a.majority != b.majority)
      return false;
  }
  return true;
}

namespace {

int argmax_lowest(const std::vector<int>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double s = 0;
  for (int c : counts) s += static_cast<double>(c) * c;
  return 1.0 - s / (static_cast<double>(total) * total);
}

// Floyd's algorithm: m distinct features out of d, in draw order.
std::vector<int> sample_features(int d, int m, std::mt19937_64& rng) {
  std::vector<int> chosen;
  chosen.reserve(m);
  for (int j = d - m; j < d; ++j) {
    std::uniform_int_distribution<int> pick(0, j);
    const int t = pick(rng);
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
      chosen.push_back(t);
    else
      chosen.push_back(j);
  }
  return chosen;
}

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, const Labels& y, int n_classes, int max_depth,
             std::uint64_t tree_seed)
      : x_(x), y_(y), n_classes_(n_classes), max_depth_(max_depth), seed_(tree_seed) {
    const int d = static_cast<int>(x.cols());
    features_per_split_ = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
  }

  DecisionTree grow() {
    std::mt19937_64 rng(mix_seed({seed_, 0}));
    const int n = static_cast<int>(x_.rows());
    std::uniform_int_distribution<int> draw(0, n - 1);
    std::vector<int> sample(n);
    for (int& s : sample) s = draw(rng);
    tree_.nodes.clear();
    tree_.nodes.push_back({});
    split(0, 1, sample, 0);
    return std::move(tree_);
  }

 private:
  // `path` is the heap index of the node (root 1, children 2p and 2p+1); it seeds the
  // node's feature draw, so a node's split does not depend on the depth limit.
  void split(int node, std::uint64_t path, const std::vector<int>& rows, int depth) {
    std::vector<int> counts(n_classes_, 0);
    for (int r : rows) ++counts[y_[r]];
    auto& self = tree_.nodes[node];
    self.depth = depth;
    self.majority = argmax_lowest(counts);
    const int total = static_cast<int>(rows.size());
    if (depth >= max_depth_ || total < 2 || counts[self.majority] == total) return;

    std::mt19937_64 rng(mix_seed({seed_, path}));
    const auto candidates = sample_features(static_cast<int>(x_.cols()), features_per_split_, rng);

    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0;
    std::vector<std::pair<double, int>> column(rows.size());
    std::vector<int> left(n_classes_), right(n_classes_);
    for (int f : candidates) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], f), y_[rows[i]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      std::fill(left.begin(), left.end(), 0);
      right = counts;
      for (int i = 0; i + 1 < total; ++i) {
        ++left[column[i].second];
        --right[column[i].second];
        if (column[i].first == column[i + 1].first) continue;
        const int nl = i + 1, nr = total - nl;
        const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = f;
          best_threshold = 0.5 * (column[i].first + column[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return;

    std::vector<int> lrows, rrows;
    for (int r : rows) (x_(r, best_feature) <= best_threshold ? lrows : rrows).push_back(r);
    const int l = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes.push_back({});
    auto& parent = tree_.nodes[node];
    parent.feature = best_feature;
    parent.threshold = best_threshold;
    parent.left = l;
    parent.right = l + 1;
    split(l, 2 * path, lrows, depth + 1);
    split(l + 1, 2 * path + 1, rrows, depth + 1);
  }

  const Eigen::MatrixXd& x_;
  const Labels& y_;
  int n_classes_;
  int max_depth_;
  std::uint64_t seed_;
  int features_per_split_ = 1;
  DecisionTree tree_;
};

DecisionTree grow_tree(const Eigen::MatrixXd& x, const Labels& y, int n_classes, int max_depth,
                       std::uint64_t seed, int index) {
  return TreeGrower(x, y, n_classes, max_depth, mix_seed({seed, static_cast<std::uint64_t>(index)}))
      .grow();
}

}  // namespace

namespace kernels {

std::vector<DecisionTree> grow_trees_serial(const Eigen::MatrixXd& x, const Labels& y,
                                            int n_classes, int n_trees, int max_depth,
                                            std::uint64_t seed) {
  std::vector<DecisionTree> trees(static_cast<std::size_t>(n_trees));
  for (int i = 0; i < n_trees; ++i) trees[i] = grow_tree(x, y, n_classes, max_depth, seed, i);
  return trees;
}

std::vector<DecisionTree> grow_trees_parallel(const Eigen::MatrixXd& x, const Labels& y,
                                              int n_classes, int n_trees, int max_depth,
                                              std::uint64_t seed) {
  std::vector<DecisionTree> trees(static_cast<std::size_t>(n_trees));
  omp_for_each(n_trees, 0,
               [&](long i) { trees[i] = grow_tree(x, y, n_classes, max_depth, seed, static_cast<int>(i)); });
  return trees;
}

}  // namespace kernels

TrainedModel train_rfc(const Eigen::MatrixXd& x, const Labels& y, int n_trees, int max_depth,
                       std::uint64_t seed, int n_classes) {
  check_training_data(x, y, n_classes);
  if (n_trees < 1) fail(ErrorKind::invalid_argument, "forest needs at least one tree");
  if (max_depth < 1) fail(ErrorKind::invalid_argument, "tree depth must be at least 1");
  ForestParams p;
  p.max_depth = max_depth;
  p.trees = kernels::grow_trees_parallel(x, y, n_classes, n_trees, max_depth, seed);
  TrainedModel m;
  m.kind = ClassifierKind::rfc;
  m.hyper.n_trees = n_trees;
  m.hyper.max_depth = max_depth;
  m.seed = seed;
  m.n_classes = n_classes;
  m.params = std::move(p);
  return m;
}

TrainedModel truncate_forest(const TrainedModel& forest, int n_trees, int max_depth) {
  const auto& p = std::get<ForestParams>(forest.params);
  if (n_trees < 1 || n_trees > static_cast<int>(p.trees.size()) || max_depth < 1 ||
      max_depth > p.max_depth)
    fail(ErrorKind::invalid_argument, "forest truncation outside the trained size");
  ForestParams q;
  q.max_depth = max_depth;
  q.trees.assign(p.trees.begin(), p.trees.begin() + n_trees);
  TrainedModel m = forest;
  m.hyper.n_trees = n_trees;
  m.hyper.max_depth = max_depth;
  m.params = std::move(q);
  return m;
}

}  // namespace gaitbench
