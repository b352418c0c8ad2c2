#include <cmath>
#include <sstream>

#include "gaitbench/error.hpp"
#include "gaitbench/eval.hpp"
#include "gaitbench/learn.hpp"

namespace gaitbench {

void check_training_data(const Eigen::MatrixXd& x, const Labels& y, int n_classes) {
  if (x.rows() == 0 || x.cols() == 0) fail(ErrorKind::invalid_data, "empty training matrix");
  if (static_cast<Eigen::Index>(y.size()) != x.rows())
    fail(ErrorKind::invalid_argument, "training rows and labels differ in count");
  if (!x.allFinite()) fail(ErrorKind::numerical, "training features contain NaN or Inf");
  if (n_classes < 2) fail(ErrorKind::invalid_argument, "at least two classes are required");
  std::vector<char> seen(static_cast<std::size_t>(n_classes), 0);
  int distinct = 0;
  for (int c : y) {
    if (c < 0 || c >= n_classes) fail(ErrorKind::invalid_argument, "label out of range");
    if (!seen[c]) {
      seen[c] = 1;
      ++distinct;
    }
  }
  if (distinct < 2) fail(ErrorKind::invalid_data, "training labels contain a single class");
}

std::string describe(ClassifierKind kind, const Hyperparameters& h) {
  std::ostringstream os;
  switch (kind) {
    case ClassifierKind::svm: os << "C=" << h.C; break;
    case ClassifierKind::rfc: os << "trees=" << h.n_trees << " depth=" << h.max_depth; break;
    case ClassifierKind::mlp: os << "alpha=" << h.alpha; break;
    case ClassifierKind::cnn: os << "fixed"; break;
  }
  return os.str();
}

GridPreset parse_grid_preset(std::string_view s) {
  if (s == "paper") return GridPreset::paper;
  if (s == "coarse") return GridPreset::coarse;
  fail(ErrorKind::invalid_argument, "unknown grid preset '" + std::string(s) + "'");
}

HyperGrid HyperGrid::make(GridPreset preset) {
  HyperGrid g;
  g.preset = preset;
  if (preset == GridPreset::paper) {
    for (int i = 0; i <= 80; ++i) g.svm_cost.push_back(std::exp2(-5.0 + 0.25 * i));
    for (int t = 200; t <= 350; t += 25) g.rfc_trees.push_back(t);
    for (int d = 4; d <= 8; ++d) g.rfc_depths.push_back(d);
    for (int e = 1; e <= 7; ++e) g.mlp_alpha.push_back(std::pow(10.0, -e));
  } else {
    for (int e = -5; e <= 15; e += 2) g.svm_cost.push_back(std::exp2(e));
    g.rfc_trees = {200, 275, 350};
    g.rfc_depths = {4, 6, 8};
    for (int e = 1; e <= 7; e += 2) g.mlp_alpha.push_back(std::pow(10.0, -e));
  }
  return g;
}

std::vector<Hyperparameters> HyperGrid::points(ClassifierKind kind) const {
  std::vector<Hyperparameters> out;
  Hyperparameters h;
  switch (kind) {
    case ClassifierKind::svm:
      for (double c : svm_cost) {
        h.C = c;
        out.push_back(h);
      }
      break;
    case ClassifierKind::rfc:
      for (int t : rfc_trees)
        for (int d : rfc_depths) {
          h.n_trees = t;
          h.max_depth = d;
          out.push_back(h);
        }
      break;
    case ClassifierKind::mlp:
      for (double a : mlp_alpha) {
        h.alpha = a;
        out.push_back(h);
      }
      break;
    case ClassifierKind::cnn: out.push_back(h); break;
  }
  return out;
}

Eigen::MatrixXd TrainedModel::decision(const Eigen::MatrixXd& x) const {
  switch (kind) {
    case ClassifierKind::svm: {
      const auto& p = std::get<SvmParams>(params);
      if (x.cols() != p.weights.cols())
        fail(ErrorKind::invalid_argument, "feature width does not match the model");
      Eigen::MatrixXd s = x * p.weights.transpose();
      s.rowwise() += p.bias.transpose();
      return s;
    }
    case ClassifierKind::rfc: {
      const auto& p = std::get<ForestParams>(params);
      Eigen::MatrixXd votes = Eigen::MatrixXd::Zero(x.rows(), n_classes);
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (const auto& t : p.trees) votes(i, t.predict(rows.row(i).data(), p.max_depth)) += 1.0;
      return votes / static_cast<double>(p.trees.size());
    }
    case ClassifierKind::mlp: return mlp_probabilities(std::get<DenseParams>(params), x);
    case ClassifierKind::cnn: return cnn_probabilities(std::get<CnnParams>(params), x);
  }
  fail(ErrorKind::unsupported, "unknown classifier kind");
}

Labels TrainedModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd s = decision(x);
  Labels out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c)
      if (s(i, c) > s(i, best)) best = static_cast<int>(c);
    out[i] = best;
  }
  return out;
}

TrainedModel train(ClassifierKind kind, const TrainingInput& in, const Hyperparameters& h,
                   std::uint64_t seed) {
  if (!in.x || !in.y) fail(ErrorKind::invalid_argument, "training input is incomplete");
  TrainedModel m;
  switch (kind) {
    case ClassifierKind::svm: m = train_svm(*in.x, *in.y, h.C, seed, in.n_classes); break;
    case ClassifierKind::rfc:
      m = train_rfc(*in.x, *in.y, h.n_trees, h.max_depth, seed, in.n_classes);
      break;
    case ClassifierKind::mlp: m = train_mlp(*in.x, *in.y, h.alpha, seed, in.n_classes); break;
    case ClassifierKind::cnn: m = train_cnn(*in.x, *in.y, in.shape, seed, in.n_classes); break;
  }
  m.hyper = h;
  return m;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) fail(ErrorKind::invalid_argument, "row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return out;
}

Labels take(const Labels& y, const std::vector<int>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (int r : rows) {
    if (r < 0 || r >= static_cast<int>(y.size())) fail(ErrorKind::invalid_argument, "row index out of range");
    out.push_back(y[r]);
  }
  return out;
}

FoldSearch search_fold(ClassifierKind kind, const Eigen::MatrixXd& x, const Labels& y,
                       CnnShape shape, const std::vector<int>& train_rows,
                       const std::vector<int>& validation_rows,
                       const std::vector<Hyperparameters>& grid, std::uint64_t seed,
                       int n_classes) {
  if (grid.empty()) fail(ErrorKind::invalid_argument, "empty hyperparameter grid");
  const Eigen::MatrixXd xt = take_rows(x, train_rows);
  const Labels yt = take(y, train_rows);
  const Eigen::MatrixXd xv = take_rows(x, validation_rows);
  const Labels yv = take(y, validation_rows);
  check_training_data(xt, yt, n_classes);

  FoldSearch out;
  out.validation_f1.reserve(grid.size());
  double best_f1 = -1;
  auto consider = [&](std::size_t i, TrainedModel&& m) {
    const double f1 = score(yv, m.predict(xv), n_classes).f1;
    out.validation_f1.push_back(f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      out.best_index = i;
      out.best = grid[i];
      out.model = std::move(m);
    }
  };

  if (kind == ClassifierKind::svm) {
    std::vector<double> costs;
    for (const auto& h : grid) costs.push_back(h.C);
    auto models = train_svm_path(xt, svm_gram(xt), yt, costs, seed, n_classes);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      models[i].hyper = grid[i];
      consider(i, std::move(models[i]));
    }
  } else if (kind == ClassifierKind::rfc) {
    int trees = 0, depth = 0;
    for (const auto& h : grid) {
      trees = std::max(trees, h.n_trees);
      depth = std::max(depth, h.max_depth);
    }
    const TrainedModel full = train_rfc(xt, yt, trees, depth, seed, n_classes);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      TrainedModel m = truncate_forest(full, grid[i].n_trees, grid[i].max_depth);
      m.hyper = grid[i];
      consider(i, std::move(m));
    }
  } else {
    const TrainingInput in{&xt, &yt, shape, n_classes};
    for (std::size_t i = 0; i < grid.size(); ++i) consider(i, train(kind, in, grid[i], seed));
  }
  return out;
}

}  // namespace gaitbench
