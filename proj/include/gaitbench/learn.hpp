#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gaitbench/model.hpp"

namespace gaitbench {

using Labels = std::vector<int>;  // class indices 0..n_classes-1

struct Hyperparameters {
  double C = 1.0;       // svm
  int n_trees = 200;    // rfc
  int max_depth = 8;    // rfc
  double alpha = 1e-4;  // mlp
  bool operator==(const Hyperparameters&) const = default;
};

/// Compact text form of the hyperparameters that matter for `kind`.
std::string describe(ClassifierKind kind, const Hyperparameters& h);

enum class GridPreset { paper, coarse };
GridPreset parse_grid_preset(std::string_view s);

struct HyperGrid {
  GridPreset preset = GridPreset::coarse;
  std::vector<double> svm_cost;
  std::vector<int> rfc_trees;
  std::vector<int> rfc_depths;
  std::vector<double> mlp_alpha;

  static HyperGrid make(GridPreset preset);
  /// Grid points in search order; the CNN has a single fixed point.
  std::vector<Hyperparameters> points(ClassifierKind kind) const;
};

/// Input geometry for the CNN: channels x length, row-major per sample
/// (feature index = channel * length + position).
struct CnnShape {
  int channels = 1;
  int length = 1;
};

// ---------------------------------------------------------------------------
// Parameters of the four model families

struct SvmSolveInfo {
  int sweeps = 0;
  double primal = 0;
  double dual = 0;  // minimised form: 0.5 a'Qa - sum(a)
  double gap = 0;
  bool converged = false;
  std::vector<double> dual_trace;  // objective after each sweep, when recorded
};

struct SvmParams {
  Eigen::MatrixXd weights;  // one row per class
  Eigen::VectorXd bias;
  std::vector<SvmSolveInfo> solves;
};

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0;
  int left = -1, right = -1;
  int depth = 0;
  int majority = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int predict(const double* row, int max_depth) const;
  bool operator==(const DecisionTree&) const;
};

struct ForestParams {
  std::vector<DecisionTree> trees;
  int max_depth = 8;
};

struct DenseParams {
  std::vector<int> layer_sizes;  // mlp: {inputs, hidden, classes}
  Eigen::VectorXd flat;
};

struct CnnParams {
  CnnShape shape;
  int classes = kSessions;
  Eigen::VectorXd flat;
};

class TrainedModel {
 public:
  ClassifierKind kind = ClassifierKind::svm;
  Hyperparameters hyper;
  std::uint64_t seed = 0;
  int n_classes = kSessions;
  std::variant<SvmParams, ForestParams, DenseParams, CnnParams> params;

  /// n_samples x n_classes scores; larger is more likely.
  Eigen::MatrixXd decision(const Eigen::MatrixXd& x) const;
  /// Argmax of the scores, ties to the lowest class index.
  Labels predict(const Eigen::MatrixXd& x) const;
};

/// Throws unless rows and labels agree, features are finite and >= 2 classes occur.
void check_training_data(const Eigen::MatrixXd& x, const Labels& y, int n_classes);

// ---------------------------------------------------------------------------
// SVM

/// Dual coordinate descent for min 0.5 a'Qa - sum(a), 0 <= a <= C, Q = (y y') .* gram.
/// `gram` must already include the bias term. Stops once the duality gap is at most
/// tol * max(1, primal). A correctly sized `alpha` is used (clipped) as the starting point.
SvmSolveInfo solve_svm_dual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double cost,
                            Eigen::VectorXd& alpha, double tol = 1e-4, int max_sweeps = 20000,
                            bool record_trace = false);

/// Gram matrix of the rows with a constant bias feature appended.
Eigen::MatrixXd svm_gram(const Eigen::MatrixXd& x);

TrainedModel train_svm(const Eigen::MatrixXd& x, const Labels& y, double cost, std::uint64_t seed,
                       int n_classes = kSessions, bool record_trace = false);
TrainedModel train_svm_from_gram(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gram,
                                 const Labels& y, double cost, std::uint64_t seed, int n_classes);
/// One model per cost, each solve warm-started from the previous cost's dual solution.
std::vector<TrainedModel> train_svm_path(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gram,
                                         const Labels& y, const std::vector<double>& costs,
                                         std::uint64_t seed, int n_classes);

// ---------------------------------------------------------------------------
// Random forest

TrainedModel train_rfc(const Eigen::MatrixXd& x, const Labels& y, int n_trees, int max_depth,
                       std::uint64_t seed, int n_classes = kSessions);

/// Forest restricted to its first `n_trees` trees, each cut at `max_depth`. Because trees
/// and nodes draw randomness from (seed, tree, node) only, this equals training directly
/// with those settings.
TrainedModel truncate_forest(const TrainedModel& forest, int n_trees, int max_depth);

namespace kernels {
/// Grows trees [0, n_trees); tree i uses the stream derived from (seed, i).
std::vector<DecisionTree> grow_trees_serial(const Eigen::MatrixXd& x, const Labels& y,
                                            int n_classes, int n_trees, int max_depth,
                                            std::uint64_t seed);
std::vector<DecisionTree> grow_trees_parallel(const Eigen::MatrixXd& x, const Labels& y,
                                              int n_classes, int n_trees, int max_depth,
                                              std::uint64_t seed);
}  // namespace kernels

// ---------------------------------------------------------------------------
// Neural networks

struct AdamOptions {
  int iterations = 2000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline constexpr int kHiddenUnits = 64;

DenseParams init_mlp(int inputs, int n_classes, std::uint64_t seed, int hidden = kHiddenUnits);

/// Mean cross-entropy + alpha / (2 n) * sum of squared weights (biases excluded).
double mlp_loss(const DenseParams& p, const Eigen::MatrixXd& x, const Labels& y, double alpha,
                Eigen::VectorXd* gradient = nullptr);

Eigen::MatrixXd mlp_probabilities(const DenseParams& p, const Eigen::MatrixXd& x);

TrainedModel train_mlp(const Eigen::MatrixXd& x, const Labels& y, double alpha, std::uint64_t seed,
                       int n_classes = kSessions, const AdamOptions& adam = {});

struct ConvSpec {
  int filters, kernel, stride, padding;
};
inline constexpr std::array<ConvSpec, 3> kConvStack{{{24, 8, 2, 4}, {32, 8, 2, 4}, {48, 6, 3, 3}}};

/// Output length of each conv layer for an input of `length`: floor((L + 2p - k) / s) + 1.
std::array<int, 3> conv_lengths(int length);

CnnParams init_cnn(CnnShape shape, int n_classes, std::uint64_t seed);

/// Mean cross-entropy of the conv stack.
double cnn_loss(const CnnParams& p, const Eigen::MatrixXd& x, const Labels& y,
                Eigen::VectorXd* gradient = nullptr);

Eigen::MatrixXd cnn_probabilities(const CnnParams& p, const Eigen::MatrixXd& x);

TrainedModel train_cnn(const Eigen::MatrixXd& x, const Labels& y, CnnShape shape,
                       std::uint64_t seed, int n_classes = kSessions, const AdamOptions& adam = {});

// ---------------------------------------------------------------------------
// Dispatch and search

struct TrainingInput {
  const Eigen::MatrixXd* x = nullptr;
  const Labels* y = nullptr;
  CnnShape shape;
  int n_classes = kSessions;
};

TrainedModel train(ClassifierKind kind, const TrainingInput& input, const Hyperparameters& h,
                   std::uint64_t seed);

struct FoldSearch {
  int fold_index = 0;
  Hyperparameters best;
  std::size_t best_index = 0;
  std::vector<double> validation_f1;  // per grid point, grid order
  TrainedModel model;                 // trained on the fold's training rows with `best`
};

/// Trains every grid point on `train_rows`, scores macro F1 on `validation_rows`, and keeps
/// the first best point. The winning model is returned directly: retraining on the same rows
/// and seed reproduces it (exactly for the forest and networks; for the SVM, whose costs are
/// solved as a warm-started path, to within the solver's duality-gap tolerance).
FoldSearch search_fold(ClassifierKind kind, const Eigen::MatrixXd& x, const Labels& y,
                       CnnShape shape, const std::vector<int>& train_rows,
                       const std::vector<int>& validation_rows,
                       const std::vector<Hyperparameters>& grid, std::uint64_t seed,
                       int n_classes = kSessions);

/// Rows of `x` selected by `rows`, in order.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<int>& rows);
Labels take(const Labels& y, const std::vector<int>& rows);

}  // namespace gaitbench
