#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gaitbench/learn.hpp"
#include "gaitbench/model.hpp"
#include "gaitbench/preprocess.hpp"

namespace gaitbench {

/// 15 folds over 90 trials labelled with sessions 1..6 (15 each). Per session a seeded
/// permutation sends its i-th trial to test fold i; fold f validates on the trials that
/// fold (f+1) mod 15 tests, and trains on the remaining 78.
std::vector<FoldSplit> stratified_folds(const std::vector<int>& sessions, std::uint64_t seed);

/// One-vs-rest TP/FP/FN/TN per class. Labels are class indices in [0, n_classes).
std::vector<ClassCounts> confusion(const Labels& truth, const Labels& predicted,
                                   int n_classes = kSessions);

/// Macro-averaged precision and recall; F1 from the two macro averages;
/// accuracy = correct / total.
MetricsRecord metrics(const std::vector<ClassCounts>& counts);

inline MetricsRecord score(const Labels& truth, const Labels& predicted, int n_classes = kSessions) {
  return metrics(confusion(truth, predicted, n_classes));
}

struct EvalOptions {
  GridPreset preset = GridPreset::coarse;
  bool pca_foldwise = false;
  /// Folds are drawn from this seed when set, otherwise from the evaluation seed.
  std::optional<std::uint64_t> fold_seed;
  /// Shuffles the session labels with this seed before evaluation (chance-level control).
  std::optional<std::uint64_t> label_permutation_seed;
};

struct FoldResult {
  int fold_index = 0;
  MetricsRecord metrics;
  Hyperparameters best;
  double seconds = 0;
};

struct CombinationResult {
  std::vector<FoldResult> folds;
  MetricsRecord mean;  // unweighted mean of the per-fold scores
};

/// Session labels 1..6 as class indices 0..5.
Labels session_classes(const std::vector<int>& sessions);

CombinationResult evaluate_combination(const PreparedSubject& subject, const CombinationSpec& spec,
                                       std::uint64_t seed, const EvalOptions& options = {});
CombinationResult evaluate_combination(const SubjectDataset& dataset, const CombinationSpec& spec,
                                       std::uint64_t seed, const EvalOptions& options = {});

}  // namespace gaitbench
