#include "gaitbench/eval.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "gaitbench/error.hpp"
#include "gaitbench/seed.hpp"

namespace gaitbench {

std::vector<FoldSplit> stratified_folds(const std::vector<int>& sessions, std::uint64_t seed) {
  std::array<std::vector<int>, kSessions> members;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const int s = sessions[i];
    if (s < 1 || s > kSessions)
      fail(ErrorKind::invalid_data, "session label " + std::to_string(s) + " out of range");
    members[s - 1].push_back(static_cast<int>(i));
  }
  for (int s = 0; s < kSessions; ++s) {
    if (members[s].size() != kTrialsPerSession)
      fail(ErrorKind::invalid_data, "session " + std::to_string(s + 1) + " has " +
                                        std::to_string(members[s].size()) +
                                        " trials; stratified folds need 6 x 15");
  }

  // assignment[s][f] = trial of session s tested in fold f
  std::array<std::vector<int>, kSessions> assignment;
  std::mt19937_64 rng(mix_seed({seed, 0x666f6c64}));
  for (int s = 0; s < kSessions; ++s) {
    assignment[s] = members[s];
    std::shuffle(assignment[s].begin(), assignment[s].end(), rng);
  }

  std::vector<FoldSplit> folds(kTrialsPerSession);
  for (int f = 0; f < kTrialsPerSession; ++f) {
    auto& fold = folds[f];
    fold.fold_index = f;
    const int v = (f + 1) % kTrialsPerSession;
    std::vector<char> role(sessions.size(), 0);
    for (int s = 0; s < kSessions; ++s) {
      fold.test.push_back(assignment[s][f]);
      fold.validation.push_back(assignment[s][v]);
      role[assignment[s][f]] = 1;
      role[assignment[s][v]] = 2;
    }
    for (std::size_t i = 0; i < sessions.size(); ++i)
      if (role[i] == 0) fold.train.push_back(static_cast<int>(i));
  }
  return folds;
}

std::vector<ClassCounts> confusion(const Labels& truth, const Labels& predicted, int n_classes) {
  if (truth.size() != predicted.size())
    fail(ErrorKind::invalid_argument, "confusion: label vectors differ in length");
  std::vector<ClassCounts> counts(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      fail(ErrorKind::invalid_argument, "confusion: label out of range");
    if (t == p) {
      ++counts[t].tp;
    } else {
      ++counts[p].fp;
      ++counts[t].fn;
    }
  }
  const long total = static_cast<long>(truth.size());
  for (auto& c : counts) c.tn = total - c.tp - c.fp - c.fn;
  return counts;
}

MetricsRecord metrics(const std::vector<ClassCounts>& counts) {
  if (counts.empty()) fail(ErrorKind::invalid_argument, "metrics: no classes");
  const long total = counts[0].tp + counts[0].fp + counts[0].fn + counts[0].tn;
  long correct = 0, fp_sum = 0, fn_sum = 0;
  for (const auto& c : counts) {
    if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0 || c.tp + c.fp + c.fn + c.tn != total)
      fail(ErrorKind::invalid_argument, "metrics: inconsistent confusion counts");
    correct += c.tp;
    fp_sum += c.fp;
    fn_sum += c.fn;
  }
  if (fp_sum != fn_sum || correct + fp_sum != total)
    fail(ErrorKind::invalid_argument, "metrics: inconsistent confusion counts");

  MetricsRecord m;
  m.counts = counts;
  double precision = 0, recall = 0;
  for (const auto& c : counts) {
    precision += c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    recall += c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  }
  const double k = static_cast<double>(counts.size());
  m.precision = precision / k;
  m.recall = recall / k;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return m;
}

Labels session_classes(const std::vector<int>& sessions) {
  Labels out(sessions.size());
  std::transform(sessions.begin(), sessions.end(), out.begin(), [](int s) { return s - 1; });
  return out;
}

CombinationResult evaluate_combination(const PreparedSubject& subject, const CombinationSpec& spec,
                                       std::uint64_t seed, const EvalOptions& options) {
  const auto& ds = subject.dataset();
  std::vector<int> sessions = ds.labels();
  if (options.label_permutation_seed) {
    std::mt19937_64 rng(mix_seed({*options.label_permutation_seed, 0x7065726d}));
    std::shuffle(sessions.begin(), sessions.end(), rng);
  }
  const auto folds = stratified_folds(sessions, options.fold_seed.value_or(seed));
  const Labels classes = session_classes(sessions);
  const HyperGrid grid = HyperGrid::make(options.preset);
  const auto points = grid.points(spec.classifier);

  std::optional<FeatureMatrix> shared;
  if (!(options.pca_foldwise && spec.reduction == Reduction::pca))
    shared = build_features(subject, spec);

  CombinationResult result;
  for (const auto& fold : folds) {
    const auto start = std::chrono::steady_clock::now();
    FeatureMatrix local;
    const FeatureMatrix* fm = nullptr;
    if (shared) {
      fm = &*shared;
    } else {
      FeatureOptions fo;
      fo.pca_fit_rows = fold.train;
      local = build_features(subject, spec, fo);
      fm = &local;
    }
    CnnShape shape;
    if (fm->layout.reduction == Reduction::tc) {
      shape = {fm->layout.channels, fm->layout.time_points};
    } else {
      shape = {1, static_cast<int>(fm->values.cols())};
    }
    const std::uint64_t fold_seed = mix_seed({seed, static_cast<std::uint64_t>(fold.fold_index)});
    FoldSearch search;
    try {
      search = search_fold(spec.classifier, fm->values, classes, shape, fold.train,
                           fold.validation, points, fold_seed);
    } catch (const Error& e) {
      fail(e.kind(), ds.subject_id + " " + spec.key() + " fold " +
                         std::to_string(fold.fold_index) + ": " + e.what());
    }
    const Labels predicted = search.model.predict(take_rows(fm->values, fold.test));
    FoldResult fr;
    fr.fold_index = fold.fold_index;
    fr.metrics = score(take(classes, fold.test), predicted);
    fr.best = search.best;
    fr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.folds.push_back(std::move(fr));
  }

  auto& mean = result.mean;
  mean.counts.assign(kSessions, {});
  for (const auto& f : result.folds) {
    mean.accuracy += f.metrics.accuracy;
    mean.precision += f.metrics.precision;
    mean.recall += f.metrics.recall;
    mean.f1 += f.metrics.f1;
    for (int c = 0; c < kSessions; ++c) {
      mean.counts[c].tp += f.metrics.counts[c].tp;
      mean.counts[c].fp += f.metrics.counts[c].fp;
      mean.counts[c].fn += f.metrics.counts[c].fn;
      mean.counts[c].tn += f.metrics.counts[c].tn;
    }
  }
  const double n = static_cast<double>(result.folds.size());
  mean.accuracy /= n;
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  return result;
}

CombinationResult evaluate_combination(const SubjectDataset& dataset, const CombinationSpec& spec,
                                       std::uint64_t seed, const EvalOptions& options) {
  const PreparedSubject prepared(dataset, true, spec.filtering == Filtering::auto_cutoff);
  return evaluate_combination(prepared, spec, seed, options);
}

}  // namespace gaitbench
