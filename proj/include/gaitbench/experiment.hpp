#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gaitbench/eval.hpp"
#include "gaitbench/ingest.hpp"
#include "gaitbench/learn.hpp"
#include "gaitbench/model.hpp"

namespace gaitbench {

// ---------------------------------------------------------------------------
// Spec filters: `key=v1|v2;key=v`, keys as in CombinationSpec::key(); unset keys match all.

class SpecFilter {
 public:
  static SpecFilter parse(std::string_view text);
  bool matches(const CombinationSpec& spec) const;
  bool constrains(std::string_view key) const;

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> clauses_;
};

/// Specs selected by `filter`. The default grid is the 288 specs with all-trials scaling;
/// the full 1,152 (runnable ones only) are used when `all_scalings` is set or the filter
/// names a scaling.
std::vector<CombinationSpec> select_specs(const SpecFilter& filter, bool all_scalings = false);

// ---------------------------------------------------------------------------
// Results store

inline constexpr int kMeanFold = -1;

struct ResultRow {
  std::string subject_id;
  CombinationSpec spec;
  int fold = kMeanFold;  // 0..14, or kMeanFold for the mean row
  double f1 = 0, precision = 0, recall = 0, accuracy = 0;
  double seconds = 0;
};

inline constexpr std::string_view kResultsHeader =
    "subject,filtering,deriv,T,red,wn,scale,clf,fold,f1,precision,recall,accuracy,seconds";

std::string format_row(const ResultRow& row);
ResultRow parse_row(std::string_view line);

struct ResultStore {
  std::vector<ResultRow> rows;

  /// Reads `results.csv`. Groups lacking their mean row or any fold (an interrupted
  /// write) are dropped so they are recomputed, as is an unterminated malformed last line.
  static ResultStore load(const std::filesystem::path& file);
  /// Rewrites the file sorted by (subject, spec order, fold; mean last).
  void save(const std::filesystem::path& file) const;
  void sort();

  bool contains(const std::string& subject, const CombinationSpec& spec) const;
  std::vector<ResultRow> mean_rows() const;
};

// ---------------------------------------------------------------------------
// Grid runner

struct RunConfig {
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
  GridPreset preset = GridPreset::coarse;
  int workers = 1;
  bool pca_foldwise = false;
  std::vector<CombinationSpec> specs;
  std::optional<std::uint64_t> label_permutation_seed;
  std::function<void(const std::string&)> progress;
};

struct TaskFailure {
  std::string subject_id;
  std::string spec_key;
  std::string message;
};

struct RunSummary {
  int tasks = 0;
  int skipped = 0;
  int computed = 0;
  std::vector<TaskFailure> failures;
};

/// Seed of one (subject, spec) task: hash(global seed, subject id, spec key).
std::uint64_t task_seed(std::uint64_t seed, const std::string& subject, const CombinationSpec& spec);
/// Fold seed shared by every spec of one subject, so specs are compared on the same splits.
std::uint64_t subject_fold_seed(std::uint64_t seed, const std::string& subject);

/// Evaluates every (subject, spec) pair missing from `output_dir/results.csv`, appending
/// each finished group, and rewrites the file sorted at the end. Failed tasks are listed
/// in `failures.csv` and left out of the store so a rerun retries them.
RunSummary run_grid(const std::vector<SubjectDataset>& subjects, const RunConfig& config);

// ---------------------------------------------------------------------------
// Aggregation

/// The six steps varied in the default grid, with their methods in enumeration order.
struct StepMethod {
  std::string step;    // key name: filtering, deriv, T, red, wn, clf (scale if present)
  std::string method;  // value as serialized in the key
};
std::vector<StepMethod> step_methods(bool include_scaling = false);
std::string method_of(const CombinationSpec& spec, std::string_view step);

/// Per-subject mean F1 of each spec (from the mean rows), restricted to all-trials scaling.
struct SpecScore {
  CombinationSpec spec;
  std::vector<double> per_subject;  // aligned with SubjectTable::subjects
  double mean = 0;
  double sd = 0;  // sample SD across subjects, 0 for one subject
};

struct SubjectTable {
  std::vector<std::string> subjects;
  std::vector<SpecScore> specs;  // enumeration order
  bool complete = false;         // all 288 specs present for every subject
};

SubjectTable spec_scores(const ResultStore& store);

struct MethodMean {
  StepMethod method;
  int n_specs = 0;
  std::vector<double> per_subject;
  double overall = 0;
};

/// Mean of spec-mean F1 over the specs containing each method, per subject and averaged
/// over subjects. Throws incomplete unless every subject has the full 288 (or `partial`).
std::vector<MethodMean> method_means(const SubjectTable& table, bool partial = false);

struct RankEntry {
  StepMethod method;
  double score = 0;
  double min = 0;  // worst packing: the method's specs hold the lowest ranks
  double max = 0;
  double pct_max = 0;
};

/// 0-based fractional ranks of specs ordered by ascending mean F1 (ties averaged).
std::vector<double> fractional_ranks(const std::vector<double>& values);

/// Score share above the floor, relative to the total rank mass above all methods' floors:
/// (score - min) / (total - K * min) * 100 for a step with K methods.
double percent_of_max(double score, double min, double total, int methods);

/// Rank sums per method. Requires exactly the 288 restricted specs.
std::vector<RankEntry> rank_scores(const SubjectTable& table);

struct BestEntry {
  CombinationSpec spec;
  double mean = 0;
  double sd = 0;
};
std::vector<BestEntry> best_table(const SubjectTable& table, std::size_t top_n);

struct PairwiseTest {
  std::string step, method_a, method_b;
  int n = 0;
  double mean_a = 0, mean_b = 0;
  double t = 0, p = 1, p_bonferroni = 1;
  int df = 0;
  std::optional<double> cohens_d;
};

/// Paired t-tests between the methods of each step, pairing specs identical in every other
/// step (subject-averaged F1); Bonferroni over the pairs within the step.
std::vector<PairwiseTest> pairwise_tests(const SubjectTable& table);

struct ReportFiles {
  bool aggregates_written = false;
  std::string message;  // why aggregates were skipped
};

/// Writes best_table.csv always; method_means.csv, rank_table.csv, pairwise_tests.csv and
/// fig3.svg when the store is complete (method means alone also when `partial`).
ReportFiles write_reports(const ResultStore& store, const std::filesystem::path& out_dir,
                          bool partial = false);

std::string render_step_chart(const std::vector<MethodMean>& means);

}  // namespace gaitbench
