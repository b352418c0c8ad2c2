#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "gaitbench/ingest.hpp"
#include "gaitbench/model.hpp"

namespace gaitbench {

/// Six waveforms of one trial in canonical order:
/// left fore-aft, left medio-lateral, left vertical, then the same for the right foot.
using Waveforms = std::array<std::vector<double>, 6>;

Waveforms waveforms_of(const ForceTrial& trial);

// ---------------------------------------------------------------------------
// Filtering

/// Transposed direct-form II second-order section, a0 normalised to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

/// Correction applied to the per-pass cut-off so that forward+backward passes of a
/// second-order section are -3 dB at the requested frequency.
double dual_pass_correction();

/// Second-order Butterworth low-pass section, pre-corrected for dual-pass use.
Biquad butterworth_section(double cutoff, double sample_rate);

/// Zero-lag low-pass: the section runs forward then backward over an odd-reflected
/// extension of the series, with steady-state initial conditions.
std::vector<double> butterworth_lowpass(std::span<const double> series, double cutoff,
                                        double sample_rate);

/// Lag-one autocorrelation about the mean; 0 for a (numerically) zero series.
double lag_one_autocorrelation(std::span<const double> r);

/// 2, 2.5, ..., 50 Hz, truncated below Nyquist.
std::vector<double> cutoff_candidates(double sample_rate);

/// Candidate whose residual (raw - filtered) has the smallest |lag-one autocorrelation|.
double optimal_cutoff(std::span<const double> series, double sample_rate);

// ---------------------------------------------------------------------------
// Per-signal steps

std::vector<double> time_derivative(std::span<const double> series, double sample_rate);
std::vector<double> time_normalize(std::span<const double> series, int n);
Waveforms weight_normalize(Waveforms channels, double body_weight);

/// Interior local maxima (strictly above both neighbours; plateaus collapse to their
/// first index), in index order.
std::vector<std::size_t> local_maxima(std::span<const double> series);

/// Time-discrete extrema and their occurrence (percent of stance) for both feet.
/// grf: 28 values, jerk: 24 values.
FeatureVector td_features(const Waveforms& channels, Derivative kind);

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;     // one orthonormal direction per row, by decreasing variance
  std::vector<double> explained;  // fraction of total variance per component
  int k = 1;
  bool degenerate = false;

  int dimension() const { return static_cast<int>(mean.size()); }
};

/// Thin SVD of the centred rows; k is the smallest count reaching `threshold`.
PcaModel pca_fit(const Eigen::MatrixXd& rows, double threshold = 0.98);

FeatureVector pca_project(const PcaModel& model, std::span<const double> vector);
Eigen::MatrixXd pca_project_rows(const PcaModel& model, const Eigen::MatrixXd& rows);
Eigen::VectorXd pca_reconstruct(const PcaModel& model, std::span<const double> scores);

// ---------------------------------------------------------------------------
// Scaling

struct ScopeStats {
  bool all_trials = true;
  // Indexed [variable] for all-trials scope, [trial * variables + variable] otherwise.
  std::vector<double> mean, sd, min, max;
};

struct ScalingModel {
  ScopeStats z;
  ScopeStats minmax;  // statistics of the z-transformed data
};

/// z-transform, then min-max to [-1, 1]. For tc a variable is one (foot, channel)
/// waveform; for td/pca a variable is one column. Zero spread maps to 0.
Eigen::MatrixXd scale_features(const Eigen::MatrixXd& features, Scaling method,
                               const FeatureLayout& layout, ScalingModel* model = nullptr);

// ---------------------------------------------------------------------------
// Assembly

struct FeatureMatrix {
  Eigen::MatrixXd values;  // one row per trial
  FeatureLayout layout;
  std::vector<int> labels;  // session numbers 1..6

  FeatureVector row(int i) const;
};

/// Stance-cropped raw and auto-filtered signals for every trial of one subject.
/// Immutable once built; shared by all specs evaluated for the subject.
class PreparedSubject {
 public:
  explicit PreparedSubject(const SubjectDataset& dataset, bool parallel = true,
                           bool with_filtered = true);

  const SubjectDataset& dataset() const { return dataset_; }
  const std::vector<Waveforms>& signals(Filtering f) const;
  /// Selected cut-off per trial and channel (canonical channel order).
  const std::vector<std::array<double, 6>>& cutoffs() const { return cutoffs_; }

 private:
  SubjectDataset dataset_;
  std::vector<Waveforms> raw_;
  std::vector<Waveforms> filtered_;
  std::vector<std::array<double, 6>> cutoffs_;
};

struct FeatureOptions {
  /// When set, PCA is fitted on these trial indices only (fold-wise fitting).
  std::optional<std::vector<int>> pca_fit_rows;
};

FeatureMatrix build_features(const PreparedSubject& subject, const CombinationSpec& spec,
                             const FeatureOptions& options = {});
FeatureMatrix build_features(const SubjectDataset& dataset, const CombinationSpec& spec,
                             const FeatureOptions& options = {});

}  // namespace gaitbench
