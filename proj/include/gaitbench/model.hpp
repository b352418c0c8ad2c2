#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gaitbench {

inline constexpr double kGravity = 9.81;
inline constexpr double kStanceThreshold = 20.0;
inline constexpr int kSessions = 6;
inline constexpr int kTrialsPerSession = 15;
inline constexpr int kTrialsPerSubject = kSessions * kTrialsPerSession;

enum class Channel { fore_aft = 0, medio_lateral = 1, vertical = 2 };
inline constexpr std::array<Channel, 3> kChannels{Channel::fore_aft, Channel::medio_lateral,
                                                  Channel::vertical};

/// Three force channels of one foot over the stance phase, in Newtons.
struct FootForces {
  std::array<std::vector<double>, 3> channels;

  const std::vector<double>& operator[](Channel c) const { return channels[static_cast<int>(c)]; }
  std::vector<double>& operator[](Channel c) { return channels[static_cast<int>(c)]; }
  std::size_t size() const { return channels[2].size(); }

  bool operator==(const FootForces&) const = default;
};

enum class Foot { left = 0, right = 1 };

struct ForceTrial {
  std::string subject_id;
  int session = 1;
  int trial = 1;
  double sample_rate = 1000.0;
  FootForces left;
  FootForces right;
  double body_weight = 0.0;  // Newtons, per session

  const FootForces& foot(Foot f) const { return f == Foot::left ? left : right; }
  FootForces& foot(Foot f) { return f == Foot::left ? left : right; }

  bool operator==(const ForceTrial&) const = default;
};

/// Throws Error(invalid_data) naming the violated invariant; otherwise returns the trial.
const ForceTrial& validate_trial(const ForceTrial& trial, double threshold = kStanceThreshold);

// ---------------------------------------------------------------------------
// Combination grid

enum class Filtering { none, auto_cutoff };
enum class Derivative { grf, jerk };
enum class Reduction { tc, td, pca };
enum class Scaling { z_at_mm_at, z_at_mm_st, z_st_mm_at, z_st_mm_st };
enum class ClassifierKind { svm, rfc, mlp, cnn };

inline constexpr std::array<Filtering, 2> kFilterings{Filtering::none, Filtering::auto_cutoff};
inline constexpr std::array<Derivative, 2> kDerivatives{Derivative::grf, Derivative::jerk};
inline constexpr std::array<int, 3> kTimePoints{11, 101, 1001};
inline constexpr std::array<Reduction, 3> kReductions{Reduction::tc, Reduction::td, Reduction::pca};
inline constexpr std::array<bool, 2> kWeightNorms{false, true};
inline constexpr std::array<Scaling, 4> kScalings{Scaling::z_at_mm_at, Scaling::z_at_mm_st,
                                                  Scaling::z_st_mm_at, Scaling::z_st_mm_st};
inline constexpr std::array<ClassifierKind, 4> kClassifiers{
    ClassifierKind::svm, ClassifierKind::rfc, ClassifierKind::mlp, ClassifierKind::cnn};

std::string_view to_string(Filtering v);
std::string_view to_string(Derivative v);
std::string_view to_string(Reduction v);
std::string_view to_string(Scaling v);
std::string_view to_string(ClassifierKind v);

Filtering parse_filtering(std::string_view s);
Derivative parse_derivative(std::string_view s);
int parse_time_points(std::string_view s);
Reduction parse_reduction(std::string_view s);
bool parse_weight_norm(std::string_view s);
Scaling parse_scaling(std::string_view s);
ClassifierKind parse_classifier(std::string_view s);

/// Whether a scaling scope is computed across all trials (true) or per trial.
bool z_all_trials(Scaling s);
bool minmax_all_trials(Scaling s);

/// One point of the preprocessing x classifier grid.
struct CombinationSpec {
  Filtering filtering = Filtering::none;
  Derivative derivative = Derivative::grf;
  int time_points = 101;
  Reduction reduction = Reduction::tc;
  bool weight_norm = false;
  Scaling scaling = Scaling::z_at_mm_at;
  ClassifierKind classifier = ClassifierKind::svm;

  /// `filtering=...;deriv=...;T=...;red=...;wn=0|1;scale=...;clf=...`
  std::string key() const;
  static CombinationSpec parse(std::string_view key);

  /// td and pca features are scalars per trial, so single-trial scaling has no variance.
  bool runnable() const {
    return reduction == Reduction::tc || scaling == Scaling::z_at_mm_at;
  }

  /// Position in the lexicographic enumeration order.
  int ordinal() const;

  auto operator<=>(const CombinationSpec& o) const { return ordinal() <=> o.ordinal(); }
  bool operator==(const CombinationSpec&) const = default;
};

/// All 1,152 specs in lexicographic field order, or the 288 with scaling z_at_mm_at.
std::vector<CombinationSpec> enumerate_combinations(bool restrict_scaling);

// ---------------------------------------------------------------------------
// Features, folds and metrics

struct FeatureLayout {
  Reduction reduction = Reduction::tc;
  int time_points = 101;
  Derivative derivative = Derivative::grf;
  int channels = 6;       // tc: channel count per trial (3 per foot, 2 feet)
  int components = 0;     // pca: retained component count

  /// Length the layout implies for one feature vector.
  int length() const;
};

struct FeatureVector {
  std::vector<double> values;
  FeatureLayout layout;
};

struct FoldSplit {
  int fold_index = 0;
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

struct ClassCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const ClassCounts&) const = default;
};

struct MetricsRecord {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  std::vector<ClassCounts> counts;
};

}  // namespace gaitbench
