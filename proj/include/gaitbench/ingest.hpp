#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gaitbench/model.hpp"

namespace gaitbench {

/// One participant: 6 sessions x 15 trials, ordered by (session, trial).
struct SubjectDataset {
  std::string subject_id;
  std::vector<ForceTrial> trials;
  std::array<double, kSessions> body_weight{};  // Newtons, index session-1

  /// Session labels 1..6, one per trial in storage order.
  std::vector<int> labels() const;

  bool operator==(const SubjectDataset&) const = default;
};

/// Checks the 6x15 layout and shared sample rate; throws Error(invalid_data).
void validate_dataset(const SubjectDataset& ds);

/// Half-open sample range [start, end).
struct IndexRange {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - start; }
  bool operator==(const IndexRange&) const = default;
};

/// Longest contiguous run with vertical >= threshold; the earliest wins ties.
IndexRange extract_stance(const std::vector<double>& vertical, double threshold = kStanceThreshold);

/// Crops every channel of both feet to each foot's own stance range.
ForceTrial crop_to_stance(ForceTrial trial, double threshold = kStanceThreshold);

struct LoadOptions {
  bool lenient = false;  // admit subjects with missing trials (with a warning)
  double threshold = kStanceThreshold;
};

struct LoadResult {
  std::vector<SubjectDataset> subjects;
  std::vector<std::string> warnings;
};

/// Reads `meta.csv` plus `trials/<subject>_<session>_<trial>_<L|R>.csv`.
LoadResult load_dataset(const std::filesystem::path& data_dir, const LoadOptions& options = {});

/// Writes the canonical schema. Existing files with the same names are replaced.
void write_dataset(const std::vector<SubjectDataset>& subjects, const std::filesystem::path& data_dir);

struct SynthOptions {
  double noise_fraction = 0.01;      // Gaussian noise sigma as a fraction of body weight
  double session_effect = 0.04;      // relative size of per-session parameter offsets
  double jitter_per_noise = 0.6;     // per-trial parameter jitter, relative to noise_fraction
  double sample_rate = 1000.0;
};

/// Deterministic, physiologically shaped double-hump gait data.
std::vector<SubjectDataset> synthesize_dataset(int n_subjects, std::uint64_t seed,
                                               const SynthOptions& options = {});

}  // namespace gaitbench
