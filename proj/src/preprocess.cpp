#include "gaitbench/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaitbench/error.hpp"
#include "gaitbench/kernels.hpp"

namespace gaitbench {

Waveforms waveforms_of(const ForceTrial& trial) {
  Waveforms w;
  for (Foot foot : {Foot::left, Foot::right})
    for (Channel c : kChannels)
      w[static_cast<int>(foot) * 3 + static_cast<int>(c)] = trial.foot(foot)[c];
  return w;
}

std::vector<double> time_derivative(std::span<const double> x, double sample_rate) {
  if (x.size() < 3) fail(ErrorKind::invalid_argument, "derivative needs at least 3 samples");
  const std::size_t n = x.size();
  std::vector<double> d(n);
  d[0] = (x[1] - x[0]) * sample_rate;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) * sample_rate / 2.0;
  d[n - 1] = (x[n - 1] - x[n - 2]) * sample_rate;
  return d;
}

std::vector<double> time_normalize(std::span<const double> x, int n) {
  if (x.size() < 2) fail(ErrorKind::invalid_argument, "time normalisation needs at least 2 samples");
  if (n < 2) fail(ErrorKind::invalid_argument, "time normalisation needs at least 2 output points");
  const std::size_t last = x.size() - 1;
  std::vector<double> out(static_cast<std::size_t>(n));
  out.front() = x.front();
  out.back() = x.back();
  for (int j = 1; j + 1 < n; ++j) {
    const double pos = static_cast<double>(j) * static_cast<double>(last) / (n - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), last - 1);
    const double frac = pos - static_cast<double>(i);
    out[j] = x[i] + frac * (x[i + 1] - x[i]);
  }
  return out;
}

Waveforms weight_normalize(Waveforms channels, double body_weight) {
  if (!(body_weight > 0)) fail(ErrorKind::invalid_argument, "body weight must be positive");
  for (auto& ch : channels)
    for (double& v : ch) v /= body_weight;
  return channels;
}

std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> out;
  std::size_t i = 1;
  while (i + 1 < x.size()) {
    if (!(x[i] > x[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < x.size() && x[j + 1] == x[i]) ++j;
    if (j + 1 < x.size() && x[j + 1] < x[i]) out.push_back(i);
    i = j + 1;
  }
  return out;
}

namespace {

double occurrence(std::size_t index, std::size_t n) {
  return static_cast<double>(index) / static_cast<double>(n - 1) * 100.0;
}

void push_min_max(const std::vector<double>& x, std::vector<double>& out) {
  const auto lo = std::min_element(x.begin(), x.end());
  const auto hi = std::max_element(x.begin(), x.end());
  out.push_back(*lo);
  out.push_back(occurrence(static_cast<std::size_t>(lo - x.begin()), x.size()));
  out.push_back(*hi);
  out.push_back(occurrence(static_cast<std::size_t>(hi - x.begin()), x.size()));
}

void push_vertical_peaks(const std::vector<double>& v, std::vector<double>& out) {
  auto maxima = local_maxima(v);
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  const double min_gap = 0.1 * static_cast<double>(v.size() - 1);
  if (maxima.size() < 2)
    fail(ErrorKind::invalid_data, "degenerate vertical waveform: fewer than two local maxima");
  const std::size_t first = maxima[0];
  std::size_t second = first;
  for (std::size_t i = 1; i < maxima.size(); ++i) {
    const double gap = std::abs(static_cast<double>(maxima[i]) - static_cast<double>(first));
    if (gap >= min_gap) {
      second = maxima[i];
      break;
    }
  }
  if (second == first)
    fail(ErrorKind::invalid_data,
         "degenerate vertical waveform: no two local maxima 10% of stance apart");
  const std::size_t p1 = std::min(first, second), p2 = std::max(first, second);
  const auto valley = std::min_element(v.begin() + static_cast<long>(p1) + 1,
                                       v.begin() + static_cast<long>(p2));
  out.push_back(v[p1]);
  out.push_back(occurrence(p1, v.size()));
  out.push_back(*valley);
  out.push_back(occurrence(static_cast<std::size_t>(valley - v.begin()), v.size()));
  out.push_back(v[p2]);
  out.push_back(occurrence(p2, v.size()));
}

}  // namespace

FeatureVector td_features(const Waveforms& channels, Derivative kind) {
  FeatureVector fv;
  fv.layout.reduction = Reduction::td;
  fv.layout.derivative = kind;
  fv.layout.time_points = static_cast<int>(channels[0].size());
  fv.values.reserve(28);
  for (int foot = 0; foot < 2; ++foot) {
    for (int c = 0; c < 3; ++c) {
      const auto& x = channels[foot * 3 + c];
      if (x.size() < 3) fail(ErrorKind::invalid_data, "waveform too short for extremum features");
      if (kind == Derivative::grf && c == static_cast<int>(Channel::vertical))
        push_vertical_peaks(x, fv.values);
      else
        push_min_max(x, fv.values);
    }
  }
  return fv;
}

// ---------------------------------------------------------------------------
// Scaling

namespace {

struct Block {
  std::vector<double*> cells;
};

// Population mean/sd over the block, or mean only and sd = 0 when the spread is at
// rounding level relative to the block's magnitude.
void z_block(Block& b, double& mean_out, double& sd_out) {
  double mean = 0, peak = 0;
  for (double* c : b.cells) {
    mean += *c;
    peak = std::max(peak, std::abs(*c));
  }
  mean /= static_cast<double>(b.cells.size());
  double ss = 0;
  for (double* c : b.cells) ss += (*c - mean) * (*c - mean);
  double sd = std::sqrt(ss / static_cast<double>(b.cells.size()));
  if (!(sd > 1e-12 * peak)) sd = 0;
  for (double* c : b.cells) *c = sd > 0 ? (*c - mean) / sd : 0.0;
  mean_out = mean;
  sd_out = sd;
}

void minmax_block(Block& b, double& min_out, double& max_out) {
  double lo = *b.cells.front(), hi = lo;
  for (double* c : b.cells) {
    lo = std::min(lo, *c);
    hi = std::max(hi, *c);
  }
  const double range = hi - lo;
  const bool flat = !(range > 1e-12 * std::max(std::abs(lo), std::abs(hi)));
  for (double* c : b.cells) *c = flat ? 0.0 : 2.0 * (*c - lo) / range - 1.0;
  min_out = lo;
  max_out = hi;
}

std::vector<Block> blocks_for(Eigen::MatrixXd& m, const FeatureLayout& layout, bool all_trials) {
  const bool waveform = layout.reduction == Reduction::tc;
  const int variables = waveform ? layout.channels : static_cast<int>(m.cols());
  const int width = waveform ? layout.time_points : 1;
  if (waveform && variables * width != m.cols())
    throw Error(ErrorKind::invalid_argument, "feature matrix width does not match its layout");
  std::vector<Block> blocks;
  if (all_trials) {
    blocks.resize(variables);
    for (int v = 0; v < variables; ++v)
      for (int col = v * width; col < (v + 1) * width; ++col)
        for (Eigen::Index r = 0; r < m.rows(); ++r) blocks[v].cells.push_back(&m(r, col));
  } else {
    blocks.resize(static_cast<std::size_t>(m.rows()) * variables);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (int v = 0; v < variables; ++v)
        for (int col = v * width; col < (v + 1) * width; ++col)
          blocks[r * variables + v].cells.push_back(&m(r, col));
  }
  return blocks;
}

}  // namespace

Eigen::MatrixXd scale_features(const Eigen::MatrixXd& features, Scaling method,
                               const FeatureLayout& layout, ScalingModel* model) {
  const bool z_at = z_all_trials(method), mm_at = minmax_all_trials(method);
  if (layout.reduction != Reduction::tc && !(z_at && mm_at)) {
    fail(ErrorKind::unsupported, "single-trial scaling (" + std::string(to_string(method)) +
                                     ") is undefined for " +
                                     std::string(to_string(layout.reduction)) + " features");
  }
  if (features.rows() == 0 || features.cols() == 0) return features;
  Eigen::MatrixXd out = features;
  ScalingModel local;
  ScalingModel& m = model ? *model : local;

  auto z_blocks = blocks_for(out, layout, z_at);
  m.z = {z_at, {}, {}, {}, {}};
  m.z.mean.resize(z_blocks.size());
  m.z.sd.resize(z_blocks.size());
  for (std::size_t i = 0; i < z_blocks.size(); ++i) z_block(z_blocks[i], m.z.mean[i], m.z.sd[i]);

  auto mm_blocks = blocks_for(out, layout, mm_at);
  m.minmax = {mm_at, {}, {}, {}, {}};
  m.minmax.min.resize(mm_blocks.size());
  m.minmax.max.resize(mm_blocks.size());
  for (std::size_t i = 0; i < mm_blocks.size(); ++i)
    minmax_block(mm_blocks[i], m.minmax.min[i], m.minmax.max[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

FeatureVector FeatureMatrix::row(int i) const {
  FeatureVector fv;
  fv.layout = layout;
  fv.values.resize(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index c = 0; c < values.cols(); ++c) fv.values[c] = values(i, c);
  return fv;
}

namespace {

std::string trial_name(const ForceTrial& t) {
  return t.subject_id + " session " + std::to_string(t.session) + " trial " +
         std::to_string(t.trial);
}

}  // namespace

PreparedSubject::PreparedSubject(const SubjectDataset& dataset, bool parallel, bool with_filtered)
    : dataset_(dataset) {
  raw_.reserve(dataset_.trials.size());
  for (const auto& t : dataset_.trials) raw_.push_back(waveforms_of(crop_to_stance(t)));
  if (!with_filtered) return;

  std::vector<std::vector<double>> flat;
  flat.reserve(raw_.size() * 6);
  for (const auto& w : raw_)
    for (const auto& ch : w) flat.push_back(ch);
  const double fs = dataset_.trials.empty() ? 1000.0 : dataset_.trials.front().sample_rate;
  std::vector<kernels::FilteredSeries> filtered;
  try {
    filtered = parallel ? kernels::auto_filter_parallel(flat, fs) : kernels::auto_filter_serial(flat, fs);
  } catch (const Error& e) {
    fail(e.kind(), std::string("filtering ") + dataset_.subject_id + ": " + e.what());
  }
  filtered_.resize(raw_.size());
  cutoffs_.resize(raw_.size());
  for (std::size_t t = 0; t < raw_.size(); ++t) {
    for (int c = 0; c < 6; ++c) {
      filtered_[t][c] = std::move(filtered[t * 6 + c].values);
      cutoffs_[t][c] = filtered[t * 6 + c].cutoff;
    }
  }
}

const std::vector<Waveforms>& PreparedSubject::signals(Filtering f) const {
  if (f == Filtering::none) return raw_;
  if (filtered_.size() != raw_.size())
    fail(ErrorKind::invalid_argument, "filtered signals were not prepared for " + dataset_.subject_id);
  return filtered_;
}

FeatureMatrix build_features(const PreparedSubject& subject, const CombinationSpec& spec,
                             const FeatureOptions& options) {
  const auto& ds = subject.dataset();
  const auto& signals = subject.signals(spec.filtering);
  const int n_trials = static_cast<int>(ds.trials.size());
  if (n_trials == 0) fail(ErrorKind::invalid_data, "subject " + ds.subject_id + " has no trials");

  std::vector<Waveforms> normalized(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    const auto& trial = ds.trials[i];
    try {
      Waveforms w = signals[i];
      if (spec.derivative == Derivative::jerk)
        for (auto& ch : w) ch = time_derivative(ch, trial.sample_rate);
      if (spec.weight_norm) w = weight_normalize(std::move(w), trial.body_weight);
      for (auto& ch : w) ch = time_normalize(ch, spec.time_points);
      normalized[i] = std::move(w);
    } catch (const Error& e) {
      fail(e.kind(), trial_name(trial) + ": " + e.what());
    }
  }

  FeatureMatrix fm;
  fm.labels = ds.labels();
  fm.layout.reduction = spec.reduction;
  fm.layout.time_points = spec.time_points;
  fm.layout.derivative = spec.derivative;
  fm.layout.channels = 6;

  auto waveform_matrix = [&] {
    Eigen::MatrixXd m(n_trials, 6 * spec.time_points);
    for (int i = 0; i < n_trials; ++i)
      for (int c = 0; c < 6; ++c)
        for (int j = 0; j < spec.time_points; ++j) m(i, c * spec.time_points + j) = normalized[i][c][j];
    return m;
  };

  Eigen::MatrixXd raw;
  switch (spec.reduction) {
    case Reduction::tc:
      raw = waveform_matrix();
      break;
    case Reduction::td: {
      raw.resize(n_trials, spec.derivative == Derivative::grf ? 28 : 24);
      for (int i = 0; i < n_trials; ++i) {
        FeatureVector fv;
        try {
          fv = td_features(normalized[i], spec.derivative);
        } catch (const Error& e) {
          fail(e.kind(), trial_name(ds.trials[i]) + ": " + e.what());
        }
        for (std::size_t c = 0; c < fv.values.size(); ++c) raw(i, static_cast<Eigen::Index>(c)) = fv.values[c];
      }
      break;
    }
    case Reduction::pca: {
      const Eigen::MatrixXd tc = waveform_matrix();
      PcaModel model;
      if (options.pca_fit_rows) {
        Eigen::MatrixXd fit(static_cast<Eigen::Index>(options.pca_fit_rows->size()), tc.cols());
        for (std::size_t r = 0; r < options.pca_fit_rows->size(); ++r)
          fit.row(static_cast<Eigen::Index>(r)) = tc.row((*options.pca_fit_rows)[r]);
        model = pca_fit(fit);
      } else {
        model = pca_fit(tc);
      }
      raw = pca_project_rows(model, tc);
      fm.layout.components = model.k;
      break;
    }
  }
  fm.values = scale_features(raw, spec.scaling, fm.layout);
  return fm;
}

FeatureMatrix build_features(const SubjectDataset& dataset, const CombinationSpec& spec,
                             const FeatureOptions& options) {
  return build_features(PreparedSubject(dataset, true, spec.filtering == Filtering::auto_cutoff),
                        spec, options);
}

}  // namespace gaitbench
