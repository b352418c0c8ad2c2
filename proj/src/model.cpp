#include "gaitbench/model.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "gaitbench/error.hpp"

namespace gaitbench {

namespace {

template <typename E, std::size_t N>
int index_of(const std::array<E, N>& values, E v) {
  for (std::size_t i = 0; i < N; ++i)
    if (values[i] == v) return static_cast<int>(i);
  return -1;
}

[[noreturn]] void bad_value(std::string_view field, std::string_view value) {
  fail(ErrorKind::invalid_argument,
       "unknown value '" + std::string(value) + "' for field '" + std::string(field) + "'");
}

void check_length(const FootForces& f, std::string_view foot, const ForceTrial& t) {
  const auto n = f[Channel::vertical].size();
  for (Channel c : kChannels) {
    if (f[c].size() != n) {
      fail(ErrorKind::invalid_data,
           "channel length mismatch in " + std::string(foot) + " foot of " + t.subject_id +
               " session " + std::to_string(t.session) + " trial " + std::to_string(t.trial));
    }
  }
  if (n < 2) {
    fail(ErrorKind::invalid_data, "stance shorter than 2 samples in " + std::string(foot) +
                                      " foot of " + t.subject_id + " session " +
                                      std::to_string(t.session) + " trial " +
                                      std::to_string(t.trial));
  }
}

void check_threshold(const FootForces& f, std::string_view foot, const ForceTrial& t,
                     double threshold) {
  const auto& v = f[Channel::vertical];
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (!(v[i] >= threshold)) {
      fail(ErrorKind::invalid_data,
           "vertical force below " + std::to_string(threshold) + " N at interior sample " +
               std::to_string(i) + " of " + std::string(foot) + " foot of " + t.subject_id +
               " session " + std::to_string(t.session) + " trial " + std::to_string(t.trial));
    }
  }
}

}  // namespace

const ForceTrial& validate_trial(const ForceTrial& trial, double threshold) {
  check_length(trial.left, "left", trial);
  check_length(trial.right, "right", trial);
  if (!(trial.body_weight > 0)) {
    fail(ErrorKind::invalid_data, "non-positive body weight for " + trial.subject_id +
                                      " session " + std::to_string(trial.session));
  }
  if (trial.session < 1 || trial.session > kSessions || trial.trial < 1 ||
      trial.trial > kTrialsPerSession) {
    fail(ErrorKind::invalid_data, "session/trial number out of range for " + trial.subject_id);
  }
  if (!(trial.sample_rate > 0)) {
    fail(ErrorKind::invalid_data, "non-positive sample rate for " + trial.subject_id);
  }
  check_threshold(trial.left, "left", trial, threshold);
  check_threshold(trial.right, "right", trial, threshold);
  return trial;
}

std::string_view to_string(Filtering v) { return v == Filtering::none ? "none" : "auto_cutoff"; }
std::string_view to_string(Derivative v) { return v == Derivative::grf ? "grf" : "jerk"; }

std::string_view to_string(Reduction v) {
  switch (v) {
    case Reduction::tc: return "tc";
    case Reduction::td: return "td";
    case Reduction::pca: return "pca";
  }
  return "?";
}

std::string_view to_string(Scaling v) {
  switch (v) {
    case Scaling::z_at_mm_at: return "z_at_mm_at";
    case Scaling::z_at_mm_st: return "z_at_mm_st";
    case Scaling::z_st_mm_at: return "z_st_mm_at";
    case Scaling::z_st_mm_st: return "z_st_mm_st";
  }
  return "?";
}

std::string_view to_string(ClassifierKind v) {
  switch (v) {
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::rfc: return "rfc";
    case ClassifierKind::mlp: return "mlp";
    case ClassifierKind::cnn: return "cnn";
  }
  return "?";
}

Filtering parse_filtering(std::string_view s) {
  for (auto v : kFilterings)
    if (to_string(v) == s) return v;
  bad_value("filtering", s);
}

Derivative parse_derivative(std::string_view s) {
  for (auto v : kDerivatives)
    if (to_string(v) == s) return v;
  bad_value("deriv", s);
}

int parse_time_points(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || index_of(kTimePoints, value) < 0)
    bad_value("T", s);
  return value;
}

Reduction parse_reduction(std::string_view s) {
  for (auto v : kReductions)
    if (to_string(v) == s) return v;
  bad_value("red", s);
}

bool parse_weight_norm(std::string_view s) {
  if (s == "0") return false;
  if (s == "1") return true;
  bad_value("wn", s);
}

Scaling parse_scaling(std::string_view s) {
  for (auto v : kScalings)
    if (to_string(v) == s) return v;
  bad_value("scale", s);
}

ClassifierKind parse_classifier(std::string_view s) {
  for (auto v : kClassifiers)
    if (to_string(v) == s) return v;
  bad_value("clf", s);
}

bool z_all_trials(Scaling s) { return s == Scaling::z_at_mm_at || s == Scaling::z_at_mm_st; }
bool minmax_all_trials(Scaling s) { return s == Scaling::z_at_mm_at || s == Scaling::z_st_mm_at; }

std::string CombinationSpec::key() const {
  std::string out;
  out.reserve(80);
  out += "filtering=";
  out += to_string(filtering);
  out += ";deriv=";
  out += to_string(derivative);
  out += ";T=";
  out += std::to_string(time_points);
  out += ";red=";
  out += to_string(reduction);
  out += ";wn=";
  out += weight_norm ? "1" : "0";
  out += ";scale=";
  out += to_string(scaling);
  out += ";clf=";
  out += to_string(classifier);
  return out;
}

CombinationSpec CombinationSpec::parse(std::string_view key) {
  std::map<std::string, std::string, std::less<>> fields;
  std::size_t pos = 0;
  while (pos <= key.size()) {
    auto end = key.find(';', pos);
    if (end == std::string_view::npos) end = key.size();
    auto item = key.substr(pos, end - pos);
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::invalid_argument, "malformed spec item '" + std::string(item) + "'");
    if (!fields.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1))).second)
      fail(ErrorKind::invalid_argument, "duplicate spec field '" + std::string(item) + "'");
    pos = end + 1;
  }
  auto take = [&](std::string_view name) -> const std::string& {
    auto it = fields.find(name);
    if (it == fields.end())
      fail(ErrorKind::invalid_argument, "spec is missing field '" + std::string(name) + "'");
    return it->second;
  };
  CombinationSpec spec;
  spec.filtering = parse_filtering(take("filtering"));
  spec.derivative = parse_derivative(take("deriv"));
  spec.time_points = parse_time_points(take("T"));
  spec.reduction = parse_reduction(take("red"));
  spec.weight_norm = parse_weight_norm(take("wn"));
  spec.scaling = parse_scaling(take("scale"));
  spec.classifier = parse_classifier(take("clf"));
  if (fields.size() != 7) fail(ErrorKind::invalid_argument, "spec has unknown fields: " + std::string(key));
  return spec;
}

int CombinationSpec::ordinal() const {
  int i = index_of(kFilterings, filtering);
  i = i * 2 + index_of(kDerivatives, derivative);
  i = i * 3 + index_of(kTimePoints, time_points);
  i = i * 3 + index_of(kReductions, reduction);
  i = i * 2 + (weight_norm ? 1 : 0);
  i = i * 4 + index_of(kScalings, scaling);
  i = i * 4 + index_of(kClassifiers, classifier);
  return i;
}

std::vector<CombinationSpec> enumerate_combinations(bool restrict_scaling) {
  std::vector<CombinationSpec> out;
  out.reserve(restrict_scaling ? 288 : 1152);
  for (auto f : kFilterings)
    for (auto d : kDerivatives)
      for (int t : kTimePoints)
        for (auto r : kReductions)
          for (bool wn : kWeightNorms)
            for (auto s : kScalings) {
              if (restrict_scaling && s != Scaling::z_at_mm_at) continue;
              for (auto c : kClassifiers) out.push_back({f, d, t, r, wn, s, c});
            }
  return out;
}

int FeatureLayout::length() const {
  switch (reduction) {
    case Reduction::tc: return time_points * channels;
    case Reduction::td: return derivative == Derivative::grf ? 28 : 24;
    case Reduction::pca: return components;
  }
  return 0;
}

}  // namespace gaitbench
