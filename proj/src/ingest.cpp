#include "gaitbench/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "gaitbench/error.hpp"
#include "gaitbench/seed.hpp"

namespace gaitbench {

namespace fs = std::filesystem;

std::vector<int> SubjectDataset::labels() const {
  std::vector<int> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.session);
  return out;
}

void validate_dataset(const SubjectDataset& ds) {
  std::array<int, kSessions> per_session{};
  for (const auto& t : ds.trials) {
    validate_trial(t);
    if (t.subject_id != ds.subject_id)
      fail(ErrorKind::invalid_data, "trial of " + t.subject_id + " filed under " + ds.subject_id);
    if (t.sample_rate != ds.trials.front().sample_rate)
      fail(ErrorKind::invalid_data, "mixed sample rates in subject " + ds.subject_id);
    ++per_session[t.session - 1];
  }
  for (int s = 0; s < kSessions; ++s) {
    if (per_session[s] != kTrialsPerSession) {
      fail(ErrorKind::invalid_data, "subject " + ds.subject_id + " session " +
                                        std::to_string(s + 1) + " has " +
                                        std::to_string(per_session[s]) + " trials, expected " +
                                        std::to_string(kTrialsPerSession));
    }
  }
}

IndexRange extract_stance(const std::vector<double>& vertical, double threshold) {
  if (vertical.empty()) fail(ErrorKind::invalid_data, "empty force series");
  IndexRange best;
  std::size_t i = 0;
  while (i < vertical.size()) {
    if (!(vertical[i] >= threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < vertical.size() && vertical[j] >= threshold) ++j;
    if (j - i > best.size()) best = {i, j};
    i = j;
  }
  if (best.size() == 0)
    fail(ErrorKind::invalid_data, "no sample reaches the " + std::to_string(threshold) +
                                      " N stance threshold");
  return best;
}

ForceTrial crop_to_stance(ForceTrial trial, double threshold) {
  for (Foot foot : {Foot::left, Foot::right}) {
    auto& f = trial.foot(foot);
    IndexRange r;
    try {
      r = extract_stance(f[Channel::vertical], threshold);
    } catch (const Error& e) {
      fail(e.kind(), std::string(e.what()) + " (" + trial.subject_id + " session " +
                         std::to_string(trial.session) + " trial " + std::to_string(trial.trial) +
                         (foot == Foot::left ? " left" : " right") + ")");
    }
    for (auto& ch : f.channels) {
      if (ch.size() < r.end) continue;  // length mismatch is reported by validate_trial
      ch = std::vector<double>(ch.begin() + static_cast<long>(r.start),
                               ch.begin() + static_cast<long>(r.end));
    }
  }
  return trial;
}

// ---------------------------------------------------------------------------
// File schema

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto end = line.find(sep, pos);
    out.push_back(line.substr(pos, end == std::string_view::npos ? end : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view s, const fs::path& file, std::size_t line_no) {
  T value{};
  s = trim(s);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorKind::invalid_data, file.string() + ":" + std::to_string(line_no) +
                                      ": malformed number '" + std::string(s) + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Mass whose product with g reproduces the stored weight bit for bit.
double mass_for(double body_weight) {
  double mass = body_weight / kGravity;
  double probe = mass;
  for (int step = 0; step < 8 && probe * kGravity != body_weight; ++step)
    probe = std::nextafter(probe, probe * kGravity < body_weight ? HUGE_VAL : -HUGE_VAL);
  return probe * kGravity == body_weight ? probe : mass;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::io, "cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

struct TrialFile {
  FootForces forces;
  double sample_rate = 0;
};

TrialFile read_trial_file(const fs::path& file) {
  auto lines = read_lines(file);
  if (lines.empty() || trim(lines[0]) != "t_ms,fx,fy,fz")
    fail(ErrorKind::invalid_data, file.string() + ": expected header 't_ms,fx,fy,fz'");
  if (lines.size() < 3) fail(ErrorKind::invalid_data, file.string() + ": fewer than 2 samples");
  TrialFile out;
  std::vector<double> t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cols = split(lines[i], ',');
    if (cols.size() != 4)
      fail(ErrorKind::invalid_data, file.string() + ":" + std::to_string(i + 1) +
                                        ": expected 4 columns");
    t.push_back(parse_number<double>(cols[0], file, i + 1));
    out.forces[Channel::fore_aft].push_back(parse_number<double>(cols[1], file, i + 1));
    out.forces[Channel::medio_lateral].push_back(parse_number<double>(cols[2], file, i + 1));
    out.forces[Channel::vertical].push_back(parse_number<double>(cols[3], file, i + 1));
  }
  const double dt = t[1] - t[0];
  if (!(dt > 0)) fail(ErrorKind::invalid_data, file.string() + ": non-increasing t_ms");
  out.sample_rate = 1000.0 / dt;
  return out;
}

struct TrialKey {
  std::string subject;
  int session = 0;
  int trial = 0;
  char foot = 'L';
};

bool parse_trial_name(const std::string& stem, TrialKey& key) {
  auto parts = split(stem, '_');
  if (parts.size() < 4) return false;
  const auto n = parts.size();
  if (parts[n - 1] != "L" && parts[n - 1] != "R") return false;
  key.foot = parts[n - 1][0];
  auto as_int = [](std::string_view s, int& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && p == s.data() + s.size();
  };
  if (!as_int(parts[n - 2], key.trial) || !as_int(parts[n - 3], key.session)) return false;
  key.subject.clear();
  for (std::size_t i = 0; i + 3 < n; ++i) {
    if (i) key.subject += '_';
    key.subject += parts[i];
  }
  return true;
}

}  // namespace

LoadResult load_dataset(const fs::path& data_dir, const LoadOptions& options) {
  const auto meta_path = data_dir / "meta.csv";
  if (!fs::exists(meta_path)) fail(ErrorKind::io, "missing " + meta_path.string());
  const auto trials_dir = data_dir / "trials";
  if (!fs::is_directory(trials_dir)) fail(ErrorKind::io, "missing directory " + trials_dir.string());

  // subject -> session -> body mass
  std::vector<std::string> subject_order;
  std::map<std::string, std::map<int, double>> masses;
  auto meta = read_lines(meta_path);
  if (meta.empty() || trim(meta[0]) != "subject,session,body_mass_kg")
    fail(ErrorKind::invalid_data, meta_path.string() + ": expected header 'subject,session,body_mass_kg'");
  for (std::size_t i = 1; i < meta.size(); ++i) {
    auto cols = split(meta[i], ',');
    if (cols.size() != 3)
      fail(ErrorKind::invalid_data, meta_path.string() + ":" + std::to_string(i + 1) +
                                        ": expected 3 columns");
    std::string subject(trim(cols[0]));
    int session = parse_number<int>(cols[1], meta_path, i + 1);
    if (trim(cols[2]).empty())
      fail(ErrorKind::invalid_data, "meta.csv: missing body mass for subject " + subject +
                                        " session " + std::to_string(session));
    double mass = parse_number<double>(cols[2], meta_path, i + 1);
    if (!masses.contains(subject)) subject_order.push_back(subject);
    masses[subject][session] = mass;
  }

  std::map<std::string, std::map<std::pair<int, int>, std::array<fs::path, 2>>> files;
  for (const auto& entry : fs::directory_iterator(trials_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    TrialKey key;
    if (!parse_trial_name(entry.path().stem().string(), key)) continue;
    files[key.subject][{key.session, key.trial}][key.foot == 'L' ? 0 : 1] = entry.path();
  }
  for (const auto& [subject, _] : files) {
    if (!masses.contains(subject))
      fail(ErrorKind::invalid_data, "meta.csv: missing body mass for subject " + subject);
  }

  LoadResult result;
  for (const auto& subject : subject_order) {
    SubjectDataset ds;
    ds.subject_id = subject;
    for (int s = 1; s <= kSessions; ++s) {
      auto it = masses[subject].find(s);
      if (it == masses[subject].end()) {
        if (files[subject].lower_bound({s, 0}) != files[subject].lower_bound({s + 1, 0}))
          fail(ErrorKind::invalid_data, "meta.csv: missing body mass for subject " + subject +
                                            " session " + std::to_string(s));
        continue;
      }
      ds.body_weight[s - 1] = it->second * kGravity;
    }
    for (const auto& [st, paths] : files[subject]) {
      const auto [session, trial] = st;
      if (session < 1 || session > kSessions || trial < 1 || trial > kTrialsPerSession)
        fail(ErrorKind::invalid_data, "trial file with out-of-range session/trial for " + subject);
      if (paths[0].empty() || paths[1].empty()) {
        std::string msg = "subject " + subject + " session " + std::to_string(session) +
                          " trial " + std::to_string(trial) + " lacks the " +
                          (paths[0].empty() ? "left" : "right") + " foot file";
        if (!options.lenient) fail(ErrorKind::invalid_data, msg);
        result.warnings.push_back(msg);
        continue;
      }
      if (!masses[subject].contains(session))
        fail(ErrorKind::invalid_data, "meta.csv: missing body mass for subject " + subject +
                                          " session " + std::to_string(session));
      auto left = read_trial_file(paths[0]);
      auto right = read_trial_file(paths[1]);
      if (left.sample_rate != right.sample_rate)
        fail(ErrorKind::invalid_data, "left/right sample rates differ for " + subject);
      ForceTrial t;
      t.subject_id = subject;
      t.session = session;
      t.trial = trial;
      t.sample_rate = left.sample_rate;
      t.left = std::move(left.forces);
      t.right = std::move(right.forces);
      t.body_weight = ds.body_weight[session - 1];
      ds.trials.push_back(validate_trial(crop_to_stance(std::move(t), options.threshold)));
    }
    try {
      validate_dataset(ds);
    } catch (const Error& e) {
      if (!options.lenient) throw;
      result.warnings.push_back(std::string("incomplete subject admitted: ") + e.what());
    }
    result.subjects.push_back(std::move(ds));
  }
  return result;
}

void write_dataset(const std::vector<SubjectDataset>& subjects, const fs::path& data_dir) {
  std::error_code ec;
  fs::create_directories(data_dir / "trials", ec);
  if (ec) fail(ErrorKind::io, "cannot create " + (data_dir / "trials").string() + ": " + ec.message());

  std::ofstream meta(data_dir / "meta.csv");
  if (!meta) fail(ErrorKind::io, "cannot write " + (data_dir / "meta.csv").string());
  meta << "subject,session,body_mass_kg\n";
  for (const auto& ds : subjects) {
    for (int s = 0; s < kSessions; ++s)
      meta << ds.subject_id << ',' << (s + 1) << ',' << format_double(mass_for(ds.body_weight[s]))
           << '\n';
  }
  if (!meta) fail(ErrorKind::io, "write failed for meta.csv");

  for (const auto& ds : subjects) {
    for (const auto& t : ds.trials) {
      for (Foot foot : {Foot::left, Foot::right}) {
        const auto name = t.subject_id + "_" + std::to_string(t.session) + "_" +
                          std::to_string(t.trial) + (foot == Foot::left ? "_L" : "_R") + ".csv";
        std::ofstream out(data_dir / "trials" / name);
        if (!out) fail(ErrorKind::io, "cannot write " + name);
        const auto& f = t.foot(foot);
        std::string buf = "t_ms,fx,fy,fz\n";
        for (std::size_t i = 0; i < f.size(); ++i) {
          buf += format_double(static_cast<double>(i) * 1000.0 / t.sample_rate);
          for (Channel c : kChannels) {
            buf += ',';
            buf += format_double(f[c][i]);
          }
          buf += '\n';
        }
        out << buf;
        if (!out) fail(ErrorKind::io, "write failed for " + name);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

struct FootShape {
  double a = 1.15;          // sin(pi u) weight
  double b = 0.40;          // sin(3 pi u) weight; a - b is the midstance valley
  double c = 0.0;           // sin(2 pi u) weight; first/second peak asymmetry
  double pinch = 0.0;       // moves both peaks towards (>0) or away from midstance
  double shift = 0.0;       // moves both peaks later (>0) or earlier
  double fore_aft = 0.2;    // braking/propulsion amplitude
  double medio_lateral = 0.05;
  double duration_ms = 700;
};

FootShape perturb(const FootShape& base, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  FootShape p = base;
  p.a *= 1 + scale * n(rng);
  p.b *= 1 + scale * n(rng);
  p.c += 0.5 * scale * n(rng);
  p.pinch += 0.5 * scale * n(rng);
  p.shift += 0.5 * scale * n(rng);
  p.fore_aft *= 1 + scale * n(rng);
  p.medio_lateral *= 1 + scale * n(rng);
  p.duration_ms *= 1 + scale * n(rng);
  p.pinch = std::clamp(p.pinch, -0.12, 0.12);
  p.shift = std::clamp(p.shift, -0.25, 0.25);
  return p;
}

FootForces render(const FootShape& p, double body_weight, double sample_rate, double sigma,
                  double ml_sign, std::mt19937_64& rng) {
  using std::numbers::pi;
  const auto n = static_cast<std::size_t>(std::lround(p.duration_ms * sample_rate / 1000.0));
  FootForces f;
  for (auto& ch : f.channels) ch.resize(n);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n - 1);
    // Monotone phase warp: both terms vanish at heel strike and toe off.
    const double phase = u - p.pinch * std::sin(2 * pi * u) / (2 * pi) -
                         p.shift * std::sin(pi * u) / pi * 0.5;
    const double vertical = p.a * std::sin(pi * phase) + p.b * std::sin(3 * pi * phase) +
                            p.c * std::sin(2 * pi * phase) * std::sin(pi * phase);
    const double fore_aft = -p.fore_aft * std::sin(2 * pi * phase);
    const double ml = ml_sign * p.medio_lateral *
                      (std::sin(pi * phase) + 0.4 * std::sin(3 * pi * phase));
    f[Channel::fore_aft][i] = body_weight * fore_aft;
    f[Channel::medio_lateral][i] = body_weight * ml;
    f[Channel::vertical][i] = body_weight * vertical;
    if (sigma > 0) {
      for (Channel c : kChannels) f[c][i] += sigma * body_weight * noise(rng);
    }
  }
  return f;
}

}  // namespace

std::vector<SubjectDataset> synthesize_dataset(int n_subjects, std::uint64_t seed,
                                               const SynthOptions& options) {
  if (n_subjects < 1) fail(ErrorKind::invalid_argument, "n_subjects must be >= 1");
  const double jitter = options.jitter_per_noise * options.noise_fraction;
  std::vector<SubjectDataset> out;
  for (int s = 0; s < n_subjects; ++s) {
    std::mt19937_64 rng(mix_seed({seed, static_cast<std::uint64_t>(s)}));
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    SubjectDataset ds;
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", s + 1);
    ds.subject_id = id;

    const double mass = std::round((55.0 + 35.0 * u01(rng)) * 10.0) / 10.0;
    FootShape subject;
    subject.a *= 1 + 0.03 * n(rng);
    subject.b *= 1 + 0.05 * n(rng);
    subject.c = 0.02 * n(rng);
    subject.pinch = 0.01 * n(rng);
    subject.fore_aft *= 1 + 0.1 * n(rng);
    subject.medio_lateral *= 1 + 0.1 * n(rng);
    subject.duration_ms = 600.0 + 200.0 * u01(rng);
    std::array<FootShape, 2> foot_base{perturb(subject, 0.02, rng), perturb(subject, 0.02, rng)};

    for (int session = 1; session <= kSessions; ++session) {
      const double session_mass =
          std::round(mass * (1 + 0.004 * n(rng)) * 10.0) / 10.0;
      const double bw = session_mass * kGravity;
      ds.body_weight[session - 1] = bw;
      std::array<FootShape, 2> session_shape{perturb(foot_base[0], options.session_effect, rng),
                                             perturb(foot_base[1], options.session_effect, rng)};
      for (int trial = 1; trial <= kTrialsPerSession; ++trial) {
        ForceTrial t;
        t.subject_id = ds.subject_id;
        t.session = session;
        t.trial = trial;
        t.sample_rate = options.sample_rate;
        t.body_weight = bw;
        for (Foot foot : {Foot::left, Foot::right}) {
          const int fi = static_cast<int>(foot);
          auto shape = jitter > 0 ? perturb(session_shape[fi], jitter, rng) : session_shape[fi];
          t.foot(foot) = render(shape, bw, options.sample_rate, options.noise_fraction,
                                foot == Foot::left ? -1.0 : 1.0, rng);
        }
        ds.trials.push_back(validate_trial(crop_to_stance(std::move(t))));
      }
    }
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace gaitbench
