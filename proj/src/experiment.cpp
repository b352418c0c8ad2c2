#include "gaitbench/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "gaitbench/error.hpp"
#include "gaitbench/parallel.hpp"
#include "gaitbench/preprocess.hpp"
#include "gaitbench/seed.hpp"

namespace gaitbench {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = s.find(sep, pos);
    out.push_back(s.substr(pos, end == std::string_view::npos ? s.size() - pos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

constexpr std::array<std::string_view, 7> kKeys{"filtering", "deriv", "T",  "red",
                                                "wn",        "scale", "clf"};

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(ErrorKind::invalid_data, "malformed " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

/// Parses a value of one key and returns it in serialized form; throws on unknown values.
std::string canonical_value(std::string_view key, std::string_view v) {
  if (key == "filtering") return std::string(to_string(parse_filtering(v)));
  if (key == "deriv") return std::string(to_string(parse_derivative(v)));
  if (key == "T") return std::to_string(parse_time_points(v));
  if (key == "red") return std::string(to_string(parse_reduction(v)));
  if (key == "wn") return parse_weight_norm(v) ? "1" : "0";
  if (key == "scale") return std::string(to_string(parse_scaling(v)));
  return std::string(to_string(parse_classifier(v)));
}

}  // namespace

// ---------------------------------------------------------------------------

SpecFilter SpecFilter::parse(std::string_view text) {
  SpecFilter f;
  if (text.empty()) return f;
  for (auto item : split(text, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::invalid_argument, "filter clause '" + std::string(item) + "' needs key=value");
    const std::string key(item.substr(0, eq));
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      fail(ErrorKind::invalid_argument, "unknown filter key '" + key + "'");
    std::vector<std::string> values;
    for (auto v : split(item.substr(eq + 1), '|')) values.push_back(canonical_value(key, v));
    f.clauses_.emplace_back(key, std::move(values));
  }
  return f;
}

bool SpecFilter::matches(const CombinationSpec& spec) const {
  for (const auto& [key, values] : clauses_)
    if (std::find(values.begin(), values.end(), method_of(spec, key)) == values.end()) return false;
  return true;
}

bool SpecFilter::constrains(std::string_view key) const {
  return std::any_of(clauses_.begin(), clauses_.end(), [&](const auto& c) { return c.first == key; });
}

std::vector<CombinationSpec> select_specs(const SpecFilter& filter, bool all_scalings) {
  const bool full = all_scalings || filter.constrains("scale");
  std::vector<CombinationSpec> out;
  for (const auto& s : enumerate_combinations(!full))
    if (s.runnable() && filter.matches(s)) out.push_back(s);
  return out;
}

std::string method_of(const CombinationSpec& spec, std::string_view step) {
  if (step == "filtering") return std::string(to_string(spec.filtering));
  if (step == "deriv") return std::string(to_string(spec.derivative));
  if (step == "T") return std::to_string(spec.time_points);
  if (step == "red") return std::string(to_string(spec.reduction));
  if (step == "wn") return spec.weight_norm ? "1" : "0";
  if (step == "scale") return std::string(to_string(spec.scaling));
  if (step == "clf") return std::string(to_string(spec.classifier));
  fail(ErrorKind::invalid_argument, "unknown step '" + std::string(step) + "'");
}

// ---------------------------------------------------------------------------

std::string format_row(const ResultRow& r) {
  std::string out = r.subject_id;
  for (auto key : kKeys) {
    out += ',';
    out += method_of(r.spec, key);
  }
  out += ',';
  out += r.fold == kMeanFold ? std::string("mean") : std::to_string(r.fold);
  for (double v : {r.f1, r.precision, r.recall, r.accuracy}) {
    out += ',';
    out += format_double(v);
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, ",%.3f", r.seconds);
  out += buf;
  return out;
}

ResultRow parse_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = split(line, ',');
  if (f.size() != 14)
    fail(ErrorKind::invalid_data, "results row has " + std::to_string(f.size()) +
                                      " fields, expected 14: " + std::string(line));
  ResultRow r;
  r.subject_id = std::string(f[0]);
  std::string key;
  for (std::size_t i = 0; i < kKeys.size(); ++i) {
    if (i) key += ';';
    key += std::string(kKeys[i]) + "=" + std::string(f[1 + i]);
  }
  r.spec = CombinationSpec::parse(key);
  if (f[8] == "mean") {
    r.fold = kMeanFold;
  } else {
    const double fold = parse_double(f[8], "fold");
    if (fold < 0 || fold >= kTrialsPerSession || fold != static_cast<int>(fold))
      fail(ErrorKind::invalid_data, "fold index out of range: " + std::string(f[8]));
    r.fold = static_cast<int>(fold);
  }
  r.f1 = parse_double(f[9], "f1");
  r.precision = parse_double(f[10], "precision");
  r.recall = parse_double(f[11], "recall");
  r.accuracy = parse_double(f[12], "accuracy");
  r.seconds = parse_double(f[13], "seconds");
  for (double v : {r.f1, r.precision, r.recall, r.accuracy})
    if (!(v >= 0 && v <= 1)) fail(ErrorKind::invalid_data, "metric outside [0,1]: " + std::string(line));
  return r;
}

ResultStore ResultStore::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::io, "cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::invalid_data, file.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) fail(ErrorKind::invalid_data, file.string() + " has an unexpected header");

  std::vector<ResultRow> rows;
  std::map<std::pair<std::string, int>, std::set<int>> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(parse_row(line));
    } catch (const Error& e) {
      // An unterminated last line is an interrupted append; its group is recomputed.
      if (in.eof()) break;
      fail(e.kind(), file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    groups[{rows.back().subject_id, rows.back().spec.ordinal()}].insert(rows.back().fold);
  }

  ResultStore store;
  std::set<std::pair<std::pair<std::string, int>, int>> seen;
  for (auto& r : rows) {
    const auto& folds = groups[{r.subject_id, r.spec.ordinal()}];
    if (folds.size() != kTrialsPerSession + 1) continue;
    if (!seen.insert({{r.subject_id, r.spec.ordinal()}, r.fold}).second) continue;
    store.rows.push_back(std::move(r));
  }
  store.sort();
  return store;
}

void ResultStore::sort() {
  auto fold_order = [](int f) { return f == kMeanFold ? kTrialsPerSession : f; };
  std::sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
    if (a.spec.ordinal() != b.spec.ordinal()) return a.spec.ordinal() < b.spec.ordinal();
    return fold_order(a.fold) < fold_order(b.fold);
  });
}

void ResultStore::save(const std::filesystem::path& file) const {
  ResultStore sorted = *this;
  sorted.sort();
  const auto tmp = std::filesystem::path(file).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
    out << kResultsHeader << '\n';
    for (const auto& r : sorted.rows) out << format_row(r) << '\n';
    if (!out) fail(ErrorKind::io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

bool ResultStore::contains(const std::string& subject, const CombinationSpec& spec) const {
  return std::any_of(rows.begin(), rows.end(), [&](const ResultRow& r) {
    return r.fold == kMeanFold && r.subject_id == subject && r.spec == spec;
  });
}

std::vector<ResultRow> ResultStore::mean_rows() const {
  std::vector<ResultRow> out;
  for (const auto& r : rows)
    if (r.fold == kMeanFold) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t task_seed(std::uint64_t seed, const std::string& subject, const CombinationSpec& spec) {
  return mix_seed({seed, stable_hash(subject), stable_hash(spec.key())});
}

std::uint64_t subject_fold_seed(std::uint64_t seed, const std::string& subject) {
  return mix_seed({seed, stable_hash(subject), 0x666f6c6473});
}

RunSummary run_grid(const std::vector<SubjectDataset>& subjects, const RunConfig& config) {
  if (config.workers < 1) fail(ErrorKind::invalid_argument, "worker count must be at least 1");
  if (config.specs.empty()) fail(ErrorKind::invalid_argument, "no combinations selected");
  for (const auto& s : config.specs)
    if (!s.runnable())
      fail(ErrorKind::unsupported, s.key() + ": single-trial scaling of scalar features is undefined");

  std::filesystem::create_directories(config.output_dir);
  const auto results = config.output_dir / "results.csv";
  ResultStore store;
  if (std::filesystem::exists(results)) store = ResultStore::load(results);

  std::set<std::pair<std::string, int>> done;
  for (const auto& r : store.rows)
    if (r.fold == kMeanFold) done.insert({r.subject_id, r.spec.ordinal()});

  struct Task {
    std::size_t subject;
    CombinationSpec spec;
  };
  std::vector<Task> tasks;
  RunSummary summary;
  std::vector<char> needs(subjects.size(), 0), needs_filtered(subjects.size(), 0);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    for (const auto& spec : config.specs) {
      ++summary.tasks;
      if (done.count({subjects[i].subject_id, spec.ordinal()})) {
        ++summary.skipped;
        continue;
      }
      tasks.push_back({i, spec});
      needs[i] = 1;
      if (spec.filtering == Filtering::auto_cutoff) needs_filtered[i] = 1;
    }
  }

  // Rewrite so the append stream below starts from a clean, complete file.
  store.save(results);
  if (tasks.empty()) {
    if (config.progress) config.progress("0 new tasks");
    return summary;
  }

  std::vector<std::optional<PreparedSubject>> prepared(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i)
    if (needs[i]) prepared[i].emplace(subjects[i], true, needs_filtered[i] != 0);

  std::ofstream append(results, std::ios::app);
  if (!append) fail(ErrorKind::io, "cannot append to " + results.string());
  std::mutex mu;
  std::vector<std::vector<ResultRow>> produced(tasks.size());
  std::vector<std::optional<TaskFailure>> failed(tasks.size());
  int finished = 0;

  omp_for_each(static_cast<long>(tasks.size()), config.workers, [&](long t) {
    const auto& task = tasks[static_cast<std::size_t>(t)];
    const auto& subject = subjects[task.subject].subject_id;
    std::vector<ResultRow> rows;
    try {
      EvalOptions options;
      options.preset = config.preset;
      options.pca_foldwise = config.pca_foldwise;
      options.fold_seed = subject_fold_seed(config.seed, subject);
      options.label_permutation_seed = config.label_permutation_seed;
      const auto result = evaluate_combination(*prepared[task.subject], task.spec,
                                               task_seed(config.seed, subject, task.spec), options);
      double total = 0;
      for (const auto& f : result.folds) {
        rows.push_back({subject, task.spec, f.fold_index, f.metrics.f1, f.metrics.precision,
                        f.metrics.recall, f.metrics.accuracy, f.seconds});
        total += f.seconds;
      }
      rows.push_back({subject, task.spec, kMeanFold, result.mean.f1, result.mean.precision,
                      result.mean.recall, result.mean.accuracy, total});
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      failed[t] = TaskFailure{subject, task.spec.key(), e.what()};
      ++finished;
      if (config.progress)
        config.progress("[" + std::to_string(finished) + "/" + std::to_string(tasks.size()) +
                        "] FAILED " + subject + " " + task.spec.key() + ": " + e.what());
      return;
    }
    std::lock_guard lock(mu);
    for (const auto& r : rows) append << format_row(r) << '\n';
    append.flush();
    produced[t] = std::move(rows);
    ++finished;
    if (config.progress)
      config.progress("[" + std::to_string(finished) + "/" + std::to_string(tasks.size()) + "] " +
                      subject + " " + task.spec.key() + " f1=" +
                      format_double(produced[t].back().f1));
  });
  append.close();

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (failed[t]) {
      summary.failures.push_back(*failed[t]);
      continue;
    }
    ++summary.computed;
    for (auto& r : produced[t]) store.rows.push_back(std::move(r));
  }
  store.save(results);

  const auto failures_file = config.output_dir / "failures.csv";
  if (summary.failures.empty()) {
    std::filesystem::remove(failures_file);
  } else {
    std::ofstream out(failures_file, std::ios::trunc);
    out << "subject,spec,message\n";
    for (const auto& f : summary.failures) {
      std::string msg = f.message;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      out << f.subject_id << ",\"" << f.spec_key << "\",\"" << msg << "\"\n";
    }
  }
  return summary;
}

}  // namespace gaitbench
