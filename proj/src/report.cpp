#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gaitbench/error.hpp"
#include "gaitbench/experiment.hpp"
#include "gaitbench/stats.hpp"

namespace gaitbench {
namespace {

constexpr int kRestrictedSpecs = 288;

CombinationSpec with_method(CombinationSpec s, std::string_view step, std::string_view method) {
  if (step == "filtering") s.filtering = parse_filtering(method);
  else if (step == "deriv") s.derivative = parse_derivative(method);
  else if (step == "T") s.time_points = parse_time_points(method);
  else if (step == "red") s.reduction = parse_reduction(method);
  else if (step == "wn") s.weight_norm = parse_weight_norm(method);
  else if (step == "scale") s.scaling = parse_scaling(method);
  else s.classifier = parse_classifier(method);
  return s;
}

std::vector<std::string> methods_of_step(const std::string& step) {
  std::vector<std::string> out;
  for (const auto& sm : step_methods(step == "scale"))
    if (sm.step == step) out.push_back(sm.method);
  return out;
}

std::vector<std::string> steps_of(const std::vector<StepMethod>& list) {
  std::vector<std::string> out;
  for (const auto& sm : list)
    if (out.empty() || out.back() != sm.step) out.push_back(sm.step);
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + p.string());
  return out;
}

std::string spec_columns(const CombinationSpec& s) {
  std::string out;
  for (auto key : {"filtering", "deriv", "T", "red", "wn", "scale", "clf"}) {
    if (!out.empty()) out += ',';
    out += method_of(s, key);
  }
  return out;
}

}  // namespace

std::vector<StepMethod> step_methods(bool include_scaling) {
  std::vector<StepMethod> out;
  for (auto v : kFilterings) out.push_back({"filtering", std::string(to_string(v))});
  for (auto v : kDerivatives) out.push_back({"deriv", std::string(to_string(v))});
  for (auto v : kTimePoints) out.push_back({"T", std::to_string(v)});
  for (auto v : kReductions) out.push_back({"red", std::string(to_string(v))});
  for (auto v : kWeightNorms) out.push_back({"wn", v ? "1" : "0"});
  if (include_scaling)
    for (auto v : kScalings) out.push_back({"scale", std::string(to_string(v))});
  for (auto v : kClassifiers) out.push_back({"clf", std::string(to_string(v))});
  return out;
}

SubjectTable spec_scores(const ResultStore& store) {
  SubjectTable table;
  std::map<std::string, std::map<int, double>> by_subject;
  for (const auto& r : store.rows)
    if (r.fold == kMeanFold && r.spec.scaling == Scaling::z_at_mm_at)
      by_subject[r.subject_id][r.spec.ordinal()] = r.f1;
  for (const auto& [subject, _] : by_subject) table.subjects.push_back(subject);

  for (const auto& spec : enumerate_combinations(true)) {
    SpecScore s;
    s.spec = spec;
    for (const auto& subject : table.subjects) {
      const auto& m = by_subject[subject];
      const auto it = m.find(spec.ordinal());
      if (it == m.end()) break;
      s.per_subject.push_back(it->second);
    }
    if (s.per_subject.empty() || s.per_subject.size() != table.subjects.size()) continue;
    s.mean = mean_of(s.per_subject);
    if (s.per_subject.size() > 1) {
      double ss = 0;
      for (double v : s.per_subject) ss += (v - s.mean) * (v - s.mean);
      s.sd = std::sqrt(ss / static_cast<double>(s.per_subject.size() - 1));
    }
    table.specs.push_back(std::move(s));
  }
  table.complete = !table.subjects.empty() &&
                   static_cast<int>(table.specs.size()) == kRestrictedSpecs;
  return table;
}

std::vector<MethodMean> method_means(const SubjectTable& table, bool partial) {
  if (!table.complete && !partial)
    fail(ErrorKind::incomplete, "method means need all 288 combinations for every subject; found " +
                                    std::to_string(table.specs.size()));
  std::vector<MethodMean> out;
  for (const auto& sm : step_methods()) {
    MethodMean m;
    m.method = sm;
    m.per_subject.assign(table.subjects.size(), 0.0);
    for (const auto& s : table.specs) {
      if (method_of(s.spec, sm.step) != sm.method) continue;
      ++m.n_specs;
      for (std::size_t j = 0; j < s.per_subject.size(); ++j) m.per_subject[j] += s.per_subject[j];
    }
    if (m.n_specs > 0)
      for (auto& v : m.per_subject) v /= m.n_specs;
    m.overall = mean_of(m.per_subject);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<double> fractional_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double percent_of_max(double score, double min, double total, int methods) {
  return (score - min) / (total - methods * min) * 100.0;
}

std::vector<RankEntry> rank_scores(const SubjectTable& table) {
  if (!table.complete)
    fail(ErrorKind::incomplete, "rank scores need exactly the 288 combinations with all-trials "
                                "scaling for every subject; found " +
                                    std::to_string(table.specs.size()));
  std::vector<double> f1;
  for (const auto& s : table.specs) f1.push_back(s.mean);
  const auto ranks = fractional_ranks(f1);
  const double n = static_cast<double>(ranks.size());
  const double total = n * (n - 1) / 2;

  std::vector<RankEntry> out;
  for (const auto& sm : step_methods()) {
    const int k = static_cast<int>(methods_of_step(sm.step).size());
    const double m = n / k;
    RankEntry e;
    e.method = sm;
    for (std::size_t i = 0; i < table.specs.size(); ++i)
      if (method_of(table.specs[i].spec, sm.step) == sm.method) e.score += ranks[i];
    e.min = m * (m - 1) / 2;
    e.max = total - (n - m) * (n - m - 1) / 2;
    e.pct_max = percent_of_max(e.score, e.min, total, k);
    out.push_back(e);
  }
  return out;
}

std::vector<BestEntry> best_table(const SubjectTable& table, std::size_t top_n) {
  std::vector<BestEntry> out;
  for (const auto& s : table.specs) out.push_back({s.spec, s.mean, s.sd});
  std::sort(out.begin(), out.end(), [](const BestEntry& a, const BestEntry& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.spec.key() < b.spec.key();
  });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

std::vector<PairwiseTest> pairwise_tests(const SubjectTable& table) {
  std::map<int, double> score;
  for (const auto& s : table.specs) score[s.spec.ordinal()] = s.mean;

  std::vector<PairwiseTest> out;
  for (const auto& step : steps_of(step_methods())) {
    const auto methods = methods_of_step(step);
    const std::size_t first = out.size();
    for (std::size_t a = 0; a < methods.size(); ++a) {
      for (std::size_t b = a + 1; b < methods.size(); ++b) {
        std::vector<double> xs, ys;
        for (const auto& s : table.specs) {
          if (method_of(s.spec, step) != methods[a]) continue;
          const auto it = score.find(with_method(s.spec, step, methods[b]).ordinal());
          if (it == score.end()) continue;
          xs.push_back(s.mean);
          ys.push_back(it->second);
        }
        if (xs.size() < 2) continue;
        PairwiseTest t;
        t.step = step;
        t.method_a = methods[a];
        t.method_b = methods[b];
        t.n = static_cast<int>(xs.size());
        t.mean_a = mean_of(xs);
        t.mean_b = mean_of(ys);
        const auto r = paired_t_test(xs, ys);
        t.t = r.t;
        t.p = r.p;
        t.df = r.df;
        try {
          t.cohens_d = cohens_d_paired(xs, ys);
        } catch (const Error&) {
          t.cohens_d.reset();
        }
        out.push_back(t);
      }
    }
    const int k = static_cast<int>(methods.size() * (methods.size() - 1) / 2);
    for (std::size_t i = first; i < out.size(); ++i)
      out[i].p_bonferroni = std::min(1.0, out[i].p * k);
  }
  return out;
}

std::string render_step_chart(const std::vector<MethodMean>& means) {
  const int bar = 28, gap = 6, group_gap = 30, height = 300, top = 30, left = 50;
  const auto steps = steps_of([&] {
    std::vector<StepMethod> v;
    for (const auto& m : means) v.push_back(m.method);
    return v;
  }());
  const int width = left + static_cast<int>(means.size()) * (bar + gap) +
                    static_cast<int>(steps.size()) * group_gap + 20;
  const int bottom = top + height;
  auto y_of = [&](double v) { return bottom - v * height; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << bottom + 70 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = y_of(tick / 10.0);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y + 4, 1)
        << "\" text-anchor=\"end\">" << tick * 10 << "</text>\n";
  }
  int x = left + 10;
  std::string current;
  for (const auto& m : means) {
    if (m.method.step != current) {
      if (!current.empty()) x += group_gap;
      current = m.method.step;
      svg << "<text x=\"" << x << "\" y=\"" << bottom + 50 << "\" font-weight=\"bold\">"
          << current << "</text>\n";
    }
    const double y = y_of(m.overall);
    svg << "<rect x=\"" << x << "\" y=\"" << fixed(y, 1) << "\" width=\"" << bar << "\" height=\""
        << fixed(bottom - y, 1) << "\" fill=\"#4a78a8\"/>\n";
    svg << "<text x=\"" << x + bar / 2 << "\" y=\"" << fixed(y - 4, 1)
        << "\" text-anchor=\"middle\">" << fixed(m.overall * 100, 1) << "</text>\n";
    svg << "<text x=\"" << x + bar / 2 << "\" y=\"" << bottom + 16
        << "\" text-anchor=\"middle\">" << m.method.method << "</text>\n";
    x += bar + gap;
  }
  const double chance = y_of(1.0 / kSessions);
  svg << "<line x1=\"" << left << "\" y1=\"" << fixed(chance, 1) << "\" x2=\"" << width - 10
      << "\" y2=\"" << fixed(chance, 1) << "\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>\n";
  svg << "<text x=\"" << width - 10 << "\" y=\"" << fixed(chance - 4, 1)
      << "\" text-anchor=\"end\" fill=\"#c0392b\">16.7% chance</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

ReportFiles write_reports(const ResultStore& store, const std::filesystem::path& out_dir,
                          bool partial) {
  if (store.mean_rows().empty()) fail(ErrorKind::invalid_data, "results store has no mean rows");
  std::filesystem::create_directories(out_dir);
  const SubjectTable table = spec_scores(store);
  if (table.specs.empty())
    fail(ErrorKind::incomplete, "no combination is present for every subject");

  {
    auto out = open_out(out_dir / "best_table.csv");
    out << "rank,filtering,deriv,T,red,wn,scale,clf,mean_f1,sd_f1\n";
    int rank = 1;
    for (const auto& e : best_table(table, table.specs.size()))
      out << rank++ << ',' << spec_columns(e.spec) << ',' << fixed(e.mean) << ',' << fixed(e.sd) << '\n';
  }

  ReportFiles files;
  if (!table.complete && !partial) {
    files.message = "store covers " + std::to_string(table.specs.size()) +
                    " of 288 combinations for every subject; method means, rank scores and "
                    "tests need the complete grid (method means are available with --partial)";
    return files;
  }

  const auto means = method_means(table, partial);
  {
    auto out = open_out(out_dir / "method_means.csv");
    out << "step,method,n_specs,overall";
    for (const auto& s : table.subjects) out << ',' << s;
    out << '\n';
    for (const auto& m : means) {
      out << m.method.step << ',' << m.method.method << ',' << m.n_specs << ',' << fixed(m.overall);
      for (double v : m.per_subject) out << ',' << fixed(v);
      out << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "fig3.svg");
    out << render_step_chart(means);
  }
  if (!table.complete) {
    files.message = "partial store: rank scores and tests need all 288 combinations";
    return files;
  }

  {
    auto out = open_out(out_dir / "rank_table.csv");
    out << "step,method,rank_score,min,max,pct_max\n";
    for (const auto& e : rank_scores(table))
      out << e.method.step << ',' << e.method.method << ',' << fixed(e.score, 1) << ','
          << fixed(e.min, 0) << ',' << fixed(e.max, 0) << ',' << fixed(e.pct_max, 1) << '\n';
  }
  {
    auto out = open_out(out_dir / "pairwise_tests.csv");
    out << "step,method_a,method_b,n,mean_a,mean_b,t,df,p,p_bonferroni,cohens_d\n";
    for (const auto& t : pairwise_tests(table))
      out << t.step << ',' << t.method_a << ',' << t.method_b << ',' << t.n << ','
          << fixed(t.mean_a) << ',' << fixed(t.mean_b) << ',' << fixed(t.t, 4) << ',' << t.df << ','
          << fixed(t.p, 6) << ',' << fixed(t.p_bonferroni, 6) << ','
          << (t.cohens_d ? fixed(*t.cohens_d, 4) : std::string("nan")) << '\n';
  }
  files.aggregates_written = true;
  return files;
}

}  // namespace gaitbench
