// gaitbench: synthesize data, run the preprocessing x classifier grid, and report.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "gaitbench/error.hpp"
#include "gaitbench/experiment.hpp"
#include "gaitbench/ingest.hpp"
#include "gaitbench/preprocess.hpp"

using namespace gaitbench;

namespace {

constexpr int kTasksFailedExit = 1;

std::vector<SubjectDataset> load_subjects(const std::filesystem::path& dir,
                                          const std::vector<std::string>& wanted, bool lenient) {
  if (dir.empty()) fail(ErrorKind::invalid_argument, "--data-dir is required");
  LoadOptions options;
  options.lenient = lenient;
  auto loaded = load_dataset(dir, options);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  if (wanted.empty()) return std::move(loaded.subjects);

  std::vector<SubjectDataset> out;
  std::set<std::string> missing(wanted.begin(), wanted.end());
  for (auto& s : loaded.subjects)
    if (missing.erase(s.subject_id)) out.push_back(std::move(s));
  if (!missing.empty())
    fail(ErrorKind::invalid_argument, "subject '" + *missing.begin() + "' not found in " + dir.string());
  return out;
}

std::string file_safe(std::string key) {
  for (auto& c : key)
    if (c == ';') c = '_';
    else if (c == '=') c = '-';
  return key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait classification benchmark harness"};
  app.require_subcommand(1);

  std::filesystem::path data_dir, out_dir, results_path;
  std::uint64_t seed = 1;
  int n_subjects = 1;
  std::vector<std::string> subject_ids;
  std::string filter_text, grid_name = "coarse";
  int workers = 1;
  bool pca_foldwise = false, all_scalings = false, lenient = false, partial = false, quiet = false;
  std::optional<std::uint64_t> permute_seed;
  SynthOptions synth_options;
  std::size_t top = 10;

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in the canonical schema");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--subjects", n_subjects, "Number of subjects")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--noise", synth_options.noise_fraction, "Noise sigma relative to body weight");
  synth->add_option("--session-effect", synth_options.session_effect, "Relative per-session offset");

  auto* run = app.add_subcommand("run", "Evaluate every (subject, combination) pair");
  run->add_option("--data-dir", data_dir, "Dataset directory")->required();
  run->add_option("--out", out_dir, "Output directory (results.csv)")->required();
  run->add_option("--seed", seed, "Global seed");
  run->add_option("--subjects", subject_ids, "Subject ids to include")->delimiter(',');
  run->add_option("--filter", filter_text, "Combination filter, e.g. 'clf=svm|rfc;red=pca'");
  run->add_option("--grid", grid_name, "Hyperparameter grid")->check(CLI::IsMember({"paper", "coarse"}));
  run->add_option("--workers", workers, "Concurrent tasks")
      ->envname("GAITBENCH_WORKERS")
      ->check(CLI::PositiveNumber);
  run->add_flag("--pca-foldwise", pca_foldwise, "Fit PCA on each fold's training trials only");
  run->add_flag("--all-scalings", all_scalings,
                "Use all four scaling methods (runnable part of the 1,152 grid)");
  run->add_option("--permute-labels", permute_seed, "Shuffle session labels with this seed");
  run->add_flag("--lenient", lenient, "Admit subjects with missing trials");
  run->add_flag("-q,--quiet", quiet, "Only print the summary");

  auto* report = app.add_subcommand("report", "Aggregate a results store into report tables");
  report->add_option("--results", results_path, "results.csv (default: <out>/results.csv)");
  report->add_option("--out", out_dir, "Report directory")->required();
  report->add_option("--top", top, "Rows of the best table to print");
  report->add_flag("--partial", partial, "Compute method means from an incomplete store");

  auto* prep = app.add_subcommand("preprocess", "Dump feature matrices and selected cut-offs");
  prep->add_option("--data-dir", data_dir, "Dataset directory")->required();
  prep->add_option("--out", out_dir, "Output directory")->required();
  prep->add_option("--subjects", subject_ids, "Subject ids to include")->delimiter(',');
  prep->add_option("--filter", filter_text, "Combination filter (classifier is ignored)");
  prep->add_flag("--all-scalings", all_scalings, "Include all four scaling methods");
  prep->add_flag("--lenient", lenient, "Admit subjects with missing trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return static_cast<int>(ErrorKind::invalid_argument);
  }

  try {
    if (*synth) {
      const auto subjects = synthesize_dataset(n_subjects, seed, synth_options);
      write_dataset(subjects, out_dir);
      std::cout << "wrote " << subjects.size() << " subjects x " << kTrialsPerSubject << " trials to "
                << out_dir.string() << '\n';
      return 0;
    }

    if (*run) {
      const auto specs = select_specs(SpecFilter::parse(filter_text), all_scalings);
      if (specs.empty()) fail(ErrorKind::invalid_argument, "filter selects no combinations");
      const auto subjects = load_subjects(data_dir, subject_ids, lenient);
      RunConfig config;
      config.output_dir = out_dir;
      config.seed = seed;
      config.preset = parse_grid_preset(grid_name);
      config.workers = workers;
      config.pca_foldwise = pca_foldwise;
      config.specs = specs;
      config.label_permutation_seed = permute_seed;
      if (!quiet) config.progress = [](const std::string& line) { std::cerr << line << '\n'; };
      const auto summary = run_grid(subjects, config);
      std::cout << summary.computed + static_cast<int>(summary.failures.size()) << " new tasks ("
                << summary.skipped << " already present, " << summary.failures.size()
                << " failed) of " << summary.tasks << '\n';
      for (const auto& f : summary.failures)
        std::cerr << "failed: " << f.subject_id << ' ' << f.spec_key << ": " << f.message << '\n';
      return summary.failures.empty() ? 0 : kTasksFailedExit;
    }

    if (*report) {
      if (results_path.empty()) results_path = out_dir / "results.csv";
      const auto store = ResultStore::load(results_path);
      const auto files = write_reports(store, out_dir, partial);
      const auto table = spec_scores(store);
      std::printf("%-4s %-66s %8s %8s\n", "rank", "combination", "mean F1", "sd");
      int rank = 1;
      for (const auto& e : best_table(table, top))
        std::printf("%-4d %-66s %8.4f %8.4f\n", rank++, e.spec.key().c_str(), e.mean, e.sd);
      if (!files.aggregates_written) {
        std::cerr << files.message << '\n';
        return static_cast<int>(ErrorKind::incomplete);
      }
      std::cout << "reports written to " << out_dir.string() << '\n';
      return 0;
    }

    if (*prep) {
      const auto specs = select_specs(SpecFilter::parse(filter_text), all_scalings);
      const auto subjects = load_subjects(data_dir, subject_ids, lenient);
      std::filesystem::create_directories(out_dir);
      int written = 0;
      for (const auto& ds : subjects) {
        const PreparedSubject prepared(ds);
        {
          std::ofstream out(out_dir / (ds.subject_id + "_cutoffs.csv"));
          out << "session,trial,L_fa,L_ml,L_v,R_fa,R_ml,R_v\n";
          for (std::size_t i = 0; i < ds.trials.size(); ++i) {
            out << ds.trials[i].session << ',' << ds.trials[i].trial;
            for (double c : prepared.cutoffs()[i]) out << ',' << c;
            out << '\n';
          }
        }
        std::set<std::string> done;
        for (auto spec : specs) {
          spec.classifier = ClassifierKind::svm;
          if (!done.insert(spec.key()).second) continue;
          const auto fm = build_features(prepared, spec);
          std::ofstream out(out_dir / (ds.subject_id + "__" + file_safe(spec.key()) + ".csv"));
          out.precision(17);
          for (Eigen::Index r = 0; r < fm.values.rows(); ++r) {
            out << fm.labels[r];
            for (Eigen::Index c = 0; c < fm.values.cols(); ++c) out << ',' << fm.values(r, c);
            out << '\n';
          }
          ++written;
        }
      }
      std::cout << "wrote " << written << " feature matrices to " << out_dir.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::numerical);
  }
  return 0;
}
