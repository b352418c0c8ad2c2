#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout and the exit status.
Outcome cli(const std::string& args) {
  const std::string cmd = "GAITBENCH_WORKERS= "s + GAITBENCH_CLI + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (fgets(buf, sizeof buf, pipe)) o.out += buf;
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gaitbench_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes a deterministic dataset") {
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  CHECK(cli("synth --subjects 2 --seed 1 --out " + a.string()).code == 0);
  CHECK(cli("synth --subjects 2 --seed 1 --out " + b.string()).code == 0);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) {
      ++files;
      CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
    }
  CHECK(files == 2 * 90 * 2 + 1);
  CHECK(fs::exists(a / "meta.csv"));
}

TEST_CASE("argument errors exit with the usage code") {
  CHECK(cli("synth --subjects 0 --out " + scratch("zero").string()).code == 2);
  CHECK(cli("run --out " + scratch("nodata").string()).code == 2);
  CHECK(cli("run --data-dir /nonexistent/gaitbench --out " + scratch("nodata").string()).code == 3);
  CHECK(cli("run --data-dir . --out x --grid fine").code == 2);
  CHECK(cli("frobnicate").code == 2);
}

TEST_CASE("run counts filtered tasks, resumes and reports") {
  const auto data = scratch("run_data"), out = scratch("run_out");
  REQUIRE(cli("synth --subjects 1 --seed 2 --out " + data.string()).code == 0);
  const std::string run = "run -q --data-dir " + data.string() + " --out " + out.string() +
                          " --filter 'clf=svm;red=pca;T=11;filtering=none' --workers 2";
  const auto first = cli(run);
  CHECK(first.code == 0);
  CHECK(first.out.rfind("4 new tasks", 0) == 0);
  const auto second = cli(run);
  CHECK(second.code == 0);
  CHECK(second.out.rfind("0 new tasks", 0) == 0);

  // four of 288 combinations: best table only, aggregates refused
  const auto rep = cli("report --out " + (out / "report").string() + " --results " +
                       (out / "results.csv").string());
  CHECK(rep.code == 7);
  CHECK(fs::exists(out / "report" / "best_table.csv"));
  CHECK(rep.out.find("clf=svm") != std::string::npos);
  CHECK(cli("report --out " + (out / "report").string() + " --results /nonexistent.csv").code == 3);
}

TEST_CASE("unknown subject ids are rejected") {
  const auto data = scratch("count_data"), out = scratch("count_out");
  REQUIRE(cli("synth --subjects 1 --seed 2 --out " + data.string()).code == 0);
  CHECK(cli("run -q --data-dir " + data.string() + " --out " + out.string() +
            " --filter 'clf=svm;red=pca' --subjects S99")
            .code == 2);
}

TEST_CASE("preprocess dumps features and cut-offs") {
  const auto data = scratch("prep_data"), out = scratch("prep_out");
  REQUIRE(cli("synth --subjects 1 --seed 2 --out " + data.string()).code == 0);
  CHECK(cli("preprocess --data-dir " + data.string() + " --out " + out.string() +
            " --filter 'red=td;T=11;filtering=auto_cutoff;deriv=grf;wn=0;clf=svm'")
            .code == 0);
  bool cutoffs = false;
  int features = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    cutoffs |= e.path().filename().string().ends_with("_cutoffs.csv");
    features += e.path().extension() == ".csv";
  }
  CHECK(cutoffs);
  CHECK(features >= 2);
}

}  // TEST_SUITE
