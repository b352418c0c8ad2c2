#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "gaitbench/error.hpp"
#include "gaitbench/ingest.hpp"
#include "gaitbench/preprocess.hpp"

using namespace gaitbench;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gaitbench_ingest_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("stance extraction picks the longest run, earliest on ties") {
  const std::vector<double> v{0, 30, 30, 0, 25, 25, 25, 10, 40, 40, 40, 0};
  CHECK(extract_stance(v) == IndexRange{4, 7});
  const std::vector<double> tie{30, 30, 0, 30, 30};
  CHECK(extract_stance(tie) == IndexRange{0, 2});
  CHECK(extract_stance(std::vector<double>{20.0}) == IndexRange{0, 1});  // threshold is inclusive
  CHECK_THROWS_AS(extract_stance(std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(extract_stance(std::vector<double>{}), Error);
}

TEST_CASE("cropping applies each foot's own range to all its channels") {
  ForceTrial t;
  t.subject_id = "X";
  t.body_weight = 700;
  t.left[Channel::vertical] = {0, 50, 60, 0};
  t.left[Channel::fore_aft] = {1, 2, 3, 4};
  t.left[Channel::medio_lateral] = {5, 6, 7, 8};
  t.right[Channel::vertical] = {50, 60, 70, 0};
  t.right[Channel::fore_aft] = {1, 2, 3, 4};
  t.right[Channel::medio_lateral] = {5, 6, 7, 8};
  const auto c = crop_to_stance(t);
  CHECK(c.left[Channel::fore_aft] == std::vector<double>{2, 3});
  CHECK(c.right[Channel::medio_lateral] == std::vector<double>{5, 6, 7});
  CHECK_NOTHROW(validate_trial(c));
}

TEST_CASE("synthesis is deterministic and well formed") {
  const auto a = synthesize_dataset(2, 11);
  const auto b = synthesize_dataset(2, 11);
  CHECK(a == b);
  CHECK(a.size() == 2);
  CHECK(a[0].subject_id == "S01");
  CHECK(a[1].subject_id == "S02");
  for (const auto& ds : a) {
    CHECK(ds.trials.size() == 90);
    CHECK_NOTHROW(validate_dataset(ds));
    for (const auto& t : ds.trials) {
      CHECK(t.left.size() >= 400);  // plausible stance durations at 1 kHz
      CHECK(t.left.size() <= 1000);
    }
  }
  CHECK_FALSE(synthesize_dataset(1, 12)[0] == a[0]);
  CHECK_THROWS_AS(synthesize_dataset(0, 1), Error);
}

TEST_CASE("synthetic stance has the expected double hump") {
  SynthOptions quiet;
  quiet.noise_fraction = 0;
  const auto ds = synthesize_dataset(3, 5, quiet);
  for (const auto& subject : ds) {
    const auto& t = subject.trials.front();
    const auto v = time_normalize(t.left[Channel::vertical], 101);
    std::vector<double> bw(v.size());
    std::transform(v.begin(), v.end(), bw.begin(), [&](double x) { return x / t.body_weight; });
    const auto first = std::max_element(bw.begin(), bw.begin() + 50);
    const auto second = std::max_element(bw.begin() + 50, bw.end());
    const auto valley = std::min_element(first, second);
    CHECK(*first == doctest::Approx(1.1).epsilon(0.12));
    CHECK(*second == doctest::Approx(1.1).epsilon(0.12));
    CHECK(*valley == doctest::Approx(0.75).epsilon(0.15));
    CHECK(std::abs((first - bw.begin()) - 25) <= 8);
    CHECK(std::abs((second - bw.begin()) - 75) <= 8);
    const auto fa = time_normalize(t.left[Channel::fore_aft], 101);
    CHECK(*std::min_element(fa.begin(), fa.end()) / t.body_weight == doctest::Approx(-0.2).epsilon(0.35));
  }
}

TEST_CASE("zero noise gives identical trials within a session") {
  SynthOptions quiet;
  quiet.noise_fraction = 0;
  const auto ds = synthesize_dataset(1, 3, quiet)[0];
  for (int s = 0; s < kSessions; ++s) {
    const auto& first = ds.trials[s * kTrialsPerSession];
    for (int i = 1; i < kTrialsPerSession; ++i) {
      const auto& t = ds.trials[s * kTrialsPerSession + i];
      CHECK(t.left == first.left);
      CHECK(t.right == first.right);
    }
  }
  // ...while sessions differ
  CHECK_FALSE(ds.trials[0].left == ds.trials[kTrialsPerSession].left);
}

TEST_CASE("write then load is the identity") {
  const auto dir = scratch_dir("roundtrip");
  const auto data = synthesize_dataset(2, 21);
  write_dataset(data, dir);
  CHECK(std::filesystem::exists(dir / "meta.csv"));
  const auto loaded = load_dataset(dir);
  CHECK(loaded.warnings.empty());
  REQUIRE(loaded.subjects.size() == 2);
  CHECK(loaded.subjects == data);
  std::filesystem::remove_all(dir);
}

TEST_CASE("loading reports missing and malformed inputs") {
  CHECK_THROWS_AS(load_dataset(scratch_dir("absent")), Error);

  const auto dir = scratch_dir("broken");
  write_dataset(synthesize_dataset(1, 2), dir);
  const auto victim = dir / "trials" / "S01_3_7_L.csv";
  REQUIRE(std::filesystem::exists(victim));
  std::filesystem::remove(victim);
  try {
    load_dataset(dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_data);
  }
  LoadOptions lenient;
  lenient.lenient = true;
  const auto partial = load_dataset(dir, lenient);
  CHECK_FALSE(partial.warnings.empty());

  {
    std::ofstream out(victim);
    out << "t_ms,fx,fy,fz\n0,1,2,abc\n";
  }
  CHECK_THROWS_AS(load_dataset(dir), Error);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
