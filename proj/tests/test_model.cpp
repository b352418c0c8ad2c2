#include <doctest.h>

#include <set>

#include "gaitbench/error.hpp"
#include "gaitbench/model.hpp"

using namespace gaitbench;

TEST_SUITE("model") {

TEST_CASE("enumeration sizes and order") {
  const auto all = enumerate_combinations(false);
  const auto restricted = enumerate_combinations(true);
  CHECK(all.size() == 1152);
  CHECK(restricted.size() == 288);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].ordinal() == static_cast<int>(i));
  for (const auto& s : restricted) CHECK(s.scaling == Scaling::z_at_mm_at);

  std::set<std::string> keys;
  for (const auto& s : all) keys.insert(s.key());
  CHECK(keys.size() == 1152);
  CHECK(std::is_sorted(all.begin(), all.end()));
}

TEST_CASE("single-trial scaling is only runnable for tc") {
  int runnable = 0;
  for (const auto& s : enumerate_combinations(false)) runnable += s.runnable();
  // tc: every scaling (2*2*3*2*4*4 = 384); td/pca: all-trials only (2*2*3*2*2*1*4 = 192)
  CHECK(runnable == 384 + 192);
}

TEST_CASE("key round trip") {
  for (const auto& s : enumerate_combinations(false)) CHECK(CombinationSpec::parse(s.key()) == s);
  CHECK(CombinationSpec{}.key() ==
        "filtering=none;deriv=grf;T=101;red=tc;wn=0;scale=z_at_mm_at;clf=svm");
}

TEST_CASE("malformed keys are rejected") {
  const auto bad = {"", "filtering=none", "filtering=maybe;deriv=grf;T=101;red=tc;wn=0;scale=z_at_mm_at;clf=svm",
                    "filtering=none;deriv=grf;T=50;red=tc;wn=0;scale=z_at_mm_at;clf=svm",
                    "filtering=none;deriv=grf;T=101;red=tc;wn=0;scale=z_at_mm_at;clf=svm;x=1",
                    "filtering=none;filtering=none;deriv=grf;T=101;red=tc;wn=0;scale=z_at_mm_at"};
  for (const char* k : bad) CHECK_THROWS_AS(CombinationSpec::parse(k), Error);
}

TEST_CASE("feature vector lengths") {
  FeatureLayout tc;
  tc.reduction = Reduction::tc;
  for (auto [t, len] : {std::pair{11, 66}, {101, 606}, {1001, 6006}}) {
    tc.time_points = t;
    CHECK(tc.length() == len);
  }
  FeatureLayout td;
  td.reduction = Reduction::td;
  td.derivative = Derivative::grf;
  CHECK(td.length() == 28);
  td.derivative = Derivative::jerk;
  CHECK(td.length() == 24);
}

TEST_CASE("trial validation names the violated invariant") {
  ForceTrial t;
  t.subject_id = "X";
  t.body_weight = 700;
  for (FootForces* f : {&t.left, &t.right})
    for (auto& ch : f->channels) ch.assign(10, 100.0);
  CHECK_NOTHROW(validate_trial(t));

  auto short_channel = t;
  short_channel.left[Channel::fore_aft].pop_back();
  CHECK_THROWS_AS(validate_trial(short_channel), Error);

  auto below = t;
  below.right[Channel::vertical][3] = 5.0;
  CHECK_THROWS_WITH_AS(validate_trial(below), doctest::Contains("below 20"), Error);

  auto weightless = t;
  weightless.body_weight = 0;
  CHECK_THROWS_AS(validate_trial(weightless), Error);

  auto session = t;
  session.session = 7;
  CHECK_THROWS_AS(validate_trial(session), Error);
}

}  // TEST_SUITE
