#include <gtest/gtest.h>

#include <random>

#include "survplane/domain.hpp"

using namespace survplane;

namespace {

Cohort two_eye_cohort() {
  Cohort cohort;
  cohort.feature_dim = 2;
  cohort.labeled = true;
  // converter eye: converts 10 months after baseline
  std::vector<Visit> a;
  for (double t : {0.0, 6.0, 12.0}) {
    Visit v;
    v.visit_time = t;
    v.features = {t, 1.0};
    v.label = SurvivalLabel{10.0 - t, 1};
    a.push_back(v);
  }
  // censored eye: last visit at 12 months
  std::vector<Visit> b;
  for (double t : {0.0, 12.0}) {
    Visit v;
    v.visit_time = t;
    v.features = {t, -1.0};
    v.label = SurvivalLabel{12.0 - t, 0};
    b.push_back(v);
  }
  cohort.eyes["a"] = a;
  cohort.eyes["b"] = b;
  return cohort;
}

}  // namespace

TEST(NormalizeTime, MapsHorizonToOne) {
  EXPECT_DOUBLE_EQ(normalize_time(36.0), 1.0);
  EXPECT_DOUBLE_EQ(normalize_time(0.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize_time(18.0), 0.5);
}

TEST(NormalizeTime, PassesThroughBeyondHorizon) {
  EXPECT_DOUBLE_EQ(normalize_time(72.0), 2.0);
  TimeNormalizer norm{24.0};
  EXPECT_DOUBLE_EQ(normalize_time(48.0, norm), 2.0);
}

TEST(NormalizeTime, RejectsNegativeMonths) {
  EXPECT_THROW(normalize_time(-1.0), std::invalid_argument);
  EXPECT_THROW(normalize_time(1.0, TimeNormalizer{0.0}), std::invalid_argument);
}

TEST(NormalizeTime, IsLinear) {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> months(0.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    const double a = months(gen), b = months(gen);
    EXPECT_NEAR(normalize_time(a + b), normalize_time(a) + normalize_time(b), 1e-12);
  }
}

TEST(DeriveStage, ConvertedVisit) {
  EXPECT_EQ(derive_stage({-2.0, 1}), 1);
  EXPECT_EQ(derive_stage({0.0, 1}), 1);
}

TEST(DeriveStage, FutureConverterStillEarlyStage) { EXPECT_EQ(derive_stage({6.0, 1}), 0); }

TEST(DeriveStage, CensoredIsEarlyStage) { EXPECT_EQ(derive_stage({12.0, 0}), 0); }

TEST(DeriveStage, MonotoneAlongConverterVisits) {
  // Walking a converter eye forward in time, the stage switches to 1 once
  // and never back.
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> conv(0.0, 60.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double conversion = conv(gen);
    int prev_stage = 0;
    for (double t = 0.0; t <= 80.0; t += 4.0) {
      const int stage = derive_stage({conversion - t, 1});
      EXPECT_GE(stage, prev_stage);
      prev_stage = stage;
    }
  }
}

TEST(ValidateCohort, AcceptsWellFormedCohort) {
  EXPECT_TRUE(validate_cohort(two_eye_cohort()).ok());
}

TEST(ValidateCohort, FlagsNonIncreasingVisitTimes) {
  Cohort cohort;
  cohort.feature_dim = 1;
  cohort.labeled = false;
  std::vector<Visit> visits;
  for (double t : {0.0, 6.0, 6.0}) {
    Visit v;
    v.visit_time = t;
    v.features = {0.0};
    visits.push_back(v);
  }
  cohort.eyes["e"] = visits;
  const ValidationReport report = validate_cohort(cohort);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].eye_id, "e");
  EXPECT_EQ(report.violations[0].visit_index, 2u);
}

TEST(ValidateCohort, FlagsInconsistentConversionTimes) {
  // T drops from 12 to 7 over a 6-month gap: |12 - 6 - 7| = 1 > 1e-6.
  Cohort cohort;
  cohort.feature_dim = 1;
  cohort.labeled = true;
  Visit v1;
  v1.visit_time = 0.0;
  v1.features = {0.0};
  v1.label = SurvivalLabel{12.0, 1};
  Visit v2;
  v2.visit_time = 6.0;
  v2.features = {0.0};
  v2.label = SurvivalLabel{7.0, 1};
  cohort.eyes["e"] = {v1, v2};
  const ValidationReport report = validate_cohort(cohort);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].message.find("inconsistent"), std::string::npos);
}

TEST(ValidateCohort, FlagsDimensionMismatch) {
  Cohort cohort = two_eye_cohort();
  cohort.eyes["a"][1].features = {1.0, 2.0, 3.0};
  const ValidationReport report = validate_cohort(cohort);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].visit_index, 1u);
}

TEST(ValidateCohort, FlagsEventFlipAndNegativeCensoring) {
  Cohort cohort = two_eye_cohort();
  cohort.eyes["b"][1].label = SurvivalLabel{-1.0, 0};  // censored before visit + event flip
  const ValidationReport report = validate_cohort(cohort);
  EXPECT_EQ(report.violations.size(), 1u);

  cohort = two_eye_cohort();
  cohort.eyes["a"][2].label = SurvivalLabel{2.0, 0};  // converter eye switches to censored
  EXPECT_FALSE(validate_cohort(cohort).ok());
}

TEST(ValidateCohort, FlagsMissingLabelInLabeledCohort) {
  Cohort cohort = two_eye_cohort();
  cohort.eyes["b"][0].label.reset();
  EXPECT_FALSE(validate_cohort(cohort).ok());
}

TEST(ValidateCohort, ViewDimensionsChecked) {
  Cohort cohort = two_eye_cohort();
  cohort.eyes["a"][0].views = {{1.0, 2.0}, {3.0}};
  EXPECT_FALSE(validate_cohort(cohort).ok());
}

TEST(WithoutLabels, StripsEveryLabel) {
  const Cohort stripped = without_labels(two_eye_cohort());
  EXPECT_FALSE(stripped.labeled);
  for (const auto& [id, visits] : stripped.eyes)
    for (const auto& v : visits) EXPECT_FALSE(v.label.has_value());
}
