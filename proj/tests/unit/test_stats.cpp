#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "json.hpp"
#include "oracles.hpp"
#include "sher/errors.hpp"
#include "sher/stats.hpp"

using namespace sher;

namespace {

TrialSummary trial(double mean_fs, double max_fs, bool completed = true, double time = 30.0) {
  TrialSummary s;
  s.mean_fs = mean_fs;
  s.max_fs = max_fs;
  s.mean_handle_force = 2 * mean_fs;
  s.mean_handle_torque = 3 * mean_fs;
  s.pct_over_threshold = max_fs > 120 ? 10.0 : 0.0;
  s.completed = completed;
  s.completion_time = time;
  return s;
}

}  // namespace

TEST(Stats, MetricNamesAreUnique) {
  std::set<std::string_view> names;
  for (Metric m : kAllMetrics) {
    names.insert(metric_name(m));
    EXPECT_FALSE(metric_unit(m).empty());
  }
  EXPECT_EQ(names.size(), kAllMetrics.size());
}

TEST(Stats, SampleStatsHandExamples) {
  const std::vector<double> one = {7.5};
  SampleStats s = sample_stats(one);
  EXPECT_EQ(s.mean, 7.5);
  EXPECT_EQ(s.stddev, 0.0);
  const std::vector<double> two = {30, 50};
  s = sample_stats(two);
  EXPECT_DOUBLE_EQ(s.mean, 40.0);
  EXPECT_NEAR(s.stddev, std::sqrt(200.0), 1e-12);
  EXPECT_THROW((void)sample_stats(std::span<const double>{}), ContractError);
}

TEST(Stats, SampleStatsMatchStreamingOracle) {
  std::mt19937_64 rng(8);
  std::lognormal_distribution<double> d(4.0, 0.6);
  std::vector<double> x;
  oracle::Welford w;
  for (int i = 0; i < 25; ++i) {
    x.push_back(d(rng));
    w.add(x.back());
  }
  const SampleStats s = sample_stats(x);
  EXPECT_NEAR(s.mean, static_cast<double>(w.mean), 1e-12 * std::abs(s.mean));
  EXPECT_NEAR(s.stddev, static_cast<double>(w.stddev()), 1e-12 * s.stddev);
  EXPECT_EQ(s.n, 25U);
}

TEST(Stats, SummarizeExcludesIncompleteFromTimeOnly) {
  const std::vector<TrialSummary> t = {trial(30, 100, true, 20), trial(50, 200, false, 99),
                                       trial(40, 150, true, 30)};
  const ModeSummary m = summarize(ControlMode::Coop, t);
  EXPECT_EQ(m.trials, 3U);
  EXPECT_EQ(m.completed, 2U);
  EXPECT_DOUBLE_EQ(m[Metric::MeanFs].mean, 40.0);
  EXPECT_EQ(m[Metric::MaxFs].n, 3U);
  EXPECT_EQ(m[Metric::CompletionTime].n, 2U);
  EXPECT_DOUBLE_EQ(m[Metric::CompletionTime].mean, 25.0);
  EXPECT_THROW((void)summarize(ControlMode::Coop, {}), ContractError);

  const ModeSummary none = summarize(ControlMode::Coop, {trial(1, 2, false)});
  EXPECT_EQ(none[Metric::CompletionTime].n, 0U);
  EXPECT_TRUE(std::isnan(none[Metric::CompletionTime].mean));
}

TEST(Stats, IncompleteBetaEdges) {
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
  // I_x(1, 1) = x; I_x(a, 1) = x^a.
  EXPECT_NEAR(incomplete_beta(1.0, 1.0, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(incomplete_beta(2.5, 1.0, 0.4), std::pow(0.4, 2.5), 1e-14);
  EXPECT_NEAR(incomplete_beta(3.0, 4.0, 0.25) + incomplete_beta(4.0, 3.0, 0.75), 1.0, 1e-14);
}

TEST(Stats, IncompleteBetaMatchesSeriesOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> df_d(1.0, 60.0);
  std::uniform_real_distribution<double> t_d(0.0, 6.0);
  for (int k = 0; k < 50; ++k) {
    const double df = df_d(rng);
    const double t = t_d(rng);
    const double x = df / (df + t * t);
    const double ref = oracle::incomplete_beta_series(df / 2, 0.5, x);
    EXPECT_NEAR(incomplete_beta(df / 2, 0.5, x), ref, 1e-9 * ref) << "df=" << df << " t=" << t;
  }
}

TEST(Stats, StudentCdfMatchesClosedForm) {
  for (int df : {1, 2, 3, 5, 8, 13, 48}) {
    for (double t : {0.1, 0.7, 1.5, 2.0106, 3.3, 7.0}) {
      const double two_tail = 2.0 * (1.0 - student_t_cdf(t, df));
      EXPECT_NEAR(two_tail, static_cast<double>(oracle::t_two_tailed_integer_df(t, df)), 1e-12)
          << df << " " << t;
      EXPECT_NEAR(student_t_cdf(-t, df), 1.0 - student_t_cdf(t, df), 1e-14);
    }
  }
  EXPECT_EQ(student_t_cdf(0.0, 7.0), 0.5);
  // Cauchy: F(1) = 3/4.
  EXPECT_NEAR(student_t_cdf(1.0, 1.0), 0.75, 1e-15);
}

TEST(Stats, PooledTTestFixtures) {
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> fixtures = {
      {{1, 2, 3, 4, 5}, {2, 3, 4, 5, 6}},
      {{637.8, 590.1, 701.3, 655.0}, {248.0, 260.4, 231.7, 290.2, 255.5}},
      {{10.5, 11.2, 9.8}, {12.1, 12.9, 11.7, 13.3, 12.0, 12.6}},
      {{0.001, 0.002}, {0.0015, 0.0031}},
  };
  for (const auto& [a, b] : fixtures) {
    const TTestResult r = two_sample_ttest(a, b);
    const oracle::TextbookTTest ref = oracle::pooled_ttest(a, b);
    EXPECT_NEAR(r.t, static_cast<double>(ref.t), 1e-10 * (1 + std::abs(static_cast<double>(ref.t))));
    EXPECT_NEAR(r.p, static_cast<double>(ref.p), 1e-10);
    EXPECT_EQ(r.df, ref.df);
  }
}

TEST(Stats, TTestHandValues) {
  // a = 1..5, b = 2..6: mean difference -1, pooled variance 2.5, t = -1.
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {2, 3, 4, 5, 6};
  const TTestResult r = two_sample_ttest(a, b);
  EXPECT_NEAR(r.t, -1.0, 1e-15);
  EXPECT_EQ(r.df, 8.0);
  EXPECT_GT(r.p, 0.3);
  EXPECT_LT(r.p, 0.4);
}

TEST(Stats, TTestProperties) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(100.0, 15.0);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> a(7);
    std::vector<double> b(9);
    for (double& v : a) v = n(rng);
    for (double& v : b) v = n(rng) + 10;
    const TTestResult ab = two_sample_ttest(a, b);
    const TTestResult ba = two_sample_ttest(b, a);
    EXPECT_NEAR(ab.t, -ba.t, 1e-12);
    EXPECT_NEAR(ab.p, ba.p, 1e-14);
    std::vector<double> a3 = a;
    std::vector<double> b3 = b;
    for (double& v : a3) v *= 3.5;
    for (double& v : b3) v *= 3.5;
    const TTestResult scaled = two_sample_ttest(a3, b3);
    EXPECT_NEAR(scaled.t, ab.t, 1e-10);
    EXPECT_NEAR(scaled.p, ab.p, 1e-12);
    EXPECT_GE(ab.p, 0.0);
    EXPECT_LE(ab.p, 1.0);
    const TTestResult w = two_sample_ttest(a, b, TTestVariant::Welch);
    EXPECT_LT(w.df, 14.0 + 1e-12);
    EXPECT_GE(w.df, 6.0);
  }
}

TEST(Stats, TTestDegenerateCases) {
  const std::vector<double> same = {4, 4, 4};
  TTestResult r = two_sample_ttest(same, same);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_FALSE(r.degenerate);
  const std::vector<double> other = {5, 5};
  r = two_sample_ttest(same, other);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_LT(r.t, 0.0);
  const std::vector<double> tiny = {1};
  EXPECT_THROW((void)two_sample_ttest(tiny, same), ContractError);
}

TEST(Stats, IdenticalSamplesGiveUnitP) {
  const std::vector<double> a = {3.1, 4.7, 2.2, 9.0};
  const TTestResult r = two_sample_ttest(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_NEAR(r.p, 1.0, 1e-15);
}

TEST(Stats, SignificanceLabel) {
  Comparison c;
  c.result.p = 0.03279;
  EXPECT_TRUE(c.significant());
  c.result.p = 0.05;
  EXPECT_FALSE(c.significant());
  c.result.p = 0.001;
  c.skipped = true;
  EXPECT_FALSE(c.significant());
}

TEST(Stats, CompareModesPairsAndSkips) {
  std::vector<ModeTrials> modes;
  for (ControlMode m : kAllModes) {
    ModeTrials mt;
    mt.mode = m;
    for (int i = 0; i < 5; ++i) {
      mt.trials.push_back(trial(30 + i, 100 + 10 * i + (is_adaptive(m) ? 0 : 300)));
    }
    modes.push_back(mt);
  }
  const std::vector<Comparison> c = compare_modes(modes);
  EXPECT_EQ(c.size(), 6U * kAllMetrics.size());
  for (const Comparison& x : c) {
    if (x.metric == Metric::MeanFs) {
      EXPECT_FALSE(x.significant());  // identical vectors
    }
    if (x.metric == Metric::MaxFs && is_adaptive(x.a) != is_adaptive(x.b)) {
      EXPECT_TRUE(x.significant());
    }
  }
  EXPECT_THROW((void)compare_modes({modes[0]}), ContractError);

  // One trial per mode: every test is skipped.
  for (ModeTrials& m : modes) {
    m.trials.resize(1);
  }
  for (const Comparison& x : compare_modes(modes)) {
    EXPECT_TRUE(x.skipped);
  }
}

TEST(Stats, TablesAndJson) {
  std::vector<ModeTrials> modes = {{ControlMode::Coop, {trial(30, 400), trial(35, 420), trial(32, 380)}},
                                   {ControlMode::AdaptiveCoop, {trial(20, 150), trial(22, 160), trial(21, 170)}}};
  std::vector<ModeSummary> sums;
  for (const ModeTrials& m : modes) {
    sums.push_back(summarize(m.mode, m.trials));
  }
  const auto cmp = compare_modes(modes);
  const std::string table = format_summary_table(sums);
  EXPECT_NE(table.find("adaptive-coop"), std::string::npos);
  EXPECT_NE(table.find(std::string(metric_name(Metric::MaxFs))), std::string::npos);
  const std::string ctab = format_comparison_table(cmp);
  EXPECT_NE(ctab.find("coop"), std::string::npos);
  const auto j = nlohmann::json::parse(stats_json(sums, cmp));
  EXPECT_EQ(j.at("modes").size(), 2U);
  EXPECT_EQ(j.at("comparisons").size(), kAllMetrics.size());
}
