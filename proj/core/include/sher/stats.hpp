#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sher/control.hpp"
#include "sher/sim.hpp"

namespace sher {

enum class Metric : std::uint8_t {
  MeanFs,
  MaxFs,
  MeanHandleForce,
  MeanHandleTorque,
  CompletionTime,
  PctOverThreshold,
};

inline constexpr std::array<Metric, 6> kAllMetrics = {
    Metric::MeanFs,           Metric::MaxFs,          Metric::MeanHandleForce,
    Metric::MeanHandleTorque, Metric::CompletionTime, Metric::PctOverThreshold};

[[nodiscard]] std::string_view metric_name(Metric m);
[[nodiscard]] std::string_view metric_unit(Metric m);

// Per-trial value of a metric. Completion time only exists for completed trials.
[[nodiscard]] double metric_value(const TrialSummary& s, Metric m);

// Samples of one metric across trials; incomplete trials are left out of
// completion time and kept everywhere else.
[[nodiscard]] std::vector<double> metric_samples(const std::vector<TrialSummary>& trials, Metric m);

struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;  // n - 1 denominator; 0 for a single sample
  std::size_t n = 0;
};

// Throws ContractError on an empty sample.
[[nodiscard]] SampleStats sample_stats(std::span<const double> x);

struct ModeSummary {
  ControlMode mode = ControlMode::Coop;
  std::size_t trials = 0;
  std::size_t completed = 0;
  std::array<SampleStats, kAllMetrics.size()> metrics{};

  [[nodiscard]] const SampleStats& operator[](Metric m) const {
    return metrics[static_cast<std::size_t>(m)];
  }
};

// Throws ContractError when `trials` is empty. A metric with no samples (no
// completed trial) reports n = 0 and NaN mean.
[[nodiscard]] ModeSummary summarize(ControlMode mode, const std::vector<TrialSummary>& trials);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
[[nodiscard]] double incomplete_beta(double a, double b, double x);

// Student-t CDF with (possibly fractional) df > 0.
[[nodiscard]] double student_t_cdf(double t, double df);

enum class TTestVariant : std::uint8_t { Pooled, Welch };

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-tailed
  double df = 0.0;
  bool degenerate = false;  // zero variance with unequal means
};

// Two-sample t-test, pooled variance by default. Each sample needs n >= 2.
[[nodiscard]] TTestResult two_sample_ttest(std::span<const double> a, std::span<const double> b,
                                           TTestVariant variant = TTestVariant::Pooled);

inline constexpr double kSignificanceLevel = 0.05;

struct ModeTrials {
  ControlMode mode = ControlMode::Coop;
  std::vector<TrialSummary> trials;
};

struct Comparison {
  ControlMode a = ControlMode::Coop;
  ControlMode b = ControlMode::Coop;
  Metric metric = Metric::MeanFs;
  bool skipped = false;  // too few samples on one side
  TTestResult result;
  [[nodiscard]] bool significant() const { return !skipped && result.p < kSignificanceLevel; }
};

// Every unordered pair of modes, for every metric. Throws ContractError with
// fewer than two modes.
[[nodiscard]] std::vector<Comparison> compare_modes(const std::vector<ModeTrials>& modes,
                                                    TTestVariant variant = TTestVariant::Pooled);

[[nodiscard]] std::string format_summary_table(const std::vector<ModeSummary>& summaries);
[[nodiscard]] std::string format_comparison_table(const std::vector<Comparison>& comparisons);
[[nodiscard]] std::string stats_json(const std::vector<ModeSummary>& summaries,
                                     const std::vector<Comparison>& comparisons);

}  // namespace sher
