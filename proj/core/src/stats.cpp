#include "sher/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "sher/errors.hpp"

namespace sher {

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::MeanFs: return "mean_fs";
    case Metric::MaxFs: return "max_fs";
    case Metric::MeanHandleForce: return "mean_handle_force";
    case Metric::MeanHandleTorque: return "mean_handle_torque";
    case Metric::CompletionTime: return "completion_time";
    case Metric::PctOverThreshold: return "pct_over_threshold";
  }
  return "?";
}

std::string_view metric_unit(Metric m) {
  switch (m) {
    case Metric::MeanFs:
    case Metric::MaxFs:
    case Metric::MeanHandleForce: return "mN";
    case Metric::MeanHandleTorque: return "mN*mm";
    case Metric::CompletionTime: return "s";
    case Metric::PctOverThreshold: return "%";
  }
  return "";
}

double metric_value(const TrialSummary& s, Metric m) {
  switch (m) {
    case Metric::MeanFs: return s.mean_fs;
    case Metric::MaxFs: return s.max_fs;
    case Metric::MeanHandleForce: return s.mean_handle_force;
    case Metric::MeanHandleTorque: return s.mean_handle_torque;
    case Metric::CompletionTime:
      return s.completed ? s.completion_time : std::numeric_limits<double>::quiet_NaN();
    case Metric::PctOverThreshold: return s.pct_over_threshold;
  }
  return 0.0;
}

std::vector<double> metric_samples(const std::vector<TrialSummary>& trials, Metric m) {
  std::vector<double> out;
  out.reserve(trials.size());
  for (const TrialSummary& s : trials) {
    if (m == Metric::CompletionTime && !s.completed) {
      continue;
    }
    out.push_back(metric_value(s, m));
  }
  return out;
}

SampleStats sample_stats(std::span<const double> x) {
  if (x.empty()) {
    throw ContractError("sample_stats: empty sample");
  }
  SampleStats s;
  s.n = x.size();
  double sum = 0.0;
  for (double v : x) {
    sum += v;
  }
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : x) {
      ss += (v - s.mean) * (v - s.mean);
    }
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

ModeSummary summarize(ControlMode mode, const std::vector<TrialSummary>& trials) {
  if (trials.empty()) {
    throw ContractError("summarize: no trials");
  }
  ModeSummary out;
  out.mode = mode;
  out.trials = trials.size();
  for (const TrialSummary& s : trials) {
    out.completed += s.completed ? 1 : 0;
  }
  for (Metric m : kAllMetrics) {
    const std::vector<double> x = metric_samples(trials, m);
    SampleStats& st = out.metrics[static_cast<std::size_t>(m)];
    if (x.empty()) {
      st.mean = std::numeric_limits<double>::quiet_NaN();
      st.stddev = std::numeric_limits<double>::quiet_NaN();
      st.n = 0;
    } else {
      st = sample_stats(x);
    }
  }
  return out;
}

namespace {

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < kTiny) {
    d = kTiny;
  }
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    c = 1.0 + num / c;
    d = std::abs(d) < kTiny ? kTiny : d;
    c = std::abs(c) < kTiny ? kTiny : c;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    c = 1.0 + num / c;
    d = std::abs(d) < kTiny ? kTiny : d;
    c = std::abs(c) < kTiny ? kTiny : c;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) {
      return h;
    }
  }
  throw Error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw ContractError("incomplete_beta: need a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0 || x == 1.0) {
    return x;
  }
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace {

// P(|T| >= |t|) for Student-t with df degrees of freedom.
double two_tailed_p(double t, double df) {
  if (std::isinf(t)) {
    return 0.0;
  }
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

}  // namespace

double student_t_cdf(double t, double df) {
  if (!(df > 0.0) || std::isnan(t)) {
    throw ContractError("student_t_cdf: need df > 0 and a number t");
  }
  const double tail = 0.5 * two_tailed_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

TTestResult two_sample_ttest(std::span<const double> a, std::span<const double> b,
                             TTestVariant variant) {
  if (a.size() < 2 || b.size() < 2) {
    throw ContractError("two_sample_ttest: each sample needs at least two values");
  }
  const SampleStats sa = sample_stats(a);
  const SampleStats sb = sample_stats(b);
  const auto na = static_cast<double>(sa.n);
  const auto nb = static_cast<double>(sb.n);
  const double va = sa.stddev * sa.stddev;
  const double vb = sb.stddev * sb.stddev;
  const double diff = sa.mean - sb.mean;

  TTestResult r;
  double se2 = 0.0;
  if (variant == TTestVariant::Pooled) {
    r.df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    se2 = pooled * (1.0 / na + 1.0 / nb);
  } else {
    const double qa = va / na;
    const double qb = vb / nb;
    se2 = qa + qb;
    r.df = se2 > 0.0 ? se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0)) : na + nb - 2.0;
  }
  if (se2 == 0.0) {
    if (diff == 0.0) {
      return r;
    }
    r.t = diff > 0.0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.degenerate = true;
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.p = two_tailed_p(r.t, r.df);
  return r;
}

std::vector<Comparison> compare_modes(const std::vector<ModeTrials>& modes, TTestVariant variant) {
  if (modes.size() < 2) {
    throw ContractError("compare_modes: need at least two modes");
  }
  std::vector<Comparison> out;
  for (Metric m : kAllMetrics) {
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const std::vector<double> xa = metric_samples(modes[i].trials, m);
      for (std::size_t j = i + 1; j < modes.size(); ++j) {
        const std::vector<double> xb = metric_samples(modes[j].trials, m);
        Comparison c;
        c.a = modes[i].mode;
        c.b = modes[j].mode;
        c.metric = m;
        if (xa.size() < 2 || xb.size() < 2) {
          c.skipped = true;
        } else {
          c.result = two_sample_ttest(xa, xb, variant);
        }
        out.push_back(c);
      }
    }
  }
  return out;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string format_summary_table(const std::vector<ModeSummary>& summaries) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s", "mode", "n");
  out << line;
  for (Metric m : kAllMetrics) {
    const std::string head = std::string(metric_name(m)) + " [" + std::string(metric_unit(m)) + "]";
    std::snprintf(line, sizeof line, " %26s", head.c_str());
    out << line;
  }
  out << '\n';
  for (const ModeSummary& s : summaries) {
    const std::string n = std::to_string(s.completed) + "/" + std::to_string(s.trials);
    std::snprintf(line, sizeof line, "%-16s %6s", std::string(mode_name(s.mode)).c_str(), n.c_str());
    out << line;
    for (Metric m : kAllMetrics) {
      const SampleStats& st = s[m];
      const std::string cell = st.n == 0 ? std::string("-")
                                         : fmt("%.2f", st.mean) + " (" + fmt("%.2f", st.stddev) + ")";
      std::snprintf(line, sizeof line, " %26s", cell.c_str());
      out << line;
    }
    out << '\n';
  }
  return out.str();
}

std::string format_comparison_table(const std::vector<Comparison>& comparisons) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-16s %-16s %10s %12s  %s\n", "metric", "mode_a", "mode_b",
                "t", "p", "reading");
  out << line;
  for (const Comparison& c : comparisons) {
    const std::string a(mode_name(c.a));
    const std::string b(mode_name(c.b));
    const std::string metric(metric_name(c.metric));
    if (c.skipped) {
      std::snprintf(line, sizeof line, "%-20s %-16s %-16s %10s %12s  %s\n", metric.c_str(),
                    a.c_str(), b.c_str(), "-", "-", "skipped (fewer than 2 samples)");
    } else {
      std::snprintf(line, sizeof line, "%-20s %-16s %-16s %10.4f %12.5g  %s\n", metric.c_str(),
                    a.c_str(), b.c_str(), c.result.t, c.result.p,
                    c.significant() ? "significant" : "not significant");
    }
    out << line;
  }
  return out.str();
}

std::string stats_json(const std::vector<ModeSummary>& summaries,
                       const std::vector<Comparison>& comparisons) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json modes = json::array();
  for (const ModeSummary& s : summaries) {
    json metrics = json::object();
    for (Metric m : kAllMetrics) {
      metrics[std::string(metric_name(m))] = {
          {"mean", num(s[m].mean)}, {"std", num(s[m].stddev)}, {"n", s[m].n}};
    }
    modes.push_back({{"mode", mode_name(s.mode)},
                     {"trials", s.trials},
                     {"completed", s.completed},
                     {"metrics", metrics}});
  }
  json pairs = json::array();
  for (const Comparison& c : comparisons) {
    json j = {{"metric", metric_name(c.metric)},
              {"mode_a", mode_name(c.a)},
              {"mode_b", mode_name(c.b)},
              {"skipped", c.skipped}};
    if (!c.skipped) {
      j["t"] = num(c.result.t);
      j["p"] = c.result.p;
      j["df"] = c.result.df;
      j["degenerate"] = c.result.degenerate;
      j["significant"] = c.significant();
    }
    pairs.push_back(std::move(j));
  }
  return json{{"modes", modes}, {"comparisons", pairs}}.dump(2);
}

}  // namespace sher
