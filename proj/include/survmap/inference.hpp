#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "survmap/estimation.hpp"
#include "survmap/ingest.hpp"
#include "survmap/types.hpp"

namespace survmap::inference {

/// Standard normal CDF. Absolute error below 1e-10 on [-8, 8].
double std_normal_cdf(double x);

/// Φ(difference / se): probability under a zero true difference of a value
/// at most the observed one. nullopt (no test) when se is missing or <= 0.
std::optional<double> one_sided_p(double difference, std::optional<double> se);

/// 2·min(p, 1−p).
double two_sided_significance(double p_one_sided);

/// Buckets 2·min(p, 1−p) at 1%/5%/10% using half-open edges that partition
/// [0,1]: p < 0.005 or p >= 0.995 is At1Pct, and so on inwards.
SigClass two_sided_class(double p_one_sided);

struct DifferenceResult {
  Geoid geoid = Geoid::national();
  Variable variable = Variable::VacancyRate;
  std::optional<double> survey_estimate;
  double base_value = 0.0;
  std::optional<double> difference;  // survey_estimate − base_value
  std::optional<double> se;
  std::optional<double> z_score;
  std::optional<double> p_one_sided;
  SigClass sig_class = SigClass::NoTest;
};

/// Compares a survey estimate against a constant (zero-variance) baseline.
/// Degenerate estimates yield NoTest.
DifferenceResult compare(const estimation::AreaEstimate& estimate, double base_value);

/// One result per estimate, in input order. Throws naming the first geoid
/// that is absent from the baseline.
std::vector<DifferenceResult> compare_all(std::span<const estimation::AreaEstimate> estimates,
                                          const ingest::Baseline& baseline);

/// Seven p-value ranges, ordered from the upper tail to the lower tail.
enum class PBin : std::size_t {
  Upper005 = 0,  // [0.995, 1]
  Upper025,      // [0.975, 0.995)
  Upper05,       // [0.95, 0.975)
  Other,         // [0.05, 0.95)
  Lower05,       // [0.025, 0.05)
  Lower025,      // [0.005, 0.025)
  Lower005,      // [0, 0.005)
};
inline constexpr std::size_t kBinCount = 7;

/// Percent of p-values expected in each bin when every difference is chance.
inline constexpr std::array<double, kBinCount> kExpectedPercent = {0.5, 2.0, 2.5, 90.0, 2.5, 2.0, 0.5};

std::string_view bin_label(PBin bin);
PBin bin_of(double p_one_sided);

struct PValueTabulation {
  std::array<std::size_t, kBinCount> counts{};
  std::size_t n = 0;

  /// 100·count/n; 0 when n = 0.
  double percent(PBin bin) const noexcept;
  static constexpr double expected_percent(PBin bin) noexcept {
    return kExpectedPercent[static_cast<std::size_t>(bin)];
  }
  std::size_t count(PBin bin) const noexcept { return counts[static_cast<std::size_t>(bin)]; }
};

/// NoTest results are skipped and do not count toward n.
PValueTabulation tabulate_pvalues(std::span<const DifferenceResult> results);
PValueTabulation tabulate_pvalues(std::span<const double> p_values);

struct SignificanceCounts {
  std::size_t at1 = 0;
  std::size_t at5 = 0;
  std::size_t at10 = 0;
  std::size_t not_significant = 0;

  std::size_t significant() const noexcept { return at1 + at5 + at10; }
  std::size_t total() const noexcept { return significant() + not_significant; }
  friend bool operator==(const SignificanceCounts&, const SignificanceCounts&) = default;
};

/// Sums the matching pair of tail bins for each significance level.
SignificanceCounts significance_table(const PValueTabulation& tab);

/// Per-class counts straight from the classified results.
SignificanceCounts count_classes(std::span<const DifferenceResult> results);

struct SignTestResult {
  std::size_t k = 0;
  std::size_t n = 0;
  double p0 = 0.10;
  double z = 0.0;
  /// Upper-tail p for an excess of significant areas: 1 − Φ(z).
  double p_upper() const { return 1.0 - std_normal_cdf(z); }
};

/// Normal approximation without continuity correction:
/// z = (k − n·p0) / sqrt(n·p0·(1−p0)).
SignTestResult sign_test(std::size_t k, std::size_t n, double p0 = 0.10);

struct QQPoint {
  double expected = 0.0;
  double observed = 0.0;
};

/// Sorted p-values against uniform plotting positions i/(n+1).
std::vector<QQPoint> qq_series(std::vector<double> p_values);

/// Largest |observed − expected| across the series; 0 when empty.
double qq_max_deviation(std::span<const QQPoint> series);

/// Defined one-sided p-values, in input order.
std::vector<double> defined_pvalues(std::span<const DifferenceResult> results);

struct NationalTestResult {
  DifferenceResult difference;
  double t = 0.0;
  double p_two_sided = 1.0;
  std::size_t n_units = 0;
  double weight_sum = 0.0;
};

/// Difference of the pooled survey estimate against the national baseline,
/// with t = difference/se and two-sided p = 2·(1 − Φ(|t|)). Throws when the
/// national standard error is degenerate.
NationalTestResult national_test(const estimation::AreaEstimate& national, double base_value);
NationalTestResult national_test(const estimation::GroupedRecords& records, Variable variable,
                                 double base_value, const estimation::EstimateOptions& options = {});

// Writers.

/// Columns: geoid,variable,estimate,base,diff,se,z,p_one_sided,sig_class
void write_results(std::ostream& out, std::span<const DifferenceResult> results);
std::vector<DifferenceResult> read_results(std::istream& in, std::string_view source);

void write_tabulation_text(std::ostream& out, const PValueTabulation& tab, std::string_view title);
void write_tabulation_csv(std::ostream& out, const PValueTabulation& tab);
void write_significance_text(std::ostream& out, const SignificanceCounts& counts, std::string_view title);
void write_significance_csv(std::ostream& out, const SignificanceCounts& counts);
void write_qq_csv(std::ostream& out, std::span<const QQPoint> series);

}  // namespace survmap::inference
