#include "survmap/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "survmap/csv.hpp"

namespace survmap::inference {

double std_normal_cdf(double x) {
  // erfc keeps full relative precision in the lower tail, where 1 − Φ would
  // cancel.
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

std::optional<double> one_sided_p(double difference, std::optional<double> se) {
  if (!se || !(*se > 0.0)) return std::nullopt;
  return std_normal_cdf(difference / *se);
}

double two_sided_significance(double p_one_sided) {
  return 2.0 * std::min(p_one_sided, 1.0 - p_one_sided);
}

SigClass two_sided_class(double p) {
  // Compared on p directly so the class edges coincide with the tabulation
  // bin edges bit for bit.
  if (p < 0.005 || p >= 0.995) return SigClass::At1Pct;
  if (p < 0.025 || p >= 0.975) return SigClass::At5Pct;
  if (p < 0.05 || p >= 0.95) return SigClass::At10Pct;
  return SigClass::NotSignificant;
}

DifferenceResult compare(const estimation::AreaEstimate& estimate, double base_value) {
  DifferenceResult r;
  r.geoid = estimate.geoid;
  r.variable = estimate.variable;
  r.survey_estimate = estimate.estimate;
  r.base_value = base_value;
  r.se = estimate.se;
  if (estimate.estimate) r.difference = *estimate.estimate - base_value;
  if (r.difference && !estimation::flag_degenerate(estimate)) {
    r.z_score = *r.difference / *r.se;
    r.p_one_sided = one_sided_p(*r.difference, r.se);
    r.sig_class = two_sided_class(*r.p_one_sided);
  }
  return r;
}

std::vector<DifferenceResult> compare_all(std::span<const estimation::AreaEstimate> estimates,
                                          const ingest::Baseline& baseline) {
  std::vector<DifferenceResult> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) {
    auto it = baseline.find(e.geoid);
    if (it == baseline.end()) throw Error("baseline has no row for surveyed area " + e.geoid.str());
    out.push_back(compare(e, it->second.value(e.variable)));
  }
  return out;
}

std::string_view bin_label(PBin bin) {
  switch (bin) {
    case PBin::Upper005: return "0.995+";
    case PBin::Upper025: return "0.975-0.995";
    case PBin::Upper05: return "0.95-0.975";
    case PBin::Other: return "Other";
    case PBin::Lower05: return "0.025-0.05";
    case PBin::Lower025: return "0.005-0.025";
    case PBin::Lower005: return "<0.005";
  }
  return "?";
}

PBin bin_of(double p) {
  if (p >= 0.995) return PBin::Upper005;
  if (p >= 0.975) return PBin::Upper025;
  if (p >= 0.95) return PBin::Upper05;
  if (p >= 0.05) return PBin::Other;
  if (p >= 0.025) return PBin::Lower05;
  if (p >= 0.005) return PBin::Lower025;
  return PBin::Lower005;
}

double PValueTabulation::percent(PBin bin) const noexcept {
  if (n == 0) return 0.0;
  return 100.0 * static_cast<double>(count(bin)) / static_cast<double>(n);
}

PValueTabulation tabulate_pvalues(std::span<const double> p_values) {
  PValueTabulation tab;
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("p-value outside [0,1]: " + csv::format_real(p));
    ++tab.counts[static_cast<std::size_t>(bin_of(p))];
    ++tab.n;
  }
  return tab;
}

PValueTabulation tabulate_pvalues(std::span<const DifferenceResult> results) {
  const auto ps = defined_pvalues(results);
  return tabulate_pvalues(std::span<const double>(ps));
}

SignificanceCounts significance_table(const PValueTabulation& tab) {
  return {
      tab.count(PBin::Lower005) + tab.count(PBin::Upper005),
      tab.count(PBin::Lower025) + tab.count(PBin::Upper025),
      tab.count(PBin::Lower05) + tab.count(PBin::Upper05),
      tab.count(PBin::Other),
  };
}

SignificanceCounts count_classes(std::span<const DifferenceResult> results) {
  SignificanceCounts c;
  for (const auto& r : results) {
    switch (r.sig_class) {
      case SigClass::At1Pct: ++c.at1; break;
      case SigClass::At5Pct: ++c.at5; break;
      case SigClass::At10Pct: ++c.at10; break;
      case SigClass::NotSignificant: ++c.not_significant; break;
      case SigClass::NoTest: break;
    }
  }
  return c;
}

SignTestResult sign_test(std::size_t k, std::size_t n, double p0) {
  if (n == 0) throw Error("sign test needs at least one tested area");
  if (k > n) throw Error(fmt::format("sign test: k = {} exceeds n = {}", k, n));
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error("sign test: p0 must lie in (0,1)");
  const double nd = static_cast<double>(n);
  const double z = (static_cast<double>(k) - nd * p0) / std::sqrt(nd * p0 * (1.0 - p0));
  return {k, n, p0, z};
}

std::vector<QQPoint> qq_series(std::vector<double> p_values) {
  std::sort(p_values.begin(), p_values.end());
  std::vector<QQPoint> out;
  out.reserve(p_values.size());
  const double denom = static_cast<double>(p_values.size()) + 1.0;
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (!(p_values[i] >= 0.0 && p_values[i] <= 1.0)) {
      throw Error("p-value outside [0,1]: " + csv::format_real(p_values[i]));
    }
    out.push_back({static_cast<double>(i + 1) / denom, p_values[i]});
  }
  return out;
}

double qq_max_deviation(std::span<const QQPoint> series) {
  double worst = 0.0;
  for (const auto& pt : series) worst = std::max(worst, std::abs(pt.observed - pt.expected));
  return worst;
}

std::vector<double> defined_pvalues(std::span<const DifferenceResult> results) {
  std::vector<double> ps;
  ps.reserve(results.size());
  for (const auto& r : results) {
    if (r.p_one_sided) ps.push_back(*r.p_one_sided);
  }
  return ps;
}

NationalTestResult national_test(const estimation::AreaEstimate& national, double base_value) {
  if (estimation::flag_degenerate(national) || !national.estimate) {
    throw Error("national " + std::string(to_string(national.variable)) +
                " estimate has a degenerate standard error");
  }
  NationalTestResult out;
  out.difference = compare(national, base_value);
  out.t = *out.difference.z_score;
  out.p_two_sided = 2.0 * (1.0 - std_normal_cdf(std::abs(out.t)));
  out.n_units = national.n_units;
  out.weight_sum = national.weight_sum;
  return out;
}

NationalTestResult national_test(const estimation::GroupedRecords& records, Variable variable,
                                 double base_value, const estimation::EstimateOptions& options) {
  return national_test(estimation::estimate_national(records, variable, options), base_value);
}

void write_results(std::ostream& out, std::span<const DifferenceResult> results) {
  out << "geoid,variable,estimate,base,diff,se,z,p_one_sided,sig_class\n";
  for (const auto& r : results) {
    out << r.geoid.str() << ',' << to_string(r.variable) << ',' << csv::format_real(r.survey_estimate)
        << ',' << csv::format_real(r.base_value) << ',' << csv::format_real(r.difference) << ','
        << csv::format_real(r.se) << ',' << csv::format_real(r.z_score) << ','
        << csv::format_real(r.p_one_sided) << ',' << to_string(r.sig_class) << '\n';
  }
}

std::vector<DifferenceResult> read_results(std::istream& in, std::string_view source) {
  csv::Reader reader(in, std::string(source));
  const auto c_geoid = reader.column("geoid");
  const auto c_var = reader.column("variable");
  const auto c_est = reader.column("estimate");
  const auto c_base = reader.column("base");
  const auto c_diff = reader.column("diff");
  const auto c_se = reader.column("se");
  const auto c_z = reader.column("z");
  const auto c_p = reader.column("p_one_sided");
  const auto c_sig = reader.column("sig_class");
  std::vector<DifferenceResult> out;
  while (reader.next()) {
    const auto& f = reader.fields();
    DifferenceResult r;
    try {
      r.geoid = Geoid::parse(f[c_geoid]);
      r.variable = parse_variable(f[c_var]);
      r.sig_class = parse_sig_class(f[c_sig]);
    } catch (const Error& e) {
      reader.fail(e.what());
    }
    r.survey_estimate = reader.optional_real(c_est);
    r.base_value = reader.real(c_base);
    r.difference = reader.optional_real(c_diff);
    r.se = reader.optional_real(c_se);
    r.z_score = reader.optional_real(c_z);
    r.p_one_sided = reader.optional_real(c_p);
    if (r.p_one_sided.has_value() == (r.sig_class == SigClass::NoTest)) {
      reader.fail("p_one_sided must be present exactly when sig_class is not NoTest");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_tabulation_text(std::ostream& out, const PValueTabulation& tab, std::string_view title) {
  out << title << '\n';
  out << fmt::format("{:<14}{:>8}{:>10}{:>12}\n", "p-value", "Count", "Percent", "Expected");
  for (std::size_t i = 0; i < kBinCount; ++i) {
    const auto bin = static_cast<PBin>(i);
    out << fmt::format("{:<14}{:>8}{:>10.2f}{:>12.1f}\n", bin_label(bin), tab.count(bin), tab.percent(bin),
                       PValueTabulation::expected_percent(bin));
  }
  out << fmt::format("{:<14}{:>8}\n", "n", tab.n);
}

void write_tabulation_csv(std::ostream& out, const PValueTabulation& tab) {
  out << "bin,count,percent,expected_percent\n";
  for (std::size_t i = 0; i < kBinCount; ++i) {
    const auto bin = static_cast<PBin>(i);
    out << bin_label(bin) << ',' << tab.count(bin) << ',' << fmt::format("{:.4f}", tab.percent(bin)) << ','
        << fmt::format("{:.1f}", PValueTabulation::expected_percent(bin)) << '\n';
  }
}

namespace {

double share(std::size_t part, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(total);
}

}  // namespace

void write_significance_text(std::ostream& out, const SignificanceCounts& c, std::string_view title) {
  out << title << '\n';
  out << fmt::format("{:<18}{:>8}{:>10}\n", "Significance", "Count", "Percent");
  const std::pair<std::string_view, std::size_t> rows[] = {
      {"1%", c.at1}, {"5%", c.at5}, {"10%", c.at10}, {"Not significant", c.not_significant}};
  for (const auto& [label, count] : rows) {
    out << fmt::format("{:<18}{:>8}{:>10.2f}\n", label, count, share(count, c.total()));
  }
}

void write_significance_csv(std::ostream& out, const SignificanceCounts& c) {
  out << "level,count,percent\n";
  const std::pair<std::string_view, std::size_t> rows[] = {
      {"1%", c.at1}, {"5%", c.at5}, {"10%", c.at10}, {"not_significant", c.not_significant}};
  for (const auto& [label, count] : rows) {
    out << label << ',' << count << ',' << fmt::format("{:.4f}", share(count, c.total())) << '\n';
  }
}

void write_qq_csv(std::ostream& out, std::span<const QQPoint> series) {
  out << "expected,observed\n";
  for (const auto& pt : series) out << csv::format_real(pt.expected) << ',' << csv::format_real(pt.observed) << '\n';
}

}  // namespace survmap::inference
