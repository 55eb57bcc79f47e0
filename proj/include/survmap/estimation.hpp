#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "survmap/ingest.hpp"
#include "survmap/types.hpp"

namespace survmap::estimation {

using ingest::UnitRecord;

/// Selects the full-sample weight or one replicate weight column.
class WeightIndex {
 public:
  static constexpr WeightIndex full() noexcept { return WeightIndex(kFull); }
  /// Zero-based replicate column (repwgt1 is replicate(0)).
  static constexpr WeightIndex replicate(std::size_t r) noexcept { return WeightIndex(r); }

  constexpr bool is_full() const noexcept { return column_ == kFull; }
  double of(const UnitRecord& rec) const { return is_full() ? rec.weight : rec.rep_weights.at(column_); }

 private:
  static constexpr std::size_t kFull = static_cast<std::size_t>(-1);
  constexpr explicit WeightIndex(std::size_t column) noexcept : column_(column) {}
  std::size_t column_;
};

/// Σ w·[vacant] / Σ w over all units. nullopt when the weight sum is zero.
std::optional<double> weighted_vacancy_rate(std::span<const UnitRecord> records, WeightIndex weights);

/// Σ w·persons / Σ w over occupied units only. nullopt without occupied
/// units carrying nonzero weight.
std::optional<double> weighted_pph(std::span<const UnitRecord> records, WeightIndex weights);

std::optional<double> weighted_estimate(std::span<const UnitRecord> records, Variable variable,
                                        WeightIndex weights);

/// ACS successive-difference-replication factor 4/R.
double default_sdr_factor(std::size_t replicates);

/// sqrt(factor · Σ_r (θ_r − θ_0)²); nullopt when any replicate is undefined.
std::optional<double> sdr_standard_error(double full_estimate,
                                         std::span<const std::optional<double>> replicate_estimates,
                                         double factor);

struct AreaEstimate {
  Geoid geoid = Geoid::national();
  Variable variable = Variable::VacancyRate;
  std::optional<double> estimate;
  std::vector<std::optional<double>> replicate_estimates;
  std::optional<double> se;
  std::size_t n_units = 0;   // records in the variable's universe
  double weight_sum = 0.0;   // full-sample weights over that universe
};

/// Ratio numerators and denominators for the full weight (slot 0) and every
/// replicate (slots 1..R). Totals add across areas, which is how the
/// national estimate is formed from the per-area passes.
struct RatioTotals {
  std::vector<double> numerator;
  std::vector<double> denominator;
  std::size_t n_units = 0;

  static RatioTotals accumulate(std::span<const UnitRecord> records, Variable variable);
  RatioTotals& operator+=(const RatioTotals& other);
};

struct EstimateOptions {
  /// SDR multiplier; defaults to 4/R when unset.
  std::optional<double> sdr_factor;
  /// Worker threads for per-area passes.
  unsigned jobs = 1;
};

AreaEstimate finish_estimate(const Geoid& geoid, Variable variable, const RatioTotals& totals,
                             std::optional<double> sdr_factor = std::nullopt);

/// Records must all share one geoid (not checked beyond the first record
/// naming the area).
AreaEstimate estimate_area(std::span<const UnitRecord> records, Variable variable,
                           std::optional<double> sdr_factor = std::nullopt);

/// True iff the standard error is zero or undefined: no test is possible.
bool flag_degenerate(const AreaEstimate& estimate) noexcept;

using GroupedRecords = std::map<Geoid, std::vector<UnitRecord>>;

/// Moves records into per-area buckets, preserving within-area order.
/// Throws when replicate counts differ across records.
GroupedRecords group_by_area(std::vector<UnitRecord> records);

/// One estimate per area, ordered by geoid.
std::vector<AreaEstimate> estimate_areas(const GroupedRecords& groups, Variable variable,
                                         const EstimateOptions& options = {});

/// Pools every area; the result carries the geoid "US".
AreaEstimate estimate_national(const GroupedRecords& groups, Variable variable,
                               const EstimateOptions& options = {});

/// Columns: geoid,variable,estimate,se,n_units,weight_sum,degenerate
void write_estimates(std::ostream& out, std::span<const AreaEstimate> estimates);

}  // namespace survmap::estimation
