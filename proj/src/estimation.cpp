#include "survmap/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "survmap/csv.hpp"

namespace survmap::estimation {

std::optional<double> weighted_vacancy_rate(std::span<const UnitRecord> records, WeightIndex weights) {
  double vacant = 0.0;
  double total = 0.0;
  for (const auto& rec : records) {
    const double w = weights.of(rec);
    total += w;
    if (rec.status == Occupancy::Vacant) vacant += w;
  }
  if (total == 0.0) return std::nullopt;
  return vacant / total;
}

std::optional<double> weighted_pph(std::span<const UnitRecord> records, WeightIndex weights) {
  double persons = 0.0;
  double households = 0.0;
  for (const auto& rec : records) {
    if (rec.status != Occupancy::Occupied) continue;
    const double w = weights.of(rec);
    households += w;
    persons += w * rec.persons;
  }
  if (households == 0.0) return std::nullopt;
  return persons / households;
}

std::optional<double> weighted_estimate(std::span<const UnitRecord> records, Variable variable,
                                        WeightIndex weights) {
  return variable == Variable::VacancyRate ? weighted_vacancy_rate(records, weights)
                                           : weighted_pph(records, weights);
}

double default_sdr_factor(std::size_t replicates) {
  if (replicates == 0) throw Error("SDR factor requires at least one replicate");
  return 4.0 / static_cast<double>(replicates);
}

std::optional<double> sdr_standard_error(double full_estimate,
                                         std::span<const std::optional<double>> replicate_estimates,
                                         double factor) {
  if (replicate_estimates.empty()) throw Error("sdr_standard_error: no replicate estimates");
  if (!(factor > 0.0)) throw Error("sdr_standard_error: factor must be > 0");
  double sum_sq = 0.0;
  for (const auto& rep : replicate_estimates) {
    if (!rep) return std::nullopt;
    const double d = *rep - full_estimate;
    sum_sq += d * d;
  }
  return std::sqrt(factor * sum_sq);
}

RatioTotals RatioTotals::accumulate(std::span<const UnitRecord> records, Variable variable) {
  RatioTotals t;
  if (records.empty()) return t;
  const std::size_t slots = records.front().rep_weights.size() + 1;
  t.numerator.assign(slots, 0.0);
  t.denominator.assign(slots, 0.0);
  for (const auto& rec : records) {
    double y = 0.0;
    if (variable == Variable::VacancyRate) {
      y = rec.status == Occupancy::Vacant ? 1.0 : 0.0;
    } else {
      if (rec.status != Occupancy::Occupied) continue;
      y = rec.persons;
    }
    ++t.n_units;
    t.numerator[0] += rec.weight * y;
    t.denominator[0] += rec.weight;
    for (std::size_t r = 1; r < slots; ++r) {
      const double w = rec.rep_weights[r - 1];
      t.numerator[r] += w * y;
      t.denominator[r] += w;
    }
  }
  return t;
}

RatioTotals& RatioTotals::operator+=(const RatioTotals& other) {
  if (numerator.empty()) {
    numerator.assign(other.numerator.size(), 0.0);
    denominator.assign(other.denominator.size(), 0.0);
  }
  if (!other.numerator.empty() && other.numerator.size() != numerator.size()) {
    throw Error("cannot pool areas with different replicate counts");
  }
  for (std::size_t i = 0; i < other.numerator.size(); ++i) {
    numerator[i] += other.numerator[i];
    denominator[i] += other.denominator[i];
  }
  n_units += other.n_units;
  return *this;
}

AreaEstimate finish_estimate(const Geoid& geoid, Variable variable, const RatioTotals& totals,
                             std::optional<double> sdr_factor) {
  AreaEstimate est;
  est.geoid = geoid;
  est.variable = variable;
  est.n_units = totals.n_units;
  if (totals.numerator.empty()) return est;
  auto ratio = [&](std::size_t slot) -> std::optional<double> {
    if (totals.denominator[slot] == 0.0) return std::nullopt;
    return totals.numerator[slot] / totals.denominator[slot];
  };
  est.weight_sum = totals.denominator[0];
  est.estimate = ratio(0);
  const std::size_t replicates = totals.numerator.size() - 1;
  est.replicate_estimates.reserve(replicates);
  for (std::size_t r = 1; r <= replicates; ++r) est.replicate_estimates.push_back(ratio(r));
  if (est.estimate && replicates > 0) {
    est.se = sdr_standard_error(*est.estimate, est.replicate_estimates,
                                sdr_factor.value_or(default_sdr_factor(replicates)));
  }
  return est;
}

AreaEstimate estimate_area(std::span<const UnitRecord> records, Variable variable,
                           std::optional<double> sdr_factor) {
  const Geoid geoid = records.empty() ? Geoid::national() : records.front().geoid;
  return finish_estimate(geoid, variable, RatioTotals::accumulate(records, variable), sdr_factor);
}

bool flag_degenerate(const AreaEstimate& estimate) noexcept {
  return !estimate.se || *estimate.se == 0.0;
}

GroupedRecords group_by_area(std::vector<UnitRecord> records) {
  GroupedRecords groups;
  if (records.empty()) return groups;
  const std::size_t replicates = records.front().rep_weights.size();
  for (auto& rec : records) {
    if (rec.rep_weights.size() != replicates) {
      throw Error("record for " + rec.geoid.str() + " has " + std::to_string(rec.rep_weights.size()) +
                  " replicate weights, expected " + std::to_string(replicates));
    }
    auto geoid = rec.geoid;
    groups[geoid].push_back(std::move(rec));
  }
  return groups;
}

namespace {

// Runs body(i) for i in [0, n) on up to `jobs` threads; each index is
// handled by exactly one worker so results can be written by slot.
template <class Body>
void parallel_for(std::size_t n, unsigned jobs, Body body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([=, &body] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
}

}  // namespace

std::vector<AreaEstimate> estimate_areas(const GroupedRecords& groups, Variable variable,
                                         const EstimateOptions& options) {
  std::vector<const GroupedRecords::value_type*> slots;
  slots.reserve(groups.size());
  for (const auto& entry : groups) slots.push_back(&entry);
  std::vector<AreaEstimate> out(slots.size());
  parallel_for(slots.size(), options.jobs, [&](std::size_t i) {
    out[i] = estimate_area(slots[i]->second, variable, options.sdr_factor);
  });
  return out;
}

AreaEstimate estimate_national(const GroupedRecords& groups, Variable variable,
                               const EstimateOptions& options) {
  RatioTotals pooled;
  for (const auto& [geoid, records] : groups) pooled += RatioTotals::accumulate(records, variable);
  return finish_estimate(Geoid::national(), variable, pooled, options.sdr_factor);
}

void write_estimates(std::ostream& out, std::span<const AreaEstimate> estimates) {
  out << "geoid,variable,estimate,se,n_units,weight_sum,degenerate\n";
  for (const auto& e : estimates) {
    out << e.geoid.str() << ',' << to_string(e.variable) << ',' << csv::format_real(e.estimate) << ','
        << csv::format_real(e.se) << ',' << e.n_units << ',' << csv::format_real(e.weight_sum) << ','
        << (flag_degenerate(e) ? 1 : 0) << '\n';
  }
}

}  // namespace survmap::estimation
