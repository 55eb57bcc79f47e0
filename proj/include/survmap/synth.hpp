#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "survmap/ingest.hpp"
#include "survmap/types.hpp"

namespace survmap::synth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SynthConfig {
  std::size_t n_areas = 100;
  std::size_t units_min = 80;
  std::size_t units_max = 160;
  Range true_vacancy{0.05, 0.20};
  Range true_pph{2.0, 3.2};
  Range weight{5.0, 25.0};
  /// Share of areas whose baseline is shifted away from the truth.
  double altered_fraction = 0.0;
  /// Planted shift, in design standard errors of the area's estimate.
  double effect_size = 4.0;
  std::size_t replicates = 80;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Ground truth for one synthetic area.
struct AreaTruth {
  Geoid geoid = Geoid::national();
  std::size_t units = 0;
  double true_vacancy = 0.0;
  double true_pph = 0.0;
  /// Design standard errors used to scale planted effects.
  double vacancy_se = 0.0;
  double pph_se = 0.0;
  bool altered = false;
  double base_vacancy = 0.0;
  double base_pph = 0.0;

  double vacancy_diff() const noexcept { return true_vacancy - base_vacancy; }
  double pph_diff() const noexcept { return true_pph - base_pph; }
};

/// Geoid for the i-th synthetic area: 200 areas per state, odd county codes.
Geoid synthetic_geoid(std::size_t index);

/// Seeded generator. Every area draws from its own stream, so any area can
/// be produced independently and the output depends only on the config.
class Generator {
 public:
  explicit Generator(SynthConfig config);

  const SynthConfig& config() const noexcept { return config_; }
  std::size_t area_count() const noexcept { return truth_.size(); }
  const AreaTruth& truth(std::size_t area) const { return truth_.at(area); }
  const std::vector<AreaTruth>& truths() const noexcept { return truth_; }

  /// Housing units for one area with random-group replicate weights.
  std::vector<ingest::UnitRecord> units(std::size_t area) const;
  std::vector<ingest::UnitRecord> all_units() const;

  ingest::BaselineRecord baseline(std::size_t area) const;
  /// Every area plus the national "US" row.
  ingest::Baseline baseline() const;
  ingest::BaselineRecord national_baseline() const;

  /// Axis-aligned square cell in a grid over the conterminous US extent.
  ingest::AreaGeometry geometry(std::size_t area) const;
  std::vector<ingest::AreaGeometry> geometries() const;

 private:
  SynthConfig config_;
  std::vector<AreaTruth> truth_;
  std::size_t grid_cols_ = 1;
  double cell_deg_ = 1.0;
};

/// Columns: geoid,true_vacancy_diff,true_pph_diff
void write_truth(std::ostream& out, const Generator& gen);

struct GeneratedFiles {
  std::filesystem::path microdata;
  std::filesystem::path baseline;
  std::filesystem::path geometry;
  std::filesystem::path truth;
};

/// Writes microdata.csv, baseline.csv, geometry.geojson and truth.csv.
GeneratedFiles write_files(const Generator& gen, const std::filesystem::path& dir);

}  // namespace survmap::synth
