#include "survmap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "survmap/csv.hpp"

namespace survmap::synth {

namespace {

constexpr std::size_t kAreasPerState = 200;
constexpr std::size_t kMaxAreas = 99 * kAreasPerState;

// Grid extent, degrees.
constexpr double kWest = -122.0;
constexpr double kNorth = 49.0;
constexpr double kGridWidth = 52.0;
constexpr double kGridHeight = 22.0;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double quantize(double value, double step) { return std::round(value / step) * step; }

// E[w²]/E[w]² for w uniform on [lo, hi].
double weight_inflation(const Range& w) {
  const double mean = (w.lo + w.hi) / 2.0;
  const double second = (w.lo * w.lo + w.lo * w.hi + w.hi * w.hi) / 3.0;
  return second / (mean * mean);
}

void check_range(const Range& r, double min, double max, const char* what) {
  if (!(r.lo >= min && r.hi <= max && r.lo <= r.hi)) {
    throw Error(fmt::format("synth: {} range [{}, {}] must lie within [{}, {}]", what, r.lo, r.hi, min, max));
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_areas == 0) throw Error("synth: n_areas must be >= 1");
  if (n_areas > kMaxAreas) throw Error(fmt::format("synth: at most {} areas are supported", kMaxAreas));
  if (units_min == 0 || units_min > units_max) throw Error("synth: units per area must satisfy 1 <= min <= max");
  if (replicates == 0) throw Error("synth: replicate count must be >= 1");
  if (!(altered_fraction >= 0.0 && altered_fraction <= 1.0)) throw Error("synth: altered_fraction outside [0,1]");
  if (!(effect_size >= 0.0)) throw Error("synth: effect_size must be >= 0");
  check_range(true_vacancy, 0.0, 1.0, "true vacancy");
  check_range(true_pph, 1.0, 50.0, "true pph");
  if (!(weight.lo > 0.0) || weight.lo > weight.hi) throw Error("synth: weight range must be positive");
}

Geoid synthetic_geoid(std::size_t index) {
  const auto state = 1 + index / kAreasPerState;
  const auto county = 1 + 2 * (index % kAreasPerState);
  return Geoid::parse(fmt::format("{:02}{:03}", state, county));
}

Generator::Generator(SynthConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t n = config_.n_areas;
  grid_cols_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + grid_cols_ - 1) / grid_cols_;
  cell_deg_ = std::min({1.0, kGridWidth / static_cast<double>(grid_cols_), kGridHeight / static_cast<double>(rows)});

  auto rng = stream(config_.seed, 0, 0);
  std::uniform_int_distribution<std::size_t> unit_count(config_.units_min, config_.units_max);
  std::uniform_real_distribution<double> vac(config_.true_vacancy.lo, config_.true_vacancy.hi);
  std::uniform_real_distribution<double> pph(config_.true_pph.lo, config_.true_pph.hi);
  const double inflation = weight_inflation(config_.weight);

  truth_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& t = truth_[i];
    t.geoid = synthetic_geoid(i);
    t.units = unit_count(rng);
    t.true_vacancy = vac(rng);
    t.true_pph = pph(rng);
    const double units = static_cast<double>(t.units);
    t.vacancy_se = std::sqrt(t.true_vacancy * (1.0 - t.true_vacancy) * inflation / units);
    const double occupied = std::max(1.0, units * (1.0 - t.true_vacancy));
    t.pph_se = std::sqrt((t.true_pph - 1.0) * inflation / occupied);
    t.base_vacancy = t.true_vacancy;
    t.base_pph = t.true_pph;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto altered = static_cast<std::size_t>(std::llround(config_.altered_fraction * static_cast<double>(n)));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t k = 0; k < altered; ++k) {
    auto& t = truth_[order[k]];
    t.altered = true;
    // The sign is random, but flipped when the shifted baseline would leave
    // its valid range.
    const double dv = config_.effect_size * t.vacancy_se;
    double sv = coin(rng) ? 1.0 : -1.0;
    if (t.true_vacancy - sv * dv < 0.0 || t.true_vacancy - sv * dv > 1.0) sv = -sv;
    t.base_vacancy = std::clamp(t.true_vacancy - sv * dv, 0.0, 1.0);
    const double dp = config_.effect_size * t.pph_se;
    double sp = coin(rng) ? 1.0 : -1.0;
    if (t.true_pph - sp * dp <= 0.0) sp = -sp;
    t.base_pph = t.true_pph - sp * dp;
  }
}

std::vector<ingest::UnitRecord> Generator::units(std::size_t area) const {
  const auto& t = truth_.at(area);
  const std::size_t reps = config_.replicates;
  auto rng = stream(config_.seed, 1, area);
  std::uniform_real_distribution<double> weight(config_.weight.lo, config_.weight.hi);
  std::bernoulli_distribution vacant(t.true_vacancy);
  std::poisson_distribution<int> extra_persons(t.true_pph - 1.0);

  std::vector<ingest::UnitRecord> out(t.units, ingest::UnitRecord{t.geoid, Occupancy::Occupied, 0, 0.0, {}});
  for (auto& rec : out) {
    rec.weight = std::max(0.01, quantize(weight(rng), 0.01));
    if (vacant(rng)) {
      rec.status = Occupancy::Vacant;
      rec.persons = 0;
    } else {
      rec.persons = 1 + (t.true_pph > 1.0 ? extra_persons(rng) : 0);
    }
  }

  // Random groups: units are shuffled into R balanced groups; replicate r
  // inflates group r by 1+δ and deflates the rest by δ/(R−1). With
  // δ = sqrt(R−1)/2 the 4/R multiplier reproduces the random-group
  // variance estimator.
  std::vector<std::size_t> order(t.units);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const double delta = std::sqrt(static_cast<double>(reps) - 1.0) / 2.0;
  const double deflate = reps > 1 ? delta / static_cast<double>(reps - 1) : 0.0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    auto& rec = out[order[pos]];
    const std::size_t group = pos % reps;
    rec.rep_weights.resize(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      const double factor = r == group ? 1.0 + delta : 1.0 - deflate;
      rec.rep_weights[r] = quantize(rec.weight * factor, 1e-4);
    }
  }
  return out;
}

std::vector<ingest::UnitRecord> Generator::all_units() const {
  std::vector<ingest::UnitRecord> out;
  for (std::size_t i = 0; i < area_count(); ++i) {
    auto area = units(i);
    std::move(area.begin(), area.end(), std::back_inserter(out));
  }
  return out;
}

ingest::BaselineRecord Generator::baseline(std::size_t area) const {
  const auto& t = truth_.at(area);
  return {t.geoid, t.base_vacancy, t.base_pph};
}

ingest::BaselineRecord Generator::national_baseline() const {
  // Expected-weight pooling: every unit has the same expected weight, so
  // areas contribute in proportion to their unit and household counts.
  double units = 0.0, vacant = 0.0, households = 0.0, persons = 0.0;
  for (const auto& t : truth_) {
    const double n = static_cast<double>(t.units);
    units += n;
    vacant += n * t.base_vacancy;
    households += n * (1.0 - t.base_vacancy);
    persons += n * (1.0 - t.base_vacancy) * t.base_pph;
  }
  return {Geoid::national(), vacant / units, households > 0.0 ? persons / households : 1.0};
}

ingest::Baseline Generator::baseline() const {
  ingest::Baseline out;
  for (std::size_t i = 0; i < area_count(); ++i) {
    auto rec = baseline(i);
    out.emplace(rec.geoid, rec);
  }
  auto us = national_baseline();
  out.emplace(us.geoid, us);
  return out;
}

ingest::AreaGeometry Generator::geometry(std::size_t area) const {
  const auto& t = truth_.at(area);
  const double col = static_cast<double>(area % grid_cols_);
  const double row = static_cast<double>(area / grid_cols_);
  const double west = kWest + col * cell_deg_;
  const double north = kNorth - row * cell_deg_;
  const double east = west + cell_deg_;
  const double south = north - cell_deg_;
  ingest::Ring ring{{west, south}, {east, south}, {east, north}, {west, north}, {west, south}};
  const auto& code = t.geoid.str();
  return {t.geoid, fmt::format("Synthetic {} ({})", code.substr(2), code.substr(0, 2)), {{std::move(ring)}}};
}

std::vector<ingest::AreaGeometry> Generator::geometries() const {
  std::vector<ingest::AreaGeometry> out;
  out.reserve(area_count());
  for (std::size_t i = 0; i < area_count(); ++i) out.push_back(geometry(i));
  return out;
}

void write_truth(std::ostream& out, const Generator& gen) {
  out << "geoid,true_vacancy_diff,true_pph_diff\n";
  for (const auto& t : gen.truths()) {
    out << t.geoid.str() << ',' << csv::format_real(t.vacancy_diff()) << ',' << csv::format_real(t.pph_diff())
        << '\n';
  }
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  return out;
}

}  // namespace

GeneratedFiles write_files(const Generator& gen, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  GeneratedFiles files{dir / "microdata.csv", dir / "baseline.csv", dir / "geometry.geojson", dir / "truth.csv"};
  {
    auto out = open_output(files.microdata);
    // Header once, then one area at a time to bound memory.
    for (std::size_t i = 0; i < gen.area_count(); ++i) {
      const auto units = gen.units(i);
      std::ostringstream chunk;
      ingest::write_microdata(chunk, units);
      auto text = chunk.str();
      if (i > 0) text.erase(0, text.find('\n') + 1);
      out << text;
    }
    if (gen.area_count() == 0) ingest::write_microdata(out, {});
  }
  {
    auto out = open_output(files.baseline);
    ingest::write_baseline(out, gen.baseline());
  }
  {
    auto out = open_output(files.geometry);
    const auto geoms = gen.geometries();
    out << ingest::to_geojson(geoms).dump() << '\n';
  }
  {
    auto out = open_output(files.truth);
    write_truth(out, gen);
  }
  return files;
}

}  // namespace survmap::synth
