#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "survmap/inference.hpp"
#include "survmap/render.hpp"
#include "survmap/synth.hpp"
#include "survmap/types.hpp"

namespace survmap::app {

enum class VariableSelection { Vacancy, PPH, Both };

VariableSelection parse_variable_selection(std::string_view text);
std::vector<Variable> selected(VariableSelection selection);

/// Everything a subcommand needs. The CLI fills this from flags, an
/// optional config file and defaults, in that order of precedence.
struct RunConfig {
  std::filesystem::path microdata;
  std::filesystem::path baseline;
  std::filesystem::path geometry;
  /// Defaults to <out>/results.csv when empty.
  std::filesystem::path results;
  std::filesystem::path out_dir = "out";

  VariableSelection variables = VariableSelection::Both;
  /// Map modes: difference, pvalue, combined, qq.
  std::vector<std::string> modes{"combined"};
  /// A single number for every variable, or "vacancy=0.03,pph=0.2".
  std::string magnitude_break;
  std::string alpha_ladder;
  /// conus, alaska or lat1,lat2,lon0,lat0. Empty selects by region.
  std::string projection;
  std::string bbox;
  std::vector<std::string> states;
  int width = 960;
  int height = 600;

  unsigned jobs = 1;
  std::optional<double> sdr_factor;
  /// Largest tolerated share of geometry/results geoid mismatches in a bundle.
  double max_mismatch = 0.05;

  synth::SynthConfig synth;

  /// Recorded verbatim into every output's metadata.
  std::vector<std::pair<std::string, std::string>> provenance;
};

/// "sha256:<hex>" of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

/// Reads a results CSV written by cmd_estimate.
std::vector<inference::DifferenceResult> load_results(const std::filesystem::path& path);

/// Builds the map spec for one variable and mode from the run config.
viz::MapSpec map_spec_for(const RunConfig& config, Variable variable, viz::RenderMode mode);

/// Reads microdata and baseline, estimates every area and the nation, and
/// writes estimates.csv, results.csv, per-variable tabulation/significance/
/// QQ tables, sign_test.{txt,csv}, national.{txt,csv} and manifest.txt.
/// Returns the written paths.
std::vector<std::filesystem::path> cmd_estimate(const RunConfig& config);

/// One SVG per (variable, mode); "qq" writes the QQ plot.
std::vector<std::filesystem::path> cmd_map(const RunConfig& config);

synth::GeneratedFiles cmd_synth(const RunConfig& config);

/// Writes <out>/bundle.json for the interactive viewer.
std::filesystem::path cmd_bundle(const RunConfig& config);

/// Routes log output to standard error. 0 = warnings, 1 = info, 2+ = debug;
/// negative silences everything.
void configure_logging(int verbosity);

}  // namespace survmap::app
