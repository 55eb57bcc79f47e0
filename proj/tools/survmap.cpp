// survmap: county difference estimates, significance diagnostics and
// value-by-alpha maps from replicate-weighted survey microdata.

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "survmap/app.hpp"

int main(int argc, char** argv) {
  using namespace survmap;
  app::RunConfig cfg;
  std::string variable = "both";
  std::string microdata, baseline, geometry, results, out = "out";
  int verbosity = 0;
  bool quiet = false;
  std::optional<double> sdr_factor;

  CLI::App cli{"Survey difference estimates, global-null diagnostics and hue/saturation choropleths"};
  cli.set_config("--config", "", "flat key=value configuration file (flags override it)");
  cli.require_subcommand(1);
  cli.option_defaults()->always_capture_default();

  cli.add_option("--microdata", microdata, "unit-record microdata CSV");
  cli.add_option("--baseline", baseline, "baseline CSV (geoid,vacancy_rate,pph)");
  cli.add_option("--geometry", geometry, "GeoJSON FeatureCollection with GEOID properties");
  cli.add_option("--results", results, "results CSV (default <out>/results.csv)");
  cli.add_option("--out", out, "output directory");
  cli.add_option("--variable", variable, "vacancy, pph or both")->check(CLI::IsMember({"vacancy", "pph", "both"}));
  cli.add_option("--mode", cfg.modes, "map modes: difference, pvalue, combined, qq")->delimiter(',');
  cli.add_option("--bbox", cfg.bbox, "zoom box min_lon,min_lat,max_lon,max_lat");
  cli.add_option("--state", cfg.states, "two-digit state FIPS filter")->delimiter(',');
  cli.add_option("--magnitude-break", cfg.magnitude_break, "large/small break: value or vacancy=..,pph=..");
  cli.add_option("--alpha-ladder", cfg.alpha_ladder, "saturation for 1%,5%,10% (default 1,0.65,0.35)");
  cli.add_option("--projection", cfg.projection, "conus, alaska or lat1,lat2,lon0,lat0");
  cli.add_option("--width", cfg.width, "map width in pixels");
  cli.add_option("--height", cfg.height, "map height in pixels");
  cli.add_option("--jobs", cfg.jobs, "worker threads for per-area estimation")->check(CLI::PositiveNumber);
  cli.add_option("--sdr-factor", sdr_factor, "replicate variance multiplier (default 4/R)");
  cli.add_option("--max-mismatch", cfg.max_mismatch, "tolerated geometry/results geoid mismatch share");
  cli.add_option("--seed", cfg.synth.seed, "synthetic data seed");
  cli.add_option("--areas", cfg.synth.n_areas, "synthetic area count");
  cli.add_option("--units-min", cfg.synth.units_min, "fewest units per synthetic area");
  cli.add_option("--units-max", cfg.synth.units_max, "most units per synthetic area");
  cli.add_option("--replicates", cfg.synth.replicates, "replicate weight columns");
  cli.add_option("--altered-fraction", cfg.synth.altered_fraction, "share of areas with a planted difference");
  cli.add_option("--effect-size", cfg.synth.effect_size, "planted difference in design standard errors");
  cli.add_flag("-v,--verbose", verbosity, "more logging (repeatable)");
  cli.add_flag("-q,--quiet", quiet, "no logging");

  auto* estimate = cli.add_subcommand("estimate", "estimate areas, compare to baseline, tabulate p-values");
  auto* map = cli.add_subcommand("map", "render SVG maps and QQ plots from a results file");
  auto* synth = cli.add_subcommand("synth", "generate synthetic microdata, baseline, geometry and truth");
  auto* bundle = cli.add_subcommand("bundle", "write the JSON bundle for the interactive viewer");
  for (auto* sub : {estimate, map, synth, bundle}) sub->fallthrough();

  CLI11_PARSE(cli, argc, argv);

  app::configure_logging(quiet ? -1 : verbosity);
  try {
    cfg.variables = app::parse_variable_selection(variable);
    cfg.microdata = microdata;
    cfg.baseline = baseline;
    cfg.geometry = geometry;
    cfg.results = results;
    cfg.out_dir = out;
    cfg.sdr_factor = sdr_factor;
    // Effective settings, including anything read from --config.
    std::string effective = cli.config_to_str(true, false);
    for (char& ch : effective) {
      if (ch == '\n') ch = ';';
    }
    if (auto* conf = cli.get_config_ptr(); conf != nullptr && conf->count() > 0) {
      const auto path = conf->as<std::string>();
      cfg.provenance.emplace_back("config", path + " " + app::file_digest(path));
    }
    cfg.provenance.emplace_back("settings", effective);

    if (*estimate) {
      app::cmd_estimate(cfg);
    } else if (*map) {
      app::cmd_map(cfg);
    } else if (*synth) {
      app::cmd_synth(cfg);
    } else if (*bundle) {
      app::cmd_bundle(cfg);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    if (quiet) std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
