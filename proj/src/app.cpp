#include "survmap/app.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "survmap/csv.hpp"
#include "survmap/estimation.hpp"
#include "survmap/inference.hpp"
#include "survmap/ingest.hpp"

namespace survmap::app {

namespace fs = std::filesystem;

VariableSelection parse_variable_selection(std::string_view text) {
  if (text == "vacancy") return VariableSelection::Vacancy;
  if (text == "pph") return VariableSelection::PPH;
  if (text == "both") return VariableSelection::Both;
  throw Error("--variable must be vacancy, pph or both; got '" + std::string(text) + "'");
}

std::vector<Variable> selected(VariableSelection selection) {
  switch (selection) {
    case VariableSelection::Vacancy: return {Variable::VacancyRate};
    case VariableSelection::PPH: return {Variable::PPH};
    case VariableSelection::Both: return {Variable::VacancyRate, Variable::PPH};
  }
  return {};
}

void configure_logging(int verbosity) {
  auto logger = spdlog::get("survmap");
  if (!logger) logger = spdlog::stderr_logger_st("survmap");
  logger->set_pattern("[%l] %v");
  if (verbosity < 0) {
    logger->set_level(spdlog::level::off);
  } else if (verbosity == 0) {
    logger->set_level(spdlog::level::warn);
  } else if (verbosity == 1) {
    logger->set_level(spdlog::level::info);
  } else {
    logger->set_level(spdlog::level::debug);
  }
  spdlog::set_default_logger(std::move(logger));
}

std::string file_digest(const fs::path& path) {
  const auto bytes = ingest::slurp(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(path.string() + ": SHA-256 digest failed");
  }
  std::string hex = "sha256:";
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::vector<inference::DifferenceResult> load_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open results (run 'estimate' first or pass --results)");
  return inference::read_results(in, path.string());
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  return out;
}

fs::path results_path(const RunConfig& config) {
  return config.results.empty() ? config.out_dir / "results.csv" : config.results;
}

void require_input(const fs::path& path, std::string_view flag) {
  if (path.empty()) throw Error("missing required input --" + std::string(flag));
  if (!fs::exists(path)) throw Error(path.string() + ": no such file (--" + std::string(flag) + ")");
}

double magnitude_break_for(const RunConfig& config, Variable v) {
  if (config.magnitude_break.empty()) return viz::default_magnitude_break(v);
  auto parse = [&](std::string_view text) {
    try {
      std::size_t used = 0;
      const double value = std::stod(std::string(text), &used);
      if (used != text.size() || !(value > 0.0)) throw std::invalid_argument("");
      return value;
    } catch (const std::exception&) {
      throw Error("--magnitude-break value '" + std::string(text) + "' is not a positive number");
    }
  };
  if (config.magnitude_break.find('=') == std::string::npos) return parse(config.magnitude_break);
  std::optional<double> found;
  for (auto item : csv::split(config.magnitude_break)) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error("--magnitude-break entries must be variable=value");
    if (parse_variable(item.substr(0, eq)) == v) found = parse(item.substr(eq + 1));
  }
  return found.value_or(viz::default_magnitude_break(v));
}

std::vector<std::pair<std::string, std::string>> with_inputs(
    const RunConfig& config, std::initializer_list<std::pair<std::string, fs::path>> inputs) {
  auto out = config.provenance;
  for (const auto& [name, path] : inputs) out.emplace_back(name, path.filename().string() + " " + file_digest(path));
  return out;
}

void write_manifest(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& entries) {
  auto out = open_output(path);
  for (const auto& [k, v] : entries) out << k << ": " << v << '\n';
}

std::vector<inference::DifferenceResult> of_variable(const std::vector<inference::DifferenceResult>& all,
                                                     Variable v) {
  std::vector<inference::DifferenceResult> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out), [&](const auto& r) { return r.variable == v; });
  return out;
}

std::string variable_title(Variable v) {
  return v == Variable::VacancyRate ? "Vacancy rate" : "Persons per household";
}

}  // namespace

viz::MapSpec map_spec_for(const RunConfig& config, Variable variable, viz::RenderMode mode) {
  auto spec = viz::MapSpec::defaults(variable, mode);
  spec.magnitude_break = magnitude_break_for(config, variable);
  if (!config.alpha_ladder.empty()) spec.ladder = viz::SaturationLadder::parse(config.alpha_ladder);
  spec.region.states = config.states;
  for (const auto& s : spec.region.states) {
    if (s.size() != 2 || !std::isdigit(static_cast<unsigned char>(s[0])) ||
        !std::isdigit(static_cast<unsigned char>(s[1]))) {
      throw Error("--state values must be two-digit state FIPS codes; got '" + s + "'");
    }
  }
  if (!config.bbox.empty()) spec.region.bbox = viz::BoundingBox::parse(config.bbox);
  if (!config.projection.empty()) {
    spec.projection = viz::AlbersParams::parse(config.projection);
  } else if (!spec.region.states.empty() &&
             std::all_of(spec.region.states.begin(), spec.region.states.end(),
                         [](const std::string& s) { return s == "02"; })) {
    spec.projection = viz::AlbersParams::alaska();
  }
  spec.width = config.width;
  spec.height = config.height;
  spec.validate();
  return spec;
}

std::vector<fs::path> cmd_estimate(const RunConfig& config) {
  require_input(config.microdata, "microdata");
  require_input(config.baseline, "baseline");
  fs::create_directories(config.out_dir);
  const auto variables = selected(config.variables);

  spdlog::info("reading microdata {}", config.microdata.string());
  auto grouped = estimation::group_by_area(ingest::read_microdata(config.microdata));
  const auto baseline = ingest::read_baseline(config.baseline);
  spdlog::info("{} areas surveyed", grouped.size());

  const estimation::EstimateOptions options{config.sdr_factor, config.jobs};
  std::vector<estimation::AreaEstimate> estimates;
  std::vector<inference::DifferenceResult> results;
  std::vector<fs::path> written;
  std::ostringstream sign_txt, sign_csv, national_txt, national_csv;
  sign_csv << "variable,k,n,p0,z,p_upper\n";
  national_csv << "variable,estimate,se,base,diff,t,p_two_sided,n_units,weight_sum\n";

  for (auto v : variables) {
    const auto name = std::string(to_string(v));
    auto est = estimation::estimate_areas(grouped, v, options);
    auto res = inference::compare_all(est, baseline);
    const auto tab = inference::tabulate_pvalues(res);
    const auto sig = inference::significance_table(tab);
    const auto no_test = res.size() - tab.n;
    if (no_test > 0) {
      spdlog::warn("{}: {} of {} areas have a zero or undefined standard error and are not tested", name, no_test,
                   res.size());
    }

    const auto tab_txt = config.out_dir / ("tabulation_" + name + ".txt");
    const auto tab_csv = config.out_dir / ("tabulation_" + name + ".csv");
    const auto sig_txt = config.out_dir / ("significance_" + name + ".txt");
    const auto sig_csv = config.out_dir / ("significance_" + name + ".csv");
    const auto qq_csv = config.out_dir / ("qq_" + name + ".csv");
    {
      auto out = open_output(tab_txt);
      inference::write_tabulation_text(out, tab, "p-values of " + variable_title(v) + " differences (one-sided)");
      out << fmt::format("{:<14}{:>8}\n", "not tested", no_test);
    }
    {
      auto out = open_output(tab_csv);
      inference::write_tabulation_csv(out, tab);
    }
    {
      auto out = open_output(sig_txt);
      inference::write_significance_text(out, sig, "Two-sided significance levels: " + variable_title(v));
    }
    {
      auto out = open_output(sig_csv);
      inference::write_significance_csv(out, sig);
    }
    {
      auto out = open_output(qq_csv);
      inference::write_qq_csv(out, inference::qq_series(inference::defined_pvalues(res)));
    }
    written.insert(written.end(), {tab_txt, tab_csv, sig_txt, sig_csv, qq_csv});

    if (tab.n > 0) {
      const auto st = inference::sign_test(sig.significant(), tab.n);
      sign_txt << fmt::format("{:<10} k={} n={} p0={} z={:.2f} one-sided p={:.3g}\n", name, st.k, st.n, st.p0,
                              st.z, st.p_upper());
      sign_csv << name << ',' << st.k << ',' << st.n << ',' << csv::format_real(st.p0) << ','
               << csv::format_real(st.z) << ',' << csv::format_real(st.p_upper()) << '\n';
    } else {
      sign_txt << name << " no tested areas\n";
    }

    if (auto us = baseline.find(Geoid::national()); us != baseline.end()) {
      const auto nat = inference::national_test(grouped, v, us->second.value(v), options);
      const auto& d = nat.difference;
      national_txt << fmt::format(
          "{}\n  survey estimate  {:.6f}\n  standard error   {:.6f}\n  baseline         {:.6f}\n"
          "  difference       {:.6f}\n  t                {:.2f}\n  p (two-sided)    {:.3g}\n"
          "  N                {}\n  sum of weights   {:.2f}\n",
          variable_title(v), *d.survey_estimate, *d.se, d.base_value, *d.difference, nat.t, nat.p_two_sided,
          nat.n_units, nat.weight_sum);
      national_csv << name << ',' << csv::format_real(d.survey_estimate) << ',' << csv::format_real(d.se) << ','
                   << csv::format_real(d.base_value) << ',' << csv::format_real(d.difference) << ','
                   << csv::format_real(nat.t) << ',' << csv::format_real(nat.p_two_sided) << ',' << nat.n_units
                   << ',' << csv::format_real(nat.weight_sum) << '\n';
    } else {
      spdlog::warn("baseline has no US row; skipping the national {} test", name);
    }

    std::move(est.begin(), est.end(), std::back_inserter(estimates));
    std::move(res.begin(), res.end(), std::back_inserter(results));
  }

  const auto est_path = config.out_dir / "estimates.csv";
  const auto res_path = config.out_dir / "results.csv";
  {
    auto out = open_output(est_path);
    estimation::write_estimates(out, estimates);
  }
  {
    auto out = open_output(res_path);
    inference::write_results(out, results);
  }
  const std::pair<fs::path, std::string> texts[] = {
      {config.out_dir / "sign_test.txt", sign_txt.str()},
      {config.out_dir / "sign_test.csv", sign_csv.str()},
      {config.out_dir / "national.txt", national_txt.str()},
      {config.out_dir / "national.csv", national_csv.str()},
  };
  for (const auto& [path, text] : texts) {
    auto out = open_output(path);
    out << text;
    written.push_back(path);
  }
  const auto manifest = config.out_dir / "manifest.txt";
  write_manifest(manifest, with_inputs(config, {{"microdata", config.microdata}, {"baseline", config.baseline}}));
  written.insert(written.begin(), {est_path, res_path});
  written.push_back(manifest);
  spdlog::info("wrote {} files to {}", written.size(), config.out_dir.string());
  return written;
}

std::vector<fs::path> cmd_map(const RunConfig& config) {
  const auto res_path = results_path(config);
  const auto all = load_results(res_path);
  fs::create_directories(config.out_dir);
  std::vector<fs::path> written;

  std::vector<ingest::AreaGeometry> geometry;
  const bool needs_geometry = std::any_of(config.modes.begin(), config.modes.end(),
                                          [](const std::string& m) { return m != "qq"; });
  // Validate every mode before producing any output.
  for (const auto& m : config.modes) {
    if (m != "qq") viz::parse_render_mode(m);
  }
  if (needs_geometry) {
    require_input(config.geometry, "geometry");
    geometry = ingest::read_geometry(config.geometry);
  }

  for (auto v : selected(config.variables)) {
    const auto name = std::string(to_string(v));
    const auto results = of_variable(all, v);
    for (const auto& m : config.modes) {
      if (m == "qq") {
        const auto series = inference::qq_series(inference::defined_pvalues(results));
        if (series.empty()) throw Error("no tested " + name + " areas in " + res_path.string() + " for a QQ plot");
        const auto path = config.out_dir / ("qq_" + name + ".svg");
        auto out = open_output(path);
        out << viz::render_qq(series, "QQ plot of " + variable_title(v) + " p-values",
                              with_inputs(config, {{"results", res_path}}));
        written.push_back(path);
        continue;
      }
      auto spec = map_spec_for(config, v, viz::parse_render_mode(m));
      spec.provenance = with_inputs(config, {{"results", res_path}, {"geometry", config.geometry}});
      const auto path = config.out_dir / ("map_" + name + "_" + m + ".svg");
      const auto svg = viz::render_map(geometry, results, spec);
      auto out = open_output(path);
      out << svg;
      written.push_back(path);
      spdlog::info("wrote {}", path.string());
    }
  }
  return written;
}

synth::GeneratedFiles cmd_synth(const RunConfig& config) {
  const synth::Generator gen(config.synth);
  auto files = synth::write_files(gen, config.out_dir);
  spdlog::info("generated {} synthetic areas in {}", gen.area_count(), config.out_dir.string());
  return files;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json area_payload(const inference::DifferenceResult* r) {
  if (r == nullptr) {
    return {{"estimate", nullptr}, {"base", nullptr}, {"diff", nullptr}, {"se", nullptr}, {"z", nullptr},
            {"p_one_sided", nullptr}, {"sig_class", "NoTest"}, {"display", nullptr}};
  }
  return {{"estimate", opt(r->survey_estimate)},
          {"base", r->base_value},
          {"diff", opt(r->difference)},
          {"se", opt(r->se)},
          {"z", opt(r->z_score)},
          {"p_one_sided", opt(r->p_one_sided)},
          {"sig_class", to_string(r->sig_class)},
          // Same text as results.csv, so the viewer can show it verbatim.
          {"display",
           {{"estimate", csv::format_real(r->survey_estimate)},
            {"base", csv::format_real(r->base_value)},
            {"diff", csv::format_real(r->difference)},
            {"se", csv::format_real(r->se)},
            {"z", csv::format_real(r->z_score)},
            {"p_one_sided", csv::format_real(r->p_one_sided)}}}};
}

nlohmann::json rgb_hex(const viz::Rgb& c) { return viz::to_hex(c); }

}  // namespace

fs::path cmd_bundle(const RunConfig& config) {
  const auto res_path = results_path(config);
  require_input(config.geometry, "geometry");
  const auto all = load_results(res_path);
  auto geometry = ingest::read_geometry(config.geometry);
  std::stable_sort(geometry.begin(), geometry.end(), [](const auto& a, const auto& b) { return a.geoid < b.geoid; });
  const auto variables = selected(config.variables);

  std::map<std::pair<Geoid, Variable>, const inference::DifferenceResult*> index;
  std::set<Geoid> result_geoids;
  for (const auto& r : all) {
    if (std::find(variables.begin(), variables.end(), r.variable) == variables.end()) continue;
    index[{r.geoid, r.variable}] = &r;
    result_geoids.insert(r.geoid);
  }
  std::set<Geoid> geometry_geoids;
  for (const auto& g : geometry) geometry_geoids.insert(g.geoid);

  std::vector<std::string> missing_results, missing_geometry;
  for (const auto& g : geometry_geoids) {
    if (!result_geoids.count(g)) missing_results.push_back(g.str());
  }
  for (const auto& g : result_geoids) {
    if (!geometry_geoids.count(g)) missing_geometry.push_back(g.str());
  }
  const double mismatch = static_cast<double>(missing_results.size() + missing_geometry.size()) /
                          static_cast<double>(std::max<std::size_t>(1, geometry_geoids.size()));
  if (mismatch > config.max_mismatch) {
    auto first = !missing_results.empty() ? "geometry geoid " + missing_results.front() + " has no results"
                                          : "result geoid " + missing_geometry.front() + " has no geometry";
    throw Error(fmt::format("geometry/results mismatch {:.1f}% exceeds {:.1f}% ({} without results, {} without "
                            "geometry; first: {})",
                            100.0 * mismatch, 100.0 * config.max_mismatch, missing_results.size(),
                            missing_geometry.size(), first));
  }
  if (!missing_results.empty()) {
    spdlog::warn("{} geometry areas have no results and are bundled as NoTest", missing_results.size());
  }

  nlohmann::json areas = nlohmann::json::array();
  for (const auto& g : geometry) {
    nlohmann::json area = {{"geoid", g.geoid.str()}, {"name", g.name}};
    for (auto v : variables) {
      auto it = index.find({g.geoid, v});
      area[std::string(to_string(v))] = area_payload(it == index.end() ? nullptr : it->second);
    }
    areas.push_back(std::move(area));
  }

  nlohmann::json qq, tabulations, breaks;
  for (auto v : variables) {
    const auto name = std::string(to_string(v));
    const auto results = of_variable(all, v);
    const auto ps = inference::defined_pvalues(results);
    nlohmann::json series = nlohmann::json::array();
    for (const auto& pt : inference::qq_series(ps)) series.push_back({pt.expected, pt.observed});
    qq[name] = std::move(series);

    const auto tab = inference::tabulate_pvalues(std::span<const double>(ps));
    const auto sig = inference::significance_table(tab);
    nlohmann::json bins = nlohmann::json::array();
    for (std::size_t i = 0; i < inference::kBinCount; ++i) {
      const auto bin = static_cast<inference::PBin>(i);
      bins.push_back({{"label", inference::bin_label(bin)},
                      {"count", tab.count(bin)},
                      {"percent", tab.percent(bin)},
                      {"expected_percent", inference::PValueTabulation::expected_percent(bin)}});
    }
    nlohmann::json entry = {{"n", tab.n},
                            {"not_tested", results.size() - tab.n},
                            {"bins", std::move(bins)},
                            {"significance",
                             {{"At1Pct", sig.at1},
                              {"At5Pct", sig.at5},
                              {"At10Pct", sig.at10},
                              {"NotSignificant", sig.not_significant}}}};
    if (tab.n > 0) {
      const auto st = inference::sign_test(sig.significant(), tab.n);
      entry["sign_test"] = {{"k", st.k}, {"n", st.n}, {"p0", st.p0}, {"z", st.z}, {"p_upper", st.p_upper()}};
    } else {
      entry["sign_test"] = nullptr;
    }
    tabulations[name] = std::move(entry);
    breaks[name] = magnitude_break_for(config, v);
  }

  const auto spec = map_spec_for(config, variables.front(), viz::RenderMode::Combined);
  nlohmann::json hues;
  for (auto h : {viz::HueClass::LargePositive, viz::HueClass::SmallPositive, viz::HueClass::SmallNegative,
                 viz::HueClass::LargeNegative}) {
    hues[std::string(viz::to_string(h))] = viz::hue_angle(h);
  }
  nlohmann::json map_spec = {
      {"mode", "combined"},
      {"magnitude_break", std::move(breaks)},
      {"ladder", {{"At1Pct", spec.ladder.at1}, {"At5Pct", spec.ladder.at5}, {"At10Pct", spec.ladder.at10}}},
      {"significance_threshold", 0.10},
      {"hues", std::move(hues)},
      {"lightness", {{"base", 0.5}, {"fade", 0.3}}},
      {"no_test_fill", rgb_hex(spec.no_test_fill)},
      {"not_significant_fill", rgb_hex(spec.not_significant_fill)},
      {"projection",
       {{"lat1", spec.projection.lat1},
        {"lat2", spec.projection.lat2},
        {"lon0", spec.projection.lon0},
        {"lat0", spec.projection.lat0}}}};

  nlohmann::json provenance = nlohmann::json::object();
  for (const auto& [k, v] : with_inputs(config, {{"results", res_path}, {"geometry", config.geometry}})) {
    provenance[k] = v;
  }
  std::vector<std::string> variable_names;
  for (auto v : variables) variable_names.emplace_back(to_string(v));

  const nlohmann::json bundle = {{"format", "survmap-bundle"},
                                 {"version", 1},
                                 {"variables", variable_names},
                                 {"areas", std::move(areas)},
                                 {"qq", std::move(qq)},
                                 {"tabulations", std::move(tabulations)},
                                 {"map_spec", std::move(map_spec)},
                                 {"geometry", ingest::to_geojson(geometry)},
                                 {"provenance", std::move(provenance)}};
  fs::create_directories(config.out_dir);
  const auto path = config.out_dir / "bundle.json";
  auto out = open_output(path);
  out << bundle.dump() << '\n';
  spdlog::info("wrote {}", path.string());
  return path;
}

}  // namespace survmap::app
