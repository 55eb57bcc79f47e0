#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "survmap/app.hpp"
#include "survmap/csv.hpp"
#include "survmap/inference.hpp"
#include "svg_parse.hpp"
#include "test_helpers.hpp"

using namespace survmap;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class AppTest : public ::testing::Test {
 protected:
  void SetUp() override {
    app::configure_logging(-1);
    dir = fixtures::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    config.out_dir = dir / "synth";
    config.synth.n_areas = 100;
    config.synth.units_min = 40;
    config.synth.units_max = 80;
    config.synth.replicates = 20;
    config.synth.seed = 5;
    files = app::cmd_synth(config);
    config.microdata = files.microdata;
    config.baseline = files.baseline;
    config.geometry = files.geometry;
    config.out_dir = dir / "out";
  }

  fs::path dir;
  app::RunConfig config;
  synth::GeneratedFiles files;
};

}  // namespace

TEST_F(AppTest, EstimateWritesEveryOutput) {
  const auto written = app::cmd_estimate(config);
  for (const auto& p : written) EXPECT_TRUE(fs::exists(p)) << p;
  const auto results = app::load_results(config.out_dir / "results.csv");
  std::size_t vacancy = 0, pph = 0;
  for (const auto& r : results) (r.variable == Variable::VacancyRate ? vacancy : pph)++;
  EXPECT_EQ(vacancy, 100u);
  EXPECT_EQ(pph, 100u);
  for (const char* name : {"estimates.csv", "tabulation_vacancy.txt", "tabulation_pph.csv", "significance_pph.txt",
                           "qq_vacancy.csv", "sign_test.csv", "national.txt", "national.csv", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(config.out_dir / name)) << name;
  }
  EXPECT_NE(read_file(config.out_dir / "manifest.txt").find("sha256:"), std::string::npos);
  const auto nat = read_file(config.out_dir / "national.csv");
  EXPECT_EQ(nat.rfind("variable,estimate,se,base,diff,t,p_two_sided,n_units,weight_sum\n", 0), 0u);
}

TEST_F(AppTest, EstimateIsDeterministicAcrossJobCounts) {
  app::cmd_estimate(config);
  const auto serial = read_file(config.out_dir / "results.csv");
  config.jobs = 4;
  config.out_dir = dir / "out4";
  app::cmd_estimate(config);
  EXPECT_EQ(serial, read_file(config.out_dir / "results.csv"));
}

TEST_F(AppTest, DegenerateAreaIsNotTested) {
  // Rewrite one area so every unit is occupied: its vacancy rate is 0 in the
  // full sample and every replicate.
  auto units = ingest::read_microdata(config.microdata);
  const auto target = units.front().geoid;
  for (auto& u : units) {
    if (u.geoid == target && u.status == Occupancy::Vacant) {
      u.status = Occupancy::Occupied;
      u.persons = 2;
    }
  }
  {
    std::ofstream out(config.microdata, std::ios::binary | std::ios::trunc);
    ingest::write_microdata(out, units);
  }
  app::cmd_estimate(config);
  const auto results = app::load_results(config.out_dir / "results.csv");
  const auto it = std::find_if(results.begin(), results.end(), [&](const auto& r) {
    return r.geoid == target && r.variable == Variable::VacancyRate;
  });
  ASSERT_NE(it, results.end());
  EXPECT_EQ(it->sig_class, SigClass::NoTest);
  EXPECT_FALSE(it->p_one_sided.has_value());
  const auto tab = read_file(config.out_dir / "tabulation_vacancy.csv");
  std::size_t total = 0;
  std::istringstream lines(tab);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) total += std::stoul(std::string(csv::split(line)[1]));
  EXPECT_EQ(total, 99u);
}

TEST_F(AppTest, MissingBaselineRowNamesGeoid) {
  auto base = ingest::read_baseline(config.baseline);
  base.erase(Geoid::parse("01011"));
  {
    std::ofstream out(config.baseline, std::ios::binary | std::ios::trunc);
    ingest::write_baseline(out, base);
  }
  try {
    app::cmd_estimate(config);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("01011"), std::string::npos) << e.what();
  }
}

TEST_F(AppTest, MapsAndQQ) {
  app::cmd_estimate(config);
  config.modes = {"combined", "difference", "pvalue", "qq"};
  const auto written = app::cmd_map(config);
  EXPECT_EQ(written.size(), 8u);
  const auto svg = read_file(config.out_dir / "map_vacancy_combined.svg");
  EXPECT_EQ(fixtures::svg_areas(svg).size(), 100u);
  EXPECT_NE(svg.find("results: "), std::string::npos);
  EXPECT_TRUE(fs::exists(config.out_dir / "qq_pph.svg"));

  // Byte-identical on rerun.
  app::cmd_map(config);
  EXPECT_EQ(svg, read_file(config.out_dir / "map_vacancy_combined.svg"));
}

TEST_F(AppTest, StateFilterSelectsAlaskaProjection) {
  config.synth.n_areas = 300;
  config.out_dir = dir / "synth300";
  files = app::cmd_synth(config);
  config.microdata = files.microdata;
  config.baseline = files.baseline;
  config.geometry = files.geometry;
  config.out_dir = dir / "out300";
  app::cmd_estimate(config);
  config.modes = {"pvalue"};
  config.states = {"02"};
  config.variables = app::VariableSelection::Vacancy;
  app::cmd_map(config);
  const auto svg = read_file(config.out_dir / "map_vacancy_pvalue.svg");
  EXPECT_EQ(fixtures::svg_areas(svg).size(), 100u);
  for (const auto& a : fixtures::svg_areas(svg)) EXPECT_EQ(a.geoid.substr(0, 2), "02");
  EXPECT_NE(svg.find("-154"), std::string::npos);
  EXPECT_EQ(app::map_spec_for(config, Variable::VacancyRate, viz::RenderMode::PValue).projection.lon0, -154.0);
}

TEST_F(AppTest, MapErrors) {
  app::cmd_estimate(config);
  config.modes = {"combined", "sparkle"};
  EXPECT_THROW(app::cmd_map(config), Error);
  EXPECT_FALSE(fs::exists(config.out_dir / "map_vacancy_combined.svg"));
  config.modes = {"combined"};
  config.states = {"55"};
  EXPECT_THROW(app::cmd_map(config), Error);
  config.states.clear();
  config.magnitude_break = "vacancy=0.03,pph=0.2";
  EXPECT_EQ(app::map_spec_for(config, Variable::PPH, viz::RenderMode::Combined).magnitude_break, 0.2);
  config.magnitude_break = "-1";
  EXPECT_THROW(app::map_spec_for(config, Variable::PPH, viz::RenderMode::Combined), Error);
}

TEST_F(AppTest, SynthDigestsAreStable) {
  const auto first = files;
  config.out_dir = dir / "again";
  const auto second = app::cmd_synth(config);
  for (auto m : {&synth::GeneratedFiles::microdata, &synth::GeneratedFiles::baseline,
                 &synth::GeneratedFiles::geometry, &synth::GeneratedFiles::truth}) {
    EXPECT_EQ(app::file_digest(first.*m), app::file_digest(second.*m));
  }
  EXPECT_EQ(app::file_digest(first.microdata).rfind("sha256:", 0), 0u);
  EXPECT_EQ(app::file_digest(first.microdata).size(), 7u + 64u);
}

TEST_F(AppTest, FileDigestKnownValue) {
  const auto p = dir / "abc.txt";
  {
    std::ofstream out(p, std::ios::binary);
    out << "abc";
  }
  EXPECT_EQ(app::file_digest(p), "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(AppTest, Bundle) {
  app::cmd_estimate(config);
  const auto path = app::cmd_bundle(config);
  const auto text = read_file(path);
  const auto bundle = nlohmann::json::parse(text);
  EXPECT_EQ(bundle["format"], "survmap-bundle");
  EXPECT_EQ(bundle["version"], 1);
  EXPECT_EQ(bundle["areas"].size(), 100u);
  EXPECT_EQ(bundle["geometry"]["features"].size(), 100u);
  const auto& first = bundle["areas"][0];
  EXPECT_EQ(first["geoid"], "01001");
  for (const char* key : {"estimate", "base", "diff", "se", "z", "p_one_sided", "sig_class"}) {
    EXPECT_TRUE(first["vacancy"].contains(key)) << key;
  }
  EXPECT_EQ(bundle["map_spec"]["significance_threshold"], 0.10);
  EXPECT_EQ(bundle["map_spec"]["hues"]["LargePositive"], 220.0);
  EXPECT_EQ(bundle["tabulations"]["vacancy"]["bins"].size(), 7u);
  EXPECT_EQ(bundle["qq"]["pph"].size(), bundle["tabulations"]["pph"]["n"].get<std::size_t>());

  // Rerun is byte-identical.
  app::cmd_bundle(config);
  EXPECT_EQ(text, read_file(path));

  // The CSV text and the bundle display strings agree.
  const auto results = app::load_results(config.out_dir / "results.csv");
  const auto& r = results.front();
  EXPECT_EQ(first["vacancy"]["display"]["estimate"], csv::format_real(r.survey_estimate));
}

TEST_F(AppTest, BundleMarksMissingResultsAsNoTest) {
  app::cmd_estimate(config);
  auto results = app::load_results(config.out_dir / "results.csv");
  const auto dropped = Geoid::parse("01003");
  std::erase_if(results, [&](const auto& r) { return r.geoid == dropped; });
  config.results = dir / "partial.csv";
  {
    std::ofstream out(config.results, std::ios::binary);
    inference::write_results(out, results);
  }
  const auto bundle = nlohmann::json::parse(read_file(app::cmd_bundle(config)));
  const auto& area = bundle["areas"][1];
  ASSERT_EQ(area["geoid"], "01003");
  EXPECT_EQ(area["vacancy"]["sig_class"], "NoTest");
  EXPECT_TRUE(area["vacancy"]["p_one_sided"].is_null());

  // 10 of 100 missing exceeds the default 5% threshold.
  std::erase_if(results, [](const auto& r) { return r.geoid.str() < "01023"; });
  {
    std::ofstream out(config.results, std::ios::binary | std::ios::trunc);
    inference::write_results(out, results);
  }
  try {
    app::cmd_bundle(config);
    FAIL() << "expected a mismatch error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("01001"), std::string::npos) << e.what();
  }
}
