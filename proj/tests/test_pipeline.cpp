#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "homog2d/cache.hpp"
#include "homog2d/config.hpp"
#include "homog2d/pipeline.hpp"
#include "homog2d/report.hpp"

using namespace homog2d;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("homog2d-pipeline-test-" + tag);
  fs::remove_all(p);
  return p;
}

std::string config_text(const std::string& preset_name) {
  return "command = \"all\"\npreset = \"" + preset_name +
         "\"\nN = 64\nP = 8\neps = [0.25, 0.125, 0.0625]\n[green]\nrandom_pairs = 128\nbmo_centers = 32\n";
}

RunConfig small(const std::string& preset_name, const fs::path& root) {
  auto c = parse_config_text(config_text(preset_name));
  c.out = (root / "out").string();
  c.cache = (root / "cache").string();
  return c;
}

}  // namespace

TEST(Report, SummaryAndTextAgree) {
  const std::vector<Check> checks = {{"a.x", Status::Pass, 0.125, "<= 1", "a.csv"},
                                     {"b.y", Status::Flag, 3.5, ">= 4", "b.csv"},
                                     {"c.z", Status::Fail, 1e-3, "<= 1e-06", "c.csv"}};
  const auto csv = summary_csv(checks);
  EXPECT_TRUE(csv.starts_with("id,status,value,limit,source\n"));
  const auto txt = report_text("t", checks);
  for (const auto& c : checks) {
    EXPECT_NE(csv.find(c.id + "," + to_string(c.status) + "," + format_value(c.value)), std::string::npos);
    EXPECT_NE(txt.find(format_value(c.value)), std::string::npos);
  }
  EXPECT_NE(txt.find("1 PASS, 1 FLAG, 1 FAIL"), std::string::npos);
}

TEST(Report, RatesCsvMarksExactFits) {
  RateReport r;
  r.preset = "identity";
  RateSeries s;
  s.norm_id = "L2";
  s.eps = {0.25, 0.125, 0.0625};
  s.error = {0.0, 0.0, 0.0};
  s.fit.exact = true;
  r.series.push_back(s);
  r.residuals = {1e-12, 1e-12, 1e-12};
  const auto csv = rates_csv({r});
  EXPECT_TRUE(csv.starts_with("preset,eps,norm_id,error,slope,residual\n"));
  EXPECT_NE(csv.find("exact"), std::string::npos);
}

TEST(Report, SvgIsSelfContained) {
  const auto svg = svg_loglog("t", "eps", "err", {{"s", {0.25, 0.125}, {1.0, 0.5}}});
  EXPECT_TRUE(svg.starts_with("<svg"));
  EXPECT_NE(svg.find("<path"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Pipeline, IdentityAllPassesAndIsReproducible) {
  const auto root = scratch("identity");
  const auto cfg = small("identity", root);
  const auto first = run(cfg);
  EXPECT_EQ(first.exit_code, 0);
  EXPECT_FALSE(first.cell_from_cache);
  for (const auto& c : first.checks) EXPECT_EQ(c.status, Status::Pass) << c.id;
  for (const auto* f : {"cell.csv", "effective.csv", "solve.csv", "green_report.csv", "rates.csv", "summary.csv",
                        "report.txt", "config.effective.toml", "rates.svg"}) {
    ASSERT_TRUE(first.files.count(f)) << f;
    EXPECT_TRUE(fs::exists(fs::path(cfg.out) / f)) << f;
  }
  // every number in the report comes from summary.csv
  const auto& summary = first.files.at("summary.csv");
  const auto& report = first.files.at("report.txt");
  for (const auto& c : first.checks) {
    EXPECT_NE(summary.find(c.id + "," + to_string(c.status) + "," + format_value(c.value)), std::string::npos);
    EXPECT_NE(report.find(format_value(c.value)), std::string::npos) << c.id;
    EXPECT_TRUE(first.files.count(c.source)) << c.id << " cites " << c.source;
  }
  // the echoed config parses back to the same config
  EXPECT_EQ(echo_config(parse_config_text(first.files.at("config.effective.toml"))),
            first.files.at("config.effective.toml"));

  const auto second = run(cfg);
  EXPECT_TRUE(second.cell_from_cache);
  for (const auto& [name, content] : first.files)
    if (name.ends_with(".csv")) EXPECT_EQ(second.files.at(name), content) << name;

  // corrupt the cache: recomputed, same artifacts
  const auto path = cache_path(cfg.cache, coefficient_hash(cfg.set));
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  ASSERT_FALSE(bytes.empty());
  bytes[bytes.size() / 3] ^= 0x40;
  std::ofstream(path, std::ios::binary) << bytes;
  const auto third = run(cfg);
  EXPECT_FALSE(third.cell_from_cache);
  for (const auto& [name, content] : first.files)
    if (name.ends_with(".csv")) EXPECT_EQ(third.files.at(name), content) << name;
  fs::remove_all(root);
}

TEST(Pipeline, SolverFailureKeepsPartialArtifacts) {
  const auto root = scratch("failure");
  auto set = preset("identity");
  set.c[0] = -1000.0;
  set.kappa = 1000.0;
  auto cfg = parse_config_text("command = \"all\"\nN = 64\nP = 8\neps = [0.25, 0.125, 0.0625]\n\n" + serialize(set));
  cfg.out = (root / "out").string();
  cfg.cache = (root / "cache").string();
  const auto r = run(cfg);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_TRUE(fs::exists(fs::path(cfg.out) / "cell.csv"));
  EXPECT_TRUE(fs::exists(fs::path(cfg.out) / "report.txt"));
  bool failed = false;
  for (const auto& c : r.checks) failed = failed || c.status == Status::Fail;
  EXPECT_TRUE(failed);
  fs::remove_all(root);
}
