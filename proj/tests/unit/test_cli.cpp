#include <doctest.h>

#include <cmath>
#include <fstream>

#include "../support/cli_driver.hpp"
#include "bsup/datapipe.hpp"
#include <json.hpp>
#include "helpers.hpp"

using cli_driver::run;
using testing_helpers::scratch_dir;
namespace fs = std::filesystem;

namespace {

void write_pngs(const fs::path& dir, const std::vector<std::string>& names, std::uint64_t seed) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < names.size(); ++i) {
    bsup::GrayImage g = testing_helpers::random_image(24, 24, seed + i);
    bsup::save_image(g, dir / names[i]);
  }
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "--model", "vgg", "--data", "x", "--out", "y"}).code == 2);
  CHECK(run({"train", "--data", "x"}).code == 2);
  CHECK(run({"synth", "--no-such-flag"}).code == 2);
  CHECK(run({"stats", "--groups", "/nonexistent/file.csv"}).code == 2);
  CHECK(cli_driver::run_binary({"train", "--model", "vgg"}) == 2);
  CHECK(cli_driver::run_binary({"--help"}) == 0);
}

TEST_CASE("numeric failures exit with 3") {
  const auto dir = scratch_dir("cli_numeric");
  std::ofstream(dir / "g.csv") << "a,1\na,nan\na,2\nb,2\nb,3\nb,5\n";
  CHECK(run({"stats", "--groups", (dir / "g.csv").string()}).code == 3);
  CHECK(cli_driver::run_binary({"stats", "--groups", (dir / "g.csv").string()}) == 3);
}

TEST_CASE("every subcommand takes --seed and --config") {
  for (const char* cmd : {"augment", "train", "suppress", "evaluate", "hist-compare", "stats", "synth"}) {
    CAPTURE(cmd);
    const auto r = run({cmd, "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--seed") != std::string::npos);
    CHECK(r.out.find("--config") != std::string::npos);
  }
}

TEST_CASE("config files: values apply, flags override, unknown keys rejected") {
  const auto dir = scratch_dir("cli_config");
  std::ofstream(dir / "ok.cfg") << "# synthetic data\ncount = 3\nsize=32\nseed = 9\n";
  auto r = run({"synth", "--config", (dir / "ok.cfg").string(), "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  CHECK(bsup::read_dataset(dir / "a").size() == 3);
  auto rep = nlohmann::json::parse(cli_driver::read_file(dir / "a" / "report.json"));
  CHECK(rep["seed"] == 9);

  r = run({"synth", "--config", (dir / "ok.cfg").string(), "--count", "2", "--out", (dir / "b").string()});
  REQUIRE(r.code == 0);
  CHECK(bsup::read_dataset(dir / "b").size() == 2);

  std::ofstream(dir / "bad.cfg") << "count = 3\nwarp_factor = 9\n";
  r = run({"synth", "--config", (dir / "bad.cfg").string(), "--out", (dir / "c").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("warp") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "c"));

  std::ofstream(dir / "dup.cfg") << "count = 3\ncount = 4\n";
  CHECK(run({"synth", "--config", (dir / "dup.cfg").string(), "--out", (dir / "d").string()}).code == 2);
}

TEST_CASE("evaluate: identity predictions, aggregate identity, orphans") {
  const auto dir = scratch_dir("cli_evaluate");
  write_pngs(dir / "gt", {"a.png", "b.png"}, 1);
  write_pngs(dir / "pred", {"a.png", "b.png"}, 1);
  auto r = run({"evaluate", "--pred", (dir / "pred").string(), "--gt", (dir / "gt").string(), "--json",
                (dir / "e.json").string()});
  REQUIRE(r.code == 0);
  auto rep = nlohmann::json::parse(cli_driver::read_file(dir / "e.json"));
  CHECK(rep["aggregate"]["mae"] == 0.0);
  CHECK(rep["aggregate"]["ms_ssim"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));

  write_pngs(dir / "pred2", {"a.png", "b.png"}, 7);
  r = run({"evaluate", "--pred", (dir / "pred2").string(), "--gt", (dir / "gt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("file,mae,mse,psnr,ssim,ms_ssim,ms_ssim_loss,combined_loss\n", 0) == 0);
  const auto agg_at = r.out.find("aggregate,");
  REQUIRE(agg_at != std::string::npos);
  std::vector<double> v;
  std::stringstream row(r.out.substr(agg_at + 10));
  for (std::string cell; std::getline(row, cell, ',');) v.push_back(std::stod(cell));
  REQUIRE(v.size() == 7);
  CHECK(std::abs(v[6] - (0.84 * v[5] + 0.16 * v[0])) < 1e-9);

  write_pngs(dir / "pred3", {"a.png", "c.png"}, 1);
  r = run({"evaluate", "--pred", (dir / "pred3").string(), "--gt", (dir / "gt").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("c.png") != std::string::npos);
}

TEST_CASE("hist-compare on an image with itself") {
  const auto dir = scratch_dir("cli_hist");
  write_pngs(dir, {"x.png"}, 3);
  const auto r = run({"hist-compare", (dir / "x.png").string(), (dir / "x.png").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["correlation"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  for (const char* k : {"chi_square", "bhattacharyya", "emd"}) CHECK(std::abs(j[k].get<double>()) <= 1e-12);
}

TEST_CASE("stats: identical groups, 4-vs-4 degrees of freedom") {
  const auto dir = scratch_dir("cli_stats");
  std::ofstream(dir / "same.csv") << "label,value\nb,0.81\nb,0.83\nb,0.79\nb,0.85\nt,0.81\nt,0.83\nt,0.79\nt,0.85\n";
  const auto r = run({"stats", "--groups", (dir / "same.csv").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["significant"] == false);
  CHECK(j["anova"]["df"][0] == 1.0);
  CHECK(j["anova"]["df"][1] == 6.0);
  CHECK(j["baseline"]["label"] == "b");
}

TEST_CASE("repeated runs produce byte-identical artifacts") {
  const auto root = fs::path(BSUP_TEST_TMP) / "cli_repro";
  const auto first = cli_driver::run_pipeline(root);
  CHECK(first.failures.empty());
  for (const auto& f : first.failures) MESSAGE(f);
  const auto second = cli_driver::run_pipeline(root);
  CHECK(second.failures.empty());
  CHECK(first.files.size() > 10);
  CHECK(first.stdout_log == second.stdout_log);
  for (const auto& [name, bytes] : first.files) {
    CAPTURE(name);
    REQUIRE(second.files.count(name) == 1);
    CHECK(second.files.at(name) == bytes);
  }
}
