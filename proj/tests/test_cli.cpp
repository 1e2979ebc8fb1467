#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pscd/cli.hpp"
#include "pscd/map_io.hpp"
#include "pscd/upd.hpp"
#include "support.hpp"

using nlohmann::json;
using testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pscd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = pscd::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_config(const std::filesystem::path& p) {
  std::ofstream(p) << R"({"frames_per_place": 8, "features_per_frame": 24, "n_queries": 4,
                         "experience_size": 60, "seed": 3})";
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("synth writes a complete, reproducible dataset") {
  TempDir dir("cli");
  write_config(dir / "cfg.json");
  auto r = cli({"synth", (dir / "cfg.json").string(), "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"map.jsonl", "queries.jsonl", "experience.psdf", "ground_truth.jsonl", "planted_truth.json"}) {
    CHECK(std::filesystem::exists(dir / "a" / f));
  }
  CHECK(json::parse(first_line(dir / "a" / "map.jsonl"))["config"]["seed"] == 3);
  REQUIRE(cli({"synth", (dir / "cfg.json").string(), "--out", (dir / "b").string()}).code == 0);
  CHECK(testing::slurp(dir / "a" / "map.jsonl") == testing::slurp(dir / "b" / "map.jsonl"));
  CHECK(testing::slurp(dir / "a" / "planted_truth.json") == testing::slurp(dir / "b" / "planted_truth.json"));
}

TEST_CASE("synth failures exit nonzero") {
  TempDir dir("cli");
  write_config(dir / "cfg.json");
  std::ofstream(dir / "blocker") << "x";
  auto r = cli({"synth", (dir / "cfg.json").string(), "--out", (dir / "blocker" / "sub").string()});
  CHECK(r.code != 0);
  CHECK_FALSE(r.err.empty());
  std::ofstream(dir / "bad.json") << R"({"n_places": 0})";
  CHECK(cli({"synth", (dir / "bad.json").string(), "--out", (dir / "c").string()}).code != 0);
  CHECK(cli({"synth", (dir / "missing.json").string(), "--out", (dir / "c").string()}).code != 0);
  CHECK(cli({"frobnicate"}).code != 0);
}

TEST_CASE("partition subcommand") {
  TempDir dir("cli");
  write_config(dir / "cfg.json");
  REQUIRE(cli({"synth", (dir / "cfg.json").string(), "--out", dir.path().string()}).code == 0);
  const auto map = (dir / "map.jsonl").string();

  REQUIRE(cli({"partition", "--map", map, "--strategy", "time", "--k", "1", "--out", (dir / "t.jsonl").string()}).code == 0);
  CHECK(pscd::load_partition(dir / "t.jsonl").size() == 1);
  REQUIRE(cli({"partition", "--map", map, "--strategy", "appearance", "--ts", "1e9", "--out", (dir / "a.jsonl").string()}).code == 0);
  CHECK(pscd::load_partition(dir / "a.jsonl").size() == 1);

  REQUIRE(cli({"partition", "--map", map, "--strategy", "appearance", "--ts", "100", "--out", (dir / "p.jsonl").string()}).code == 0);
  const auto in_process = pscd::partition_appearance(pscd::load_map(dir / "map.jsonl"), 100);
  CHECK(pscd::load_partition(dir / "p.jsonl").regions == in_process.regions);
  CHECK(json::parse(first_line(dir / "p.jsonl")).contains("config"));

  const auto missing = cli({"partition", "--map", map, "--strategy", "time", "--out", (dir / "x.jsonl").string()});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("--k") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "x.jsonl"));
}

TEST_CASE("train, detect and evaluate") {
  TempDir dir("cli");
  write_config(dir / "cfg.json");
  REQUIRE(cli({"synth", (dir / "cfg.json").string(), "--out", dir.path().string()}).code == 0);
  const auto map = (dir / "map.jsonl").string();
  const auto exp = (dir / "experience.psdf").string();
  const auto queries = (dir / "queries.jsonl").string();
  const auto gt = (dir / "ground_truth.jsonl").string();
  REQUIRE(cli({"partition", "--map", map, "--strategy", "appearance", "--ts", "100", "--out", (dir / "p.jsonl").string()}).code == 0);

  auto r = cli({"train", "--map", map, "--experience", exp, "--partition", (dir / "p.jsonl").string(),
                "--out", (dir / "models").string()});
  REQUIRE(r.code == 0);
  r = cli({"detect", "--models", (dir / "models").string(), "--map", map, "--queries", queries,
           "--tn", "50", "--out", (dir / "ranked.jsonl").string()});
  REQUIRE(r.code == 0);
  {
    std::ifstream in(dir / "ranked.jsonl");
    std::string line;
    std::getline(in, line);
    CHECK(json::parse(line).contains("config"));
    int lines = 0;
    while (std::getline(in, line)) {
      const auto j = json::parse(line);
      CHECK(j["ranking"].size() == 12);  // half of 24 features survive T_n = 50
      CHECK(j["ranking"][0]["rank"] == 1);
      ++lines;
    }
    CHECK(lines == 4);
  }

  SUBCASE("sweep over two T_n values gives two CSV rows") {
    r = cli({"evaluate", "--map", map, "--experience", exp, "--queries", queries, "--gt", gt,
             "--partition", (dir / "p.jsonl").string(), "--tn", "0,50", "--out", (dir / "rep.json").string()});
    REQUIRE(r.code == 0);
    const auto rep = json::parse(testing::slurp(dir / "rep.json"));
    CHECK(rep["reports"].size() == 2);
    CHECK(rep["config"]["tn"] == "0,50");
    std::ifstream csv(dir / "rep.csv");
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    CHECK(line.rfind("# config", 0) == 0);
    std::getline(csv, line);  // column names
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 2);
  }

  SUBCASE("T_n = 0 equals a run trained without nuisance") {
    REQUIRE(cli({"evaluate", "--map", map, "--experience", exp, "--queries", queries, "--gt", gt,
                 "--strategy", "appearance", "--ts", "100", "--tn", "0", "--out", (dir / "a.json").string()}).code == 0);
    REQUIRE(cli({"evaluate", "--map", map, "--experience", exp, "--queries", queries, "--gt", gt,
                 "--strategy", "appearance", "--ts", "100", "--tn", "0,30", "--out", (dir / "b.json").string()}).code == 0);
    const auto a = json::parse(testing::slurp(dir / "a.json"));
    const auto b = json::parse(testing::slurp(dir / "b.json"));
    CHECK(a["reports"][0] == b["reports"][0]);
  }

  SUBCASE("failures name the stage") {
    r = cli({"evaluate", "--map", map, "--experience", (dir / "nope.psdf").string(), "--queries", queries,
             "--gt", gt, "--partition", (dir / "p.jsonl").string(), "--out", (dir / "rep.json").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("loading experience") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir / "rep.json"));
    r = cli({"evaluate", "--map", map, "--experience", exp, "--queries", queries, "--gt", gt,
             "--strategy", "time", "--out", (dir / "rep.json").string()});
    CHECK(r.code != 0);
  }
}

TEST_CASE("evaluate reports are identical across job counts") {
  TempDir dir("cli");
  write_config(dir / "cfg.json");
  REQUIRE(cli({"synth", (dir / "cfg.json").string(), "--out", dir.path().string()}).code == 0);
  std::vector<std::string> base{"evaluate", "--map", (dir / "map.jsonl").string(),
                                "--experience", (dir / "experience.psdf").string(),
                                "--queries", (dir / "queries.jsonl").string(),
                                "--gt", (dir / "ground_truth.jsonl").string(),
                                "--strategy", "time", "--k", "3,6", "--tn", "0,40", "--seed", "7"};
  auto one = base, eight = base;
  one.insert(one.end(), {"--jobs", "1", "--out", (dir / "r1.json").string()});
  eight.insert(eight.end(), {"--jobs", "8", "--out", (dir / "r8.json").string()});
  REQUIRE(cli(one).code == 0);
  REQUIRE(cli(eight).code == 0);
  CHECK(testing::slurp(dir / "r1.json") == testing::slurp(dir / "r8.json"));
  CHECK(testing::slurp(dir / "r1.csv") == testing::slurp(dir / "r8.csv"));
}

TEST_CASE("flags can come from a config file") {
  TempDir dir("cli");
  write_config(dir / "cfg.json");
  REQUIRE(cli({"synth", (dir / "cfg.json").string(), "--out", dir.path().string()}).code == 0);
  std::ofstream(dir / "run.toml") << "seed = 11\n";
  REQUIRE(cli({"--config", (dir / "run.toml").string(), "partition", "--map", (dir / "map.jsonl").string(),
               "--strategy", "time", "--k", "2", "--out", (dir / "p.jsonl").string()}).code == 0);
  CHECK(pscd::load_partition(dir / "p.jsonl").size() == 2);
}
