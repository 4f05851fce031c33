#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "graspprior/cli.hpp"
#include "graspprior/io.hpp"

using namespace graspprior;
namespace fs = std::filesystem;

namespace
{

struct Run
{
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args)
{
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("graspprior_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("usage handling")
{
  const Run help = cli({"refine", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--grasps") != std::string::npos);

  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"refine"}).code == 2);
  CHECK(cli({}).code == 2);
  const Run unknown = cli({"frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("gen-scene") != std::string::npos);
  CHECK(cli({"gradcheck", "--bogus"}).code == 2);
  CHECK(cli({"gen-scene", "--out", "x", "--objects", "zero"}).code == 2);
}

TEST_CASE("parse_frictions")
{
  CHECK(parse_frictions("0.2:1.2:0.2") == std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0, 1.2});
  CHECK(parse_frictions("0.5,1") == std::vector<double>{0.5, 1.0});
  CHECK_THROWS(parse_frictions("1:0.5:0.1"));
  CHECK_THROWS(parse_frictions("a,b"));
  CHECK_THROWS(parse_frictions("0,1"));
}

TEST_CASE("full pipeline on a one-sphere scene")
{
  const fs::path dir = temp_dir("pipeline");
  const std::string raw = (dir / "raw").string(), baked = (dir / "baked").string();
  REQUIRE(cli({"gen-scene", "--seed", "0", "--objects", "1", "--shapes", "sphere", "--out", raw}).code == 0);
  CHECK(fs::exists(dir / "raw" / "manifest.json"));
  REQUIRE(cli({"bake-sdf", "--scene", raw + "/scene.json", "--res", "48", "--out", baked}).code == 0);
  const std::string scene = baked + "/scene.json";
  REQUIRE(cli({"sample-grasps", "--scene", scene, "--per-object", "6", "--seed", "0", "--out",
               (dir / "g.jsonl").string()})
              .code == 0);
  CHECK(read_grasps(dir / "g.jsonl").size() == 6);

  REQUIRE(cli({"pcr-eval", "--grasps", (dir / "g.jsonl").string(), "--scene", scene, "--out",
               (dir / "pcr.csv").string()})
              .code == 0);
  const std::string csv = read_text(dir / "pcr.csv");
  CHECK(csv.rfind("grasp_index,object_id,r_a,r_c,r_s,r_weighted,grad_norm\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

  REQUIRE(cli({"refine", "--grasps", (dir / "g.jsonl").string(), "--scene", scene, "--iters", "30", "--out",
               (dir / "r.jsonl").string(), "--trace", (dir / "trace").string()})
              .code == 0);
  const std::string refined = read_text(dir / "r.jsonl");
  CHECK(refined.find("\"iters_used\"") != std::string::npos);
  CHECK(fs::exists(dir / "trace" / "trace_0.csv"));
  CHECK(read_text(dir / "trace" / "trace_0.csv").rfind("iter,j,j_c,j_s,delta_t\n", 0) == 0);

  REQUIRE(cli({"evaluate", "--grasps", (dir / "r.jsonl").string(), "--scene", scene, "--out",
               (dir / "report.json").string()})
              .code == 0);
  const auto report = nlohmann::json::parse(read_text(dir / "report.json"));
  CHECK(report["scene"] == "scene.json");
  CHECK(report["k"] == 5);
  std::vector<std::string> keys;
  for (const auto& [key, value] : report["ap_by_friction"].items())
    keys.push_back(key);
  CHECK(keys == std::vector<std::string>{"0.2", "0.4", "0.6", "0.8", "1", "1.2"});

  const auto manifest = nlohmann::json::parse(read_text(dir / "report.json.manifest.json"));
  CHECK(manifest["command"] == "evaluate");
  CHECK(manifest["version"] == kToolVersion);
  CHECK(manifest["config"]["frictions"].size() == 6);
  fs::remove_all(dir);
}

TEST_CASE("seed resolution")
{
  const fs::path dir = temp_dir("seed");
  REQUIRE(cli({"gen-scene", "--seed", "5", "--out", (dir / "flag").string()}).code == 0);
  ::setenv("GRASPPRIOR_SEED", "5", 1);
  REQUIRE(cli({"gen-scene", "--out", (dir / "env").string()}).code == 0);
  ::setenv("GRASPPRIOR_SEED", "6", 1);
  REQUIRE(cli({"gen-scene", "--seed", "5", "--out", (dir / "both").string()}).code == 0);
  ::unsetenv("GRASPPRIOR_SEED");
  REQUIRE(cli({"gen-scene", "--out", (dir / "none").string()}).code == 0);
  REQUIRE(cli({"gen-scene", "--seed", "0", "--out", (dir / "zero").string()}).code == 0);

  const std::string flag = read_text(dir / "flag" / "obj_0.csv");
  CHECK(read_text(dir / "env" / "obj_0.csv") == flag);
  CHECK(read_text(dir / "both" / "obj_0.csv") == flag);
  CHECK(read_text(dir / "none" / "obj_0.csv") == read_text(dir / "zero" / "obj_0.csv"));
  CHECK(read_text(dir / "none" / "obj_0.csv") != flag);
  CHECK(nlohmann::json::parse(read_text(dir / "env" / "manifest.json"))["seed"] == 5);
  fs::remove_all(dir);
}

TEST_CASE("error exit codes")
{
  const fs::path dir = temp_dir("errors");
  CHECK(cli({"evaluate", "--grasps", "/nonexistent/g.jsonl", "--scene", "/nonexistent/scene.json", "--out",
             (dir / "r.json").string()})
            .code == 3);
  write_text(dir / "scene.json", "{ not json");
  CHECK(cli({"bake-sdf", "--scene", (dir / "scene.json").string(), "--out", (dir / "b").string()}).code == 3);
  CHECK(cli({"gen-scene", "--objects", "300", "--out", (dir / "dense").string()}).code == 4);
  fs::remove_all(dir);
}

TEST_CASE("gradcheck command")
{
  const Run ok = cli({"gradcheck", "--seed", "0", "--cases", "1"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("\"pass\": true") != std::string::npos);
  const Run bad = cli({"gradcheck", "--cases", "3", "--corrupt-gradient"});
  CHECK(bad.code == 4);
  CHECK(bad.err.find("offending case") != std::string::npos);
  CHECK(cli({"gradcheck", "--help"}).out.find("corrupt") == std::string::npos);
}
