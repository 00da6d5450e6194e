#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "waterx/waterx.hpp"

namespace {

using namespace waterx;

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + WATERX_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  testutil::TempDir dir{"cli"};
  std::string f(const std::string& name) const { return "\"" + dir.file(name) + "\""; }
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("threshold --bogus"), 2);
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("threshold"), 2);
  EXPECT_EQ(cli("sample --input x.grid --output s.csv"), 2);  // seed is mandatory
  EXPECT_EQ(cli("threshold --input x.grid --method median"), 3);  // reading fails first
}

TEST_F(Cli, DataAndNumericErrors) {
  EXPECT_EQ(cli("threshold --input " + f("missing.grid")), 3);
  {
    std::ofstream(dir.file("bad.grid")) << "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nnodata_value -9999\n1 x\n";
  }
  EXPECT_EQ(cli("threshold --input " + f("bad.grid")), 3);
  write_grid(Raster{testutil::header(3, 3), std::vector<float>(9, -11.0f)}, dir.file("flat.grid"));
  EXPECT_EQ(cli("threshold --input " + f("flat.grid")), 4);
  EXPECT_EQ(cli("threshold --input " + f("flat.grid") + " --method median"), 2);
}

TEST_F(Cli, PipelineConfigErrors) {
  { std::ofstream(dir.file("noinput.json")) << R"({"output_dir": "x"})"; }
  EXPECT_EQ(cli("pipeline --config " + f("noinput.json")), 2);
  { std::ofstream(dir.file("broken.json")) << "{"; }
  EXPECT_EQ(cli("pipeline --config " + f("broken.json")), 2);
  { std::ofstream(dir.file("unknown.json")) << R"({"input": "a", "output_dir": "b", "colour": 1})"; }
  EXPECT_EQ(cli("pipeline --config " + f("unknown.json")), 2);
}

TEST_F(Cli, StageChainMatchesPipeline) {
  ASSERT_EQ(cli("synth scene --ncols 160 --nrows 120 --geometry 'blobs:40,40,25;110,70,35' --seed 17 --output " + f("scene")), 0);
  ASSERT_TRUE(std::filesystem::exists(dir.file("scene.grid")));
  ASSERT_TRUE(std::filesystem::exists(dir.file("scene.truth.grid")));

  ASSERT_EQ(cli("threshold --input " + f("scene.grid") + " --report " + f("t.json") + " --curve " + f("curve.csv")), 0);
  const auto t = nlohmann::json::parse(slurp(dir.file("t.json")));
  EXPECT_EQ(t["method"], "otsu");
  EXPECT_EQ(slurp(dir.file("curve.csv")).rfind("threshold,v_between\n", 0), 0u);

  ASSERT_EQ(cli("classify --input " + f("scene.grid") + " --output " + f("c.grid")), 0);
  ASSERT_EQ(cli("postprocess --input " + f("c.grid") + " --output " + f("p.grid") + " --boundary-clean"), 0);
  ASSERT_EQ(cli("area --input " + f("p.grid") + " --report " + f("area.json")), 0);

  { std::ofstream(dir.file("cfg.json")) << R"({"boundary_clean": true, "majority": 5})"; }
  ASSERT_EQ(cli("pipeline --config " + f("cfg.json") + " --input " + f("scene.grid") + " --output " + f("run") +
                " --majority 3"),
            0);
  EXPECT_EQ(slurp(dir.file("p.grid")), slurp(dir.file("run/final.grid")));
  EXPECT_EQ(slurp(dir.file("c.grid")), slurp(dir.file("run/classified.grid")));
  const auto rep = nlohmann::json::parse(slurp(dir.file("run/report.json")));
  EXPECT_EQ(rep["config"]["majority"], 3);
  EXPECT_EQ(rep["threshold"]["threshold"], t["threshold"]);
  EXPECT_EQ(rep["area"], nlohmann::json::parse(slurp(dir.file("area.json"))));

  // A fixed threshold taken from the threshold report gives the same map.
  std::ostringstream thr;
  thr << text::shortest(t["threshold"].get<double>());
  ASSERT_EQ(cli("classify --input " + f("scene.grid") + " --threshold " + thr.str() + " --output " + f("c2.grid")), 0);
  EXPECT_EQ(slurp(dir.file("c.grid")), slurp(dir.file("c2.grid")));
}

TEST_F(Cli, SampleAndAssess) {
  ASSERT_EQ(cli("synth scene --ncols 80 --nrows 60 --geometry half-plane:1,0,30 --seed 2 --output " + f("s")), 0);
  ASSERT_EQ(cli("classify --input " + f("s.grid") + " --output " + f("c.grid")), 0);
  const ClassMap domain = ClassMap::filled(read_class_map(dir.file("c.grid")).header, cls::water);
  write_grid(domain, dir.file("domain.grid"));
  ASSERT_EQ(cli("sample --input " + f("domain.grid") + " --n 304 --seed 5 --truth " + f("s.truth.grid") + " --output " +
                f("sites.csv")),
            0);
  ASSERT_EQ(read_sites_csv(dir.file("sites.csv")).size(), 304u);
  ASSERT_EQ(cli("assess --input " + f("c.grid") + " --sites " + f("sites.csv") + " --output " + f("assessed.csv") +
                " --report " + f("a.json")),
            0);
  const auto a = nlohmann::json::parse(slurp(dir.file("a.json")));
  EXPECT_EQ(a["confusion"]["n"], 304);
  EXPECT_GT(a["confusion"]["accuracy"].get<double>(), 0.9);
  EXPECT_EQ(cli("sample --input " + f("domain.grid") + " --n 5000 --seed 5 --output " + f("x.csv")), 3);
}

TEST_F(Cli, SynthHistogram) {
  ASSERT_EQ(cli("synth hist --samples 1000 --seed 4 --output " + f("h.csv")), 0);
  const std::string body = slurp(dir.file("h.csv"));
  EXPECT_EQ(body.rfind("bin_value,count,density\n", 0), 0u);
  ASSERT_EQ(cli("synth hist --samples 1000 --seed 4 --output " + f("h2.csv")), 0);
  EXPECT_EQ(body, slurp(dir.file("h2.csv")));
  EXPECT_EQ(cli("synth hist --samples 10 --seed 4 --mixture 1,1,0,1,1 --output " + f("h3.csv")), 2);
  EXPECT_EQ(cli("synth scene --geometry disc:10,10,50 --seed 1 --output " + f("oob")), 2);
}

}  // namespace
