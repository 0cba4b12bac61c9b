#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nisio/commands.hpp"
#include "nisio/config.hpp"

using namespace nisio;
using json = nlohmann::json;

namespace {

const char* kMinimal = R"(# cosine potential, one control
problem.topology = torus
problem.n = 32
problem.sigma = "1"
problem.drift = "0"
problem.cost = "cos(2*pi*x1) + 1"
)";

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nisio_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_text(const std::string& command, const std::string& text, RunFlags flags = {}) {
  std::ostringstream out, err;
  int code = 0;
  try {
    code = run(command, parse_config(text), flags, out, err);
  } catch (const std::exception& e) {
    ADD_FAILURE() << "config did not load: " << e.what();
    return {-1, "", ""};
  }
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Config, Minimal) {
  const Config c = parse_config(kMinimal);
  ASSERT_TRUE(c.problem.has_value());
  EXPECT_EQ(c.problem->n, 32);
  EXPECT_EQ(c.problem->topology, Topology::Torus);
  EXPECT_EQ(c.problem->controls.size(), 1u);
  EXPECT_EQ(c.spec().grid.node_count(), 32u);
  EXPECT_TRUE(c.wants("json"));
}

TEST(Config, SmallGridRejected) {
  try {
    parse_config("problem.n = 4\nproblem.sigma = \"1\"\nproblem.drift = \"0\"\nproblem.cost = \"1\"\n");
    FAIL() << "expected ValidationError";
  } catch (const ParseError&) {
    FAIL() << "wrong error kind";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("n >= 8"), std::string::npos) << e.what();
  }
}

TEST(Config, MalformedExpressionNamesKey) {
  try {
    parse_config("problem.sigma = \"1\"\nproblem.drift = \"0\"\nproblem.cost = \"1+*\"\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("problem.cost"), std::string::npos) << e.what();
  }
}

TEST(Config, LineErrors) {
  EXPECT_THROW(parse_config("problem.n = 8\nnonsense\n"), ParseError);
  EXPECT_THROW(parse_config("problem.colour = 3\n"), ParseError);
  EXPECT_THROW(parse_config("widgets.n = 3\n"), ParseError);
  EXPECT_THROW(parse_config("problem.n = 16\nproblem.n = 32\n"), ParseError);
  try {
    parse_config("\n\nsolver.tol = abc\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Config, Lists) {
  EXPECT_EQ(split_list("a; b ;c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_list("").empty());
  const auto rows = parse_rows("1,0; 0,1");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], (std::vector<double>{0.0, 1.0}));
  const Config c = parse_config(
      "problem.d = 2\nproblem.n = 8\nproblem.controls = \"1,0; 0,1\"\n"
      "problem.sigma = \"1; 0; 0; 1\"\nproblem.drift = \"v1; v2\"\nproblem.cost = \"1\"\n");
  EXPECT_EQ(c.problem->controls.size(), 2u);
  EXPECT_EQ(c.problem->sigma.size(), 4u);
}

TEST(Cli, SolveConstantCost) {
  const auto dir = scratch("solve");
  const std::string text =
      "problem.n = 16\nproblem.sigma = \"1\"\nproblem.drift = \"0\"\nproblem.cost = \"1\"\n"
      "output.directory = " + dir.string() + "\n";
  const Outcome o = run_text("solve", text);
  ASSERT_EQ(o.code, 0) << o.err;
  const json r = json::parse(o.out);
  EXPECT_NEAR(r["rho"].get<double>(), 1.0, 1e-10);
  EXPECT_TRUE(std::filesystem::exists(dir / "phi.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
}

TEST(Cli, BoundsOnes) {
  RunFlags f;
  f.f = "ones";
  f.out = scratch("bounds").string();
  const Outcome o = run_text("bounds", kMinimal, f);
  ASSERT_EQ(o.code, 0) << o.err;
  const json r = json::parse(o.out);
  EXPECT_NEAR(r["lower"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(r["upper"].get<double>(), 2.0, 1e-12);
  EXPECT_TRUE(r["contains_rho"].get<bool>());
}

TEST(Cli, SimulateReproducible) {
  const std::string text = std::string(kMinimal) + "mc.T = 1\nmc.N = 200\nmc.seed = 9\n";
  RunFlags f;
  f.out = scratch("sim").string();
  const Outcome a = run_text("simulate", text, f);
  const Outcome b = run_text("simulate", text, f);
  ASSERT_EQ(a.code, 0) << a.err;
  const json ja = json::parse(a.out), jb = json::parse(b.out);
  for (const char* k : {"value", "stderr", "n_effective", "N", "T", "dt"}) {
    EXPECT_EQ(ja[k].dump(), jb[k].dump()) << k;
  }
  f.seed = 10;
  const json jc = json::parse(run_text("simulate", text, f).out);
  EXPECT_NE(ja["value"], jc["value"]);
}

TEST(Cli, ExitCodes) {
  const Outcome bad = run_text("teleport", kMinimal);
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(json::parse(bad.err)["exit_code"], 1);

  RunFlags small;
  small.n = 4;
  const Outcome n4 = run_text("solve", kMinimal, small);
  EXPECT_EQ(n4.code, 1);
  EXPECT_EQ(json::parse(n4.err)["error"], "ValidationError");

  RunFlags out;
  out.out = scratch("noconv").string();
  const Outcome nc = run_text("solve", std::string(kMinimal) + "solver.max_iters = 3\n", out);
  EXPECT_EQ(nc.code, 2);
  const json e = json::parse(nc.err);
  EXPECT_EQ(e["error"], "NoConvergence");
  EXPECT_EQ(e["exit_code"], 2);

  std::ostringstream o2, e2;
  EXPECT_EQ(run_file("solve", "/nonexistent/nisio.cfg", {}, o2, e2), 1);
  const std::string path = (std::filesystem::temp_directory_path() / "nisio_test_bad.cfg").string();
  {
    std::ofstream f(path);
    f << "problem.sigma = \"1\"\nproblem.drift = \"0\"\nproblem.cost = \"1+*\"\n";
  }
  std::ostringstream o3, e3;
  EXPECT_EQ(run_file("solve", path, {}, o3, e3), 1);
  const json pe = json::parse(e3.str());
  EXPECT_EQ(pe["error"], "ParseError");
  EXPECT_EQ(pe["line"], 3);
}

TEST(Cli, MatrixCommand) {
  const std::string text = "matrix.rows = \"0,1; 2,0\"\nmatrix.shift = 1\noutput.directory = " +
                           scratch("matrix").string() + "\n";
  const Outcome o = run_text("matrix-cw", text);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NEAR(json::parse(o.out)["lambda"].get<double>(), std::sqrt(2.0), 1e-9);
}
