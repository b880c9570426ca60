#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "svi/cli.hpp"
#include "svi/errors.hpp"
#include "svi/parametric.hpp"

using namespace svi;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "svi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string problem_path(const std::string& name) {
  return std::string(SVI_SOURCE_DIR) + "/problems/" + name + ".json";
}

std::map<std::string, std::string> report(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto colon = line.find(": ");
    if (colon != std::string::npos) kv[line.substr(0, colon)] = line.substr(colon + 2);
  }
  return kv;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the installed binary in a child process; stdout and stderr are captured through files.
Run run_binary(const std::string& args) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto out = dir / "svi_cli_test.out";
  const auto err = dir / "svi_cli_test.err";
  const std::string cmd = std::string(SVI_BINARY) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}

}  // namespace

TEST(CliSolve, WorkedExampleReport) {
  const auto r = run({"solve", "--problem", problem_path("ex38"), "--p", "1.0", "--x0", "0,0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto kv = report(r.out);
  EXPECT_LE(std::stod(kv.at("merit_final")), 1e-8);
  EXPECT_EQ(kv.at("bound_holds"), "true");
  EXPECT_EQ(kv.at("status"), "converged");
}

TEST(CliSweep, SixtyFiveSolvedRows) {
  const auto out = std::filesystem::temp_directory_path() / "svi_cli_sweep.csv";
  const auto r = run({"sweep", "--problem", problem_path("ex38"), "--grid", "0:6.2832:65", "--out",
                      out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(slurp(out));
  std::filesystem::remove(out);
  ASSERT_EQ(rows.size(), 66u);
  EXPECT_EQ(rows.front(), "p,x_1,x_2,merit,bound_rhs,bound_holds,solved");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].substr(rows[i].rfind(',') + 1), "true") << rows[i];
  }
}

TEST(CliSweep, SameSeedSameBytes) {
  const std::vector<std::string> args{"sweep", "--problem", "builtin:ex38_box", "--grid", "0:3:9", "--seed", "7"};
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, kExitOk);
  EXPECT_EQ(a.out, b.out);
}

TEST(CliErrors, MissingProblemFile) {
  const auto r = run({"solve", "--problem", "missing.json", "--p", "0"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("missing.json"), std::string::npos);
}

TEST(CliErrors, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"solve"}).code, kExitUsage);
  EXPECT_EQ(run({"sweep", "--problem", "builtin:ex38", "--grid", "0:1"}).code, kExitUsage);
  EXPECT_EQ(run({"solve", "--problem", "builtin:ex38", "--p", "0", "--x0", "1,2,3"}).code, kExitUsage);
  EXPECT_EQ(run({"solve", "--problem", "builtin:ex38", "--p", "0", "--alpha", "0.5"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(CliEstimate, RotationBracket) {
  const auto r = run({"estimate-inc", "--problem", "builtin:rotation5", "--p", "0", "--x", "0,0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto kv = report(r.out);
  EXPECT_LE(std::stod(kv.at("alpha_lo")), 4.5355339);
  EXPECT_GE(std::stod(kv.at("alpha_hi")), 4.5355339);
}

TEST(CliVopt, TriangleWithOracle) {
  const auto r = run({"vopt", "--problem", "builtin:triangle_vop", "--grid", "0:3.14159:5", "--oracle",
                      "--oracle-density", "33", "--x0", "0.3333,0.3333"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows.front(), "p,x_1,x_2,merit,bound_rhs,bound_holds,solved,val_1,val_2,oracle_status");
  EXPECT_NE(rows[1].find("ideal"), std::string::npos);
  EXPECT_NE(rows[5].find("empty"), std::string::npos);
}

TEST(CliVerify, BuiltinsPassTheirProperties) {
  for (const char* name : {"builtin:ex38", "builtin:ex38_box", "builtin:absdev_sin"}) {
    const auto r = run({"verify-props", "--problem", name, "--grid", "0:6:4", "--trials", "10"});
    EXPECT_EQ(r.code, kExitOk) << name << "\n" << r.out << r.err;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
  }
}

TEST(CliHelpers, ParseVector) {
  const Vector v = parse_vector("1.5,-2,3e-1");
  ASSERT_EQ(v.size(), 3);
  EXPECT_EQ(v(0), 1.5);
  EXPECT_EQ(v(1), -2.0);
  EXPECT_EQ(v(2), 0.3);
  EXPECT_THROW(parse_vector("1,,2"), ConfigError);
  EXPECT_THROW(parse_vector("a"), ConfigError);
}

TEST(CliBinary, EndToEndExitCodes) {
  const auto ok = run_binary("solve --problem " + problem_path("ex38") + " --p 1.0 --x0 0,0");
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(report(ok.out).at("bound_holds"), "true");
  const auto missing = run_binary("solve --problem missing.json --p 1.0");
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("missing.json"), std::string::npos);
}
