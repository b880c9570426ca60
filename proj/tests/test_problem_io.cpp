#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "svi/errors.hpp"
#include "svi/problem_io.hpp"

using namespace svi;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ProblemIo, EveryBuiltinRoundTrips) {
  for (const auto& file : builtin_problems()) {
    const auto back = parse_problem(dump_problem(file));
    EXPECT_EQ(back, file) << file.name;
    EXPECT_EQ(problem_hash(back), problem_hash(file)) << file.name;
  }
}

TEST(ProblemIo, BundledFilesMatchGenerator) {
  for (const auto& file : builtin_problems()) {
    const auto path = std::filesystem::path(SVI_SOURCE_DIR) / "problems" / (file.name + ".json");
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(load_problem(path), file) << file.name;
  }
}

TEST(ProblemIo, SaveThenLoad) {
  const auto dir = std::filesystem::temp_directory_path() / "svi_problem_io_test";
  std::filesystem::create_directories(dir);
  const auto file = builtin_problem("ex38_box");
  save_problem(dir / "box.json", file);
  EXPECT_EQ(load_problem(dir / "box.json"), file);
  EXPECT_EQ(read_file(dir / "box.json"), dump_problem(file));
  std::filesystem::remove_all(dir);
}

TEST(ProblemIo, KindAccessors) {
  const auto svi_file = builtin_problem("ex38");
  EXPECT_TRUE(svi_file.is_svi());
  EXPECT_THROW(svi_file.vop(), ConfigError);
  const auto vop_file = builtin_problem("triangle_vop");
  EXPECT_FALSE(vop_file.is_svi());
  EXPECT_THROW(vop_file.svi(), ConfigError);
  EXPECT_THROW(builtin_problem("no_such_problem"), ConfigError);
}

TEST(ProblemIo, HashDistinguishesProblems) {
  EXPECT_NE(problem_hash(builtin_problem("ex38")), problem_hash(builtin_problem("ex38_box")));
  EXPECT_EQ(problem_hash(builtin_problem("ex38")).size(), 16u);
}

TEST(ProblemIo, MissingFileNamesPath) {
  try {
    load_problem("/nonexistent/dir/missing.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/missing.json"), std::string::npos);
  }
}

TEST(ProblemIo, MalformedDocumentsAreRejected) {
  EXPECT_THROW(parse_problem("{not json"), ParseError);
  EXPECT_THROW(parse_problem(R"({"kind": "svi", "name": "x"})"), ParseError);
  EXPECT_THROW(parse_problem(R"({"kind": "other", "name": "x"})"), ParseError);
  // Dimension errors inside otherwise well-formed files surface as parse failures.
  const std::string bad_cone = R"({"kind": "svi", "name": "x",
    "matrix": {"type": "constant", "matrix": [[1, 0], [0, 1]]},
    "h": null, "fan": null, "cone": [[1, 0, 0]],
    "constraint": {"type": "all"}, "declared_alpha": null})";
  EXPECT_THROW(parse_problem(bad_cone), ParseError);
}

TEST(ProblemIo, MinimalHandWrittenFile) {
  const std::string text = R"({"kind": "svi", "name": "identity",
    "matrix": {"type": "constant", "matrix": [[1, 0], [0, 1]]},
    "h": null, "fan": null, "cone": [[1, 0], [0, 1]],
    "constraint": {"type": "box", "lower": [0, 0], "upper": [1, 1]},
    "declared_alpha": 2})";
  const auto file = parse_problem(text);
  ASSERT_TRUE(file.is_svi());
  EXPECT_EQ(file.name, "identity");
  EXPECT_EQ(file.svi().m(), 2u);
  EXPECT_EQ(file.svi().declared_alpha, 2.0);
  EXPECT_FALSE(file.svi().constraint.is_all_space());
}
