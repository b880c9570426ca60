#pragma once

// JSON problem files: an SVI datum ("kind": "svi") or a vector optimization datum ("kind": "vop").

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "svi/setmaps.hpp"
#include "svi/vopt.hpp"

namespace svi {

struct ProblemFile {
  std::string name;
  std::variant<SviProblem, VopSpec> data;

  ProblemFile(std::string n, std::variant<SviProblem, VopSpec> d)
      : name(std::move(n)), data(std::move(d)) {}

  bool is_svi() const { return std::holds_alternative<SviProblem>(data); }
  const SviProblem& svi() const;
  const VopSpec& vop() const;

  friend bool operator==(const ProblemFile&, const ProblemFile&) = default;
};

/// Throws ParseError on malformed JSON or missing fields; the datum is validated.
ProblemFile parse_problem(std::string_view text);
std::string dump_problem(const ProblemFile& file);

/// Throws ParseError naming the path when the file cannot be read.
ProblemFile load_problem(const std::filesystem::path& path);
void save_problem(const std::filesystem::path& path, const ProblemFile& file);

/// Stable FNV-1a hash of the serialized problem, as 16 hex digits.
std::string problem_hash(const ProblemFile& file);

/// Bundled instances: ex38, ex38_box, triangle_vop, triangle_vop_ccw, absdev_sin, rotation5.
std::vector<ProblemFile> builtin_problems();
ProblemFile builtin_problem(std::string_view name);

}  // namespace svi
