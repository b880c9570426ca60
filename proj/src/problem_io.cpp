#include "svi/problem_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "svi/parametric.hpp"

namespace svi {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ParseError("problem file: " + what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object()) fail(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + " must be a number");
  return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, key);
}

Vector vec(const json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  return v;
}

std::vector<double> reals(const json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

std::vector<Vector> vecs(const json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array of arrays");
  std::vector<Vector> out;
  for (const auto& e : j) out.push_back(vec(e, what));
  return out;
}

Matrix mat(const json& j, const char* what) {
  const auto rows = vecs(j, what);
  if (rows.empty()) fail(std::string(what) + " must have at least one row");
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) fail(std::string(what) + " has ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return m;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.begin(), v.end())); }

json to_json(const std::vector<Vector>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(to_json(v));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

std::string type_of(const json& j, const char* what) {
  const auto& t = field(j, "type");
  if (!t.is_string()) fail(std::string(what) + " type must be a string");
  return t.get<std::string>();
}

ParamMatrixFamily read_matrix(const json& j) {
  const auto type = type_of(j, "matrix");
  if (type == "rotation_scaled") {
    return RotationScaled{number(field(j, "lambda"), "lambda"),
                          j.value("clockwise", false)};
  }
  if (type == "constant") return ConstantMatrix{mat(field(j, "matrix"), "matrix")};
  if (type == "interpolated") {
    InterpolatedTable t;
    t.knots = reals(field(j, "knots"), "knots");
    for (const auto& m : field(j, "matrices")) t.matrices.push_back(mat(m, "matrices"));
    return t;
  }
  fail("unknown matrix type '" + type + "'");
}

json write_matrix(const ParamMatrixFamily& family) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, RotationScaled>) {
          return {{"type", "rotation_scaled"}, {"lambda", v.lambda}, {"clockwise", v.clockwise}};
        } else if constexpr (std::is_same_v<T, ConstantMatrix>) {
          return {{"type", "constant"}, {"matrix", to_json(v.matrix)}};
        } else {
          json ms = json::array();
          for (const auto& m : v.matrices) ms.push_back(to_json(m));
          return {{"type", "interpolated"}, {"knots", v.knots}, {"matrices", ms}};
        }
      },
      family.variant());
}

ConcaveTerm read_h(const json& j) {
  std::vector<ConcaveComponent> comps;
  for (const auto& c : field(j, "components")) {
    ConcaveComponent k;
    k.a = number_or(c, "a", 0.0);
    k.lin = vec(field(c, "lin"), "lin");
    k.c = number_or(c, "c", 0.0);
    const auto& jj = c.contains("j") ? c["j"] : json(0);
    if (!jj.is_number_unsigned()) fail("h component index 'j' must be a nonnegative integer");
    k.j = jj.get<std::size_t>();
    k.d = number_or(c, "d", 0.0);
    comps.push_back(std::move(k));
  }
  if (comps.empty()) fail("h needs at least one component");
  return ConcaveTerm(std::move(comps), number(field(j, "declared_lipschitz"), "declared_lipschitz"));
}

json write_h(const ConcaveTerm& h) {
  json comps = json::array();
  for (const auto& c : h.components()) {
    comps.push_back({{"a", c.a}, {"lin", to_json(c.lin)}, {"c", c.c}, {"j", c.j}, {"d", c.d}});
  }
  return {{"components", comps}, {"declared_lipschitz", h.declared_lipschitz()}};
}

Vector vec_or_zero(const json& j, const char* key, Eigen::Index n) {
  return j.contains(key) ? vec(j[key], key) : Vector::Zero(n);
}

ConstraintFamily read_constraint(const json& j) {
  const auto type = type_of(j, "constraint");
  if (type == "all") return AllSpace{};
  if (type == "box") {
    Box b;
    b.lower = vec(field(j, "lower"), "lower");
    b.upper = vec(field(j, "upper"), "upper");
    b.lower_slope = vec_or_zero(j, "lower_slope", b.lower.size());
    b.upper_slope = vec_or_zero(j, "upper_slope", b.upper.size());
    return b;
  }
  if (type == "ball") {
    Ball b;
    b.center = vec(field(j, "center"), "center");
    b.center_slope = vec_or_zero(j, "center_slope", b.center.size());
    b.radius = number(field(j, "radius"), "radius");
    b.radius_slope = number_or(j, "radius_slope", 0.0);
    return b;
  }
  if (type == "polytope") return PolytopeConstraint{VPolytope(vecs(field(j, "vertices"), "vertices"))};
  fail("unknown constraint type '" + type + "'");
}

json write_constraint(const ConstraintFamily& family) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AllSpace>) {
          return {{"type", "all"}};
        } else if constexpr (std::is_same_v<T, Box>) {
          return {{"type", "box"},
                  {"lower", to_json(v.lower)},
                  {"upper", to_json(v.upper)},
                  {"lower_slope", to_json(v.lower_slope)},
                  {"upper_slope", to_json(v.upper_slope)}};
        } else if constexpr (std::is_same_v<T, Ball>) {
          return {{"type", "ball"},
                  {"center", to_json(v.center)},
                  {"center_slope", to_json(v.center_slope)},
                  {"radius", v.radius},
                  {"radius_slope", v.radius_slope}};
        } else {
          return {{"type", "polytope"}, {"vertices", to_json(v.polytope.vertices())}};
        }
      },
      family.variant());
}

std::optional<double> optional_number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return number(*it, key);
}

SviProblem read_svi(const json& j) {
  std::optional<ConcaveTerm> h;
  if (j.contains("h") && !j["h"].is_null()) h = read_h(j["h"]);
  std::optional<FanSpec> fan;
  if (j.contains("fan") && !j["fan"].is_null()) {
    std::vector<Matrix> ms;
    for (const auto& m : j["fan"]) ms.push_back(mat(m, "fan"));
    fan = FanSpec(std::move(ms));
  }
  SviProblem prob{read_matrix(field(j, "matrix")),
                  std::move(h),
                  std::move(fan),
                  PolyCone(vecs(field(j, "cone"), "cone")),
                  j.contains("constraint") ? read_constraint(j["constraint"]) : ConstraintFamily{},
                  optional_number(j, "declared_alpha")};
  prob.validate();
  return prob;
}

json write_svi(const SviProblem& p) {
  json out = {{"kind", "svi"},
              {"matrix", write_matrix(p.matrix)},
              {"cone", to_json(p.cone.generators())},
              {"constraint", write_constraint(p.constraint)}};
  out["h"] = p.h ? write_h(*p.h) : json(nullptr);
  if (p.fan) {
    json ms = json::array();
    for (const auto& m : p.fan->matrices()) ms.push_back(to_json(m));
    out["fan"] = ms;
  } else {
    out["fan"] = nullptr;
  }
  out["declared_alpha"] = p.declared_alpha ? json(*p.declared_alpha) : json(nullptr);
  return out;
}

VopSpec read_vop(const json& j) {
  const auto& obj = field(j, "objective");
  const auto type = type_of(obj, "objective");
  VopSpec spec{LinearRotation{}, ConstraintFamily{}, PolyCone(vecs(field(j, "cone"), "cone")),
               1.0, std::nullopt, 257, std::nullopt};
  if (type == "linear_rotation") {
    spec.objective = LinearRotation{number(field(obj, "lambda"), "lambda"), obj.value("clockwise", true)};
  } else if (type == "abs_deviation") {
    AbsDeviation d;
    d.knots = reals(field(obj, "knots"), "knots");
    d.values = reals(field(obj, "values"), "values");
    const auto& m = obj.contains("m") ? obj["m"] : json(2);
    if (!m.is_number_unsigned()) fail("abs_deviation 'm' must be a positive integer");
    d.m = m.get<std::size_t>();
    spec.objective = std::move(d);
  } else if (type == "affine") {
    std::vector<Vector> bv;
    if (obj.contains("b_values")) bv = vecs(obj["b_values"], "b_values");
    spec.objective = AffineFamily{read_matrix(field(obj, "matrix")),
                                  obj.contains("b_knots") ? reals(obj["b_knots"], "b_knots")
                                                          : std::vector<double>{},
                                  std::move(bv)};
  } else {
    fail("unknown objective type '" + type + "'");
  }
  if (j.contains("constraint")) spec.constraint = read_constraint(j["constraint"]);
  spec.objective_lipschitz = number(field(j, "objective_lipschitz"), "objective_lipschitz");
  if (j.contains("sampling_window") && !j["sampling_window"].is_null()) {
    const auto& w = j["sampling_window"];
    spec.sampling_window = std::pair{vec(field(w, "lower"), "lower"), vec(field(w, "upper"), "upper")};
  }
  if (j.contains("image_sampling")) {
    if (!j["image_sampling"].is_number_unsigned()) fail("image_sampling must be a positive integer");
    spec.image_sampling = j["image_sampling"].get<std::size_t>();
  }
  spec.declared_alpha = optional_number(j, "declared_alpha");
  spec.validate();
  return spec;
}

json write_vop(const VopSpec& s) {
  json obj = std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LinearRotation>) {
          return {{"type", "linear_rotation"}, {"lambda", v.lambda}, {"clockwise", v.clockwise}};
        } else if constexpr (std::is_same_v<T, AbsDeviation>) {
          return {{"type", "abs_deviation"}, {"knots", v.knots}, {"values", v.values}, {"m", v.m}};
        } else {
          return {{"type", "affine"},
                  {"matrix", write_matrix(v.matrix)},
                  {"b_knots", v.b_knots},
                  {"b_values", to_json(v.b_values)}};
        }
      },
      s.objective);
  json out = {{"kind", "vop"},
              {"objective", obj},
              {"objective_lipschitz", s.objective_lipschitz},
              {"constraint", write_constraint(s.constraint)},
              {"cone", to_json(s.cone.generators())},
              {"image_sampling", s.image_sampling}};
  out["sampling_window"] = s.sampling_window ? json{{"lower", to_json(s.sampling_window->first)},
                                                    {"upper", to_json(s.sampling_window->second)}}
                                             : json(nullptr);
  out["declared_alpha"] = s.declared_alpha ? json(*s.declared_alpha) : json(nullptr);
  return out;
}

Vector v2(double a, double b) { return Vector{{a, b}}; }

}  // namespace

const SviProblem& ProblemFile::svi() const {
  if (const auto* p = std::get_if<SviProblem>(&data)) return *p;
  throw ConfigError("problem '" + name + "' is a vector optimization problem, not an inclusion");
}

const VopSpec& ProblemFile::vop() const {
  if (const auto* p = std::get_if<VopSpec>(&data)) return *p;
  throw ConfigError("problem '" + name + "' is an inclusion problem, not a vector optimization");
}

ProblemFile parse_problem(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  try {
    const auto& kind = field(j, "kind");
    if (!kind.is_string()) fail("'kind' must be a string");
    auto name = j.value("name", std::string{});
    if (kind == "svi") return ProblemFile(std::move(name), read_svi(j));
    if (kind == "vop") return ProblemFile(std::move(name), read_vop(j));
    fail("unknown kind '" + kind.get<std::string>() + "'");
  } catch (const json::exception& e) {
    fail(e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    fail(std::string("invalid data: ") + e.what());
  }
}

std::string dump_problem(const ProblemFile& file) {
  json j = std::visit(
      [](const auto& d) {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, SviProblem>) {
          return write_svi(d);
        } else {
          return write_vop(d);
        }
      },
      file.data);
  j["name"] = file.name;
  return j.dump(2) + "\n";
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_problem(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_problem(const std::filesystem::path& path, const ProblemFile& file) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << dump_problem(file);
}

std::string problem_hash(const ProblemFile& file) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : dump_problem(file)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ProblemFile> builtin_problems() {
  using std::numbers::sqrt2;
  const auto orthant = PolyCone::nonnegative_orthant(2);

  // 3·O_p x + h(x) + [−1/4, 1/4]x with h_i(x) = −1 − |x_i|/4.
  std::vector<ConcaveComponent> comps{{-1.0, Vector::Zero(2), -0.25, 0, 0.0},
                                      {-1.0, Vector::Zero(2), -0.25, 1, 0.0}};
  const ConcaveTerm h(comps, 0.25);
  const FanSpec fan({Matrix::Identity(2, 2) * 0.25, Matrix::Identity(2, 2) * -0.25});
  const double alpha38 = (1.0 - 0.5) * (3.0 / sqrt2 + 1.0);
  SviProblem ex38{RotationScaled{3.0, false}, h, fan, orthant, AllSpace{}, alpha38};

  SviProblem ex38_box = ex38;
  ex38_box.constraint = Box{v2(-2, -2), v2(2, 2), Vector::Zero(2), Vector::Zero(2)};

  const PolytopeConstraint triangle{VPolytope({v2(0, 0), v2(1, 0), v2(0, 1)})};
  VopSpec tri{LinearRotation{1.0, true}, triangle, orthant, 1.0, std::nullopt, 257,
              1.0 / sqrt2 + 1.0};
  VopSpec tri_ccw = tri;
  tri_ccw.objective = LinearRotation{1.0, false};

  AbsDeviation dev;
  dev.knots = linspace(0.0, 2.0 * std::numbers::pi, 257);
  for (double p : dev.knots) dev.values.push_back(std::sin(p));
  VopSpec absdev{dev, AllSpace{}, orthant, sqrt2,
                 std::pair{Vector::Constant(1, -2.0), Vector::Constant(1, 2.0)}, 257, 2.0};

  SviProblem rot5{RotationScaled{5.0, false}, std::nullopt, std::nullopt, orthant, AllSpace{},
                  5.0 / sqrt2 + 1.0};

  return {{"ex38", ex38},          {"ex38_box", ex38_box}, {"triangle_vop", tri},
          {"triangle_vop_ccw", tri_ccw}, {"absdev_sin", absdev}, {"rotation5", rot5}};
}

ProblemFile builtin_problem(std::string_view name) {
  for (auto& f : builtin_problems()) {
    if (f.name == name) return f;
  }
  throw ConfigError("no builtin problem named '" + std::string(name) + "'");
}

}  // namespace svi
