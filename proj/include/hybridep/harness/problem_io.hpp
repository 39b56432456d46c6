#pragma once

// JSON problem files.
//
// {
//   "name": "...", "provenance": "...",
//   "dimension": d,
//   "set": {"type": "box", "lower": [...], "upper": [...]}
//        | {"type": "ball", "center": [...], "radius": r}
//        | {"type": "polyhedron", "normals": [[...], ...], "offsets": [...]}
//        | {"type": "whole_space"},
//   "bifunctions": [
//     {"type": "vi_affine", "M": [[...]], "q": [...], "L"?: v, "c1"?: v, "c2"?: v},
//     {"type": "affine_quadratic", "P": [[...]], "Q": [[...]], "q": [...], "c1"?, "c2"?},
//     {"type": "black_box", "name": "l1_regularized_vi" | "constant", "params": {...},
//      "c1": v, "c2": v}
//   ],
//   "x0": [...],
//   "known_solution"?: {"type": "singleton", "point": [...]}
//                    | {"type": "affine_segment_box", "lower": [...], "upper": [...]}
// }

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "hybridep/error.hpp"
#include "hybridep/geometry.hpp"
#include "hybridep/problems.hpp"

namespace hybridep::harness {

using Json = nlohmann::json;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::SchemaError, field + ": " + what);
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing");
  return *it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "must be finite");
  return v;
}

inline Point vector(const Json& j, const std::string& path, Index expected) {
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  if (static_cast<Index>(j.size()) != expected) {
    schema_error(path, "expected length " + std::to_string(expected) + ", got " +
                           std::to_string(j.size()));
  }
  Point v(expected);
  for (Index i = 0; i < expected; ++i)
    v[i] = number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix matrix(const Json& j, const std::string& path, Index d) {
  if (!j.is_array() || static_cast<Index>(j.size()) != d)
    schema_error(path, "expected " + std::to_string(d) + " rows");
  Matrix m(d, d);
  for (Index r = 0; r < d; ++r) {
    m.row(r) = vector(j[static_cast<std::size_t>(r)], path + "[" + std::to_string(r) + "]", d)
                   .transpose();
  }
  return m;
}

inline std::optional<LipschitzData> constants(const Json& j, const std::string& path) {
  const bool has1 = j.contains("c1");
  const bool has2 = j.contains("c2");
  if (has1 != has2) schema_error(path, "c1 and c2 must be given together");
  if (!has1) return std::nullopt;
  LipschitzData lip{number(j["c1"], path + ".c1"), number(j["c2"], path + ".c2")};
  if (lip.c1 < 0.0 || lip.c2 < 0.0) schema_error(path, "c1, c2 must be nonnegative");
  return lip;
}

inline FeasibleSet parse_set(const Json& j, Index d) {
  const std::string type = require(j, "type", "set").get<std::string>();
  if (type == "box") {
    const Point lo = vector(require(j, "lower", "set"), "set.lower", d);
    const Point hi = vector(require(j, "upper", "set"), "set.upper", d);
    if ((lo.array() > hi.array()).any()) schema_error("set", "box requires lower <= upper");
    return FeasibleSet::box(lo, hi);
  }
  if (type == "ball") {
    const Point c = vector(require(j, "center", "set"), "set.center", d);
    const double r = number(require(j, "radius", "set"), "set.radius");
    if (!(r > 0.0)) schema_error("set.radius", "must be positive");
    return FeasibleSet::ball(c, r);
  }
  if (type == "polyhedron") {
    const Json& normals = require(j, "normals", "set");
    const Json& offsets = require(j, "offsets", "set");
    if (!normals.is_array() || !offsets.is_array() || normals.size() != offsets.size())
      schema_error("set", "normals and offsets must be arrays of equal length");
    std::vector<HalfspaceCut> cuts;
    for (std::size_t i = 0; i < normals.size(); ++i) {
      const std::string p = "set.normals[" + std::to_string(i) + "]";
      HalfspaceCut c = HalfspaceCut::make(vector(normals[i], p, d),
                                          number(offsets[i], "set.offsets[" + std::to_string(i) + "]"));
      if (c.degenerate) schema_error(p, "zero normal");
      cuts.push_back(std::move(c));
    }
    return FeasibleSet::polyhedron(std::move(cuts), d);
  }
  if (type == "whole_space") return FeasibleSet::whole_space(d);
  schema_error("set.type", "unknown set type '" + type + "'");
}

inline Bifunction black_box_from_registry(const Json& j, const std::string& path, Index d,
                                          std::optional<LipschitzData> lip) {
  const std::string name = require(j, "name", path).get<std::string>();
  const Json params = j.contains("params") ? j["params"] : Json::object();
  if (!lip) {
    throw Error(ErrorCode::ConstantsMissing,
                path + ": black-box bifunction '" + name + "' requires c1 and c2");
  }
  BlackBoxBifunction bb;
  bb.dimension = d;
  if (name == "l1_regularized_vi") {
    // f(x,y) = <Mx + q, y - x> + mu (|y|_1 - |x|_1).
    const Matrix M = matrix(require(params, "M", path + ".params"), path + ".params.M", d);
    const Point q = vector(require(params, "q", path + ".params"), path + ".params.q", d);
    const double mu = number(require(params, "mu", path + ".params"), path + ".params.mu");
    bb.eval = [M, q, mu](const Point& x, const Point& y) {
      return (M * x + q).dot(y - x) + mu * (y.lpNorm<1>() - x.lpNorm<1>());
    };
    bb.subgrad2 = [M, q, mu](const Point& x, const Point& y) -> Point {
      Point s = y.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
      return M * x + q + mu * s;
    };
  } else if (name == "constant") {
    const double value = number(require(params, "value", path + ".params"), path + ".params.value");
    bb.eval = [value](const Point&, const Point&) { return value; };
    bb.subgrad2 = [d](const Point&, const Point&) -> Point { return Point::Zero(d); };
  } else {
    schema_error(path + ".name", "unknown black-box bifunction '" + name + "'");
  }
  return Bifunction::black_box(std::move(bb), lip, name);
}

inline Bifunction parse_bifunction(const Json& j, std::size_t index, Index d) {
  const std::string path = "bifunctions[" + std::to_string(index) + "]";
  const std::string type = require(j, "type", path).get<std::string>();
  auto lip = constants(j, path);
  const std::string label = j.contains("label") ? j["label"].get<std::string>() : path;
  Bifunction f;
  if (type == "vi_affine") {
    const Matrix M = matrix(require(j, "M", path), path + ".M", d);
    const Point q = vector(require(j, "q", path), path + ".q", d);
    std::optional<double> L;
    if (j.contains("L")) {
      L = number(j["L"], path + ".L");
      if (!(*L > 0.0)) schema_error(path + ".L", "must be positive");
    }
    f = Bifunction::vi(Operator::affine(M, q, L), label);
  } else if (type == "affine_quadratic") {
    f = Bifunction::affine_quadratic(matrix(require(j, "P", path), path + ".P", d),
                                     matrix(require(j, "Q", path), path + ".Q", d),
                                     vector(require(j, "q", path), path + ".q", d), label);
  } else if (type == "black_box") {
    return black_box_from_registry(j, path, d, lip);
  } else {
    schema_error(path + ".type", "unknown bifunction type '" + type + "'");
  }
  f.lipschitz = lip;
  return f;
}

inline KnownSolution parse_known(const Json& j, Index d) {
  const std::string type = require(j, "type", "known_solution").get<std::string>();
  if (type == "singleton")
    return SingletonSolution{vector(require(j, "point", "known_solution"), "known_solution.point", d)};
  if (type == "affine_segment_box") {
    AffineSegmentBox box{vector(require(j, "lower", "known_solution"), "known_solution.lower", d),
                         vector(require(j, "upper", "known_solution"), "known_solution.upper", d)};
    if ((box.lower.array() > box.upper.array()).any())
      schema_error("known_solution", "lower <= upper required");
    return box;
  }
  schema_error("known_solution.type", "unknown type '" + type + "'");
}

}  // namespace detail

/// Builds a validated instance from parsed JSON; Lipschitz constants are resolved eagerly.
inline CsepInstance parse_problem(const Json& doc) {
  using namespace detail;
  if (!doc.is_object()) schema_error("<root>", "expected an object");
  try {
    CsepInstance inst;
    inst.name = doc.contains("name") ? doc["name"].get<std::string>() : "unnamed";
    const Json& dim = require(doc, "dimension", "<root>");
    if (!dim.is_number_integer() || dim.get<long>() <= 0)
      schema_error("dimension", "expected a positive integer");
    inst.dimension = dim.get<Index>();
    inst.set = parse_set(require(doc, "set", "<root>"), inst.dimension);
    const Json& bifs = require(doc, "bifunctions", "<root>");
    if (!bifs.is_array() || bifs.empty()) schema_error("bifunctions", "expected a nonempty array");
    for (std::size_t i = 0; i < bifs.size(); ++i)
      inst.bifunctions.push_back(parse_bifunction(bifs[i], i, inst.dimension));
    inst.x0 = vector(require(doc, "x0", "<root>"), "x0", inst.dimension);
    if (doc.contains("known_solution"))
      inst.known_solution = parse_known(doc["known_solution"], inst.dimension);
    inst.check();
    for (std::size_t i = 0; i < inst.size(); ++i) {
      try {
        resolve_lipschitz(inst.bifunctions[i]);
      } catch (const Error& e) {
        throw Error(ErrorCode::ConstantsMissing,
                    "bifunctions[" + std::to_string(i) + "]: " + e.what());
      }
    }
    return inst;
  } catch (const Json::type_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("wrong value type: ") + e.what());
  }
}

inline CsepInstance parse_problem_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Byte offset to line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size() + 1) && i + 1 < e.byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "line " << line << ", column " << col << ": " << e.what();
    throw Error(ErrorCode::ParseError, msg.str());
  }
  return parse_problem(doc);
}

inline CsepInstance load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str());
}

}  // namespace hybridep::harness
