#include "slowfast/config.hpp"

#include <fstream>
#include <sstream>

#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

std::map<std::string, double> read_constants(const Json& j) {
  std::map<std::string, double> c;
  if (j.contains("constants"))
    for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it) c[it.key()] = it.value().get<double>();
  return c;
}

double number(const Json& j, const std::map<std::string, double>& constants) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return Expression::parse(j.get<std::string>(), constants)(Vec3::Zero());
  throw Error(ErrorKind::Config, "expected a number, got " + j.dump());
}

}  // namespace

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Config, "expected a 3-vector, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json to_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

SmoothField field_from_json(const Json& j, const std::map<std::string, double>& constants) {
  if (j.is_string()) return SmoothField::from_expression(Expression::parse(j.get<std::string>(), constants));
  if (j.is_number()) return SmoothField::constant(j.get<double>());
  const std::string type = j.value("type", "");
  if (type == "expression")
    return SmoothField::from_expression(Expression::parse(j.at("expr").get<std::string>(), constants),
                                        j.value("step", kFiniteDifferenceStep));
  if (type == "polynomial") {
    std::vector<SmoothField::Monomial> terms;
    for (const auto& t : j.at("terms")) {
      if (!t.is_array() || t.size() != 4) throw Error(ErrorKind::Config, "polynomial term must be [c, e1, e2, e3]");
      terms.push_back({number(t[0], constants), {t[1].get<int>(), t[2].get<int>(), t[3].get<int>()}});
    }
    return SmoothField::polynomial(std::move(terms));
  }
  if (type == "constant") return SmoothField::constant(number(j.at("value"), constants));
  if (type == "sphere") {
    const double r = j.value("scale", 0.5);
    return SmoothField::polynomial({{r, {2, 0, 0}}, {r, {0, 2, 0}}, {r, {0, 0, 2}}});
  }
  if (type == "torus") return SmoothField::torus_radial(j.value("R", 1.0));
  if (type == "azimuth") return SmoothField::azimuth(j.value("reference", 0.0));
  if (type == "poloidal") return SmoothField::poloidal(j.value("R", 1.0), j.value("reference", 0.0));
  if (type == "gaussian_bumps") {
    std::vector<SmoothField::Bump> bumps;
    for (const auto& b : j.at("bumps"))
      bumps.push_back({number(b.at("amplitude"), constants), vec3_from_json(b.at("center")),
                       number(b.at("width"), constants)});
    return SmoothField::gaussian_bumps(std::move(bumps));
  }
  if (type == "sum") {
    std::vector<std::pair<double, SmoothField>> terms;
    for (const auto& t : j.at("terms"))
      terms.emplace_back(t.contains("coef") ? number(t["coef"], constants) : 1.0,
                         field_from_json(t.at("field"), constants));
    return SmoothField::linear_combination(std::move(terms));
  }
  throw Error(ErrorKind::Config, "unknown field type '" + type + "'");
}

VectorField vector_field_from_json(const Json& j, const SmoothField& G,
                                   const std::map<std::string, double>& constants) {
  const std::string type = j.value("type", "gradient");
  const double scale = j.contains("scale") ? number(j["scale"], constants) : 1.0;
  if (type == "gradient") {
    SmoothField f = j.contains("field") ? field_from_json(j["field"], constants) : G;
    return VectorField::gradient_of(f).scaled(scale);
  }
  if (type == "expression") {
    const auto& c = j.at("components");
    if (!c.is_array() || c.size() != 3) throw Error(ErrorKind::Config, "vector expression needs 3 components");
    std::array<Expression, 3> e = {Expression::parse(c[0].get<std::string>(), constants),
                                   Expression::parse(c[1].get<std::string>(), constants),
                                   Expression::parse(c[2].get<std::string>(), constants)};
    return VectorField::explicit_field([e](const Vec3& x) { return Vec3(e[0](x), e[1](x), e[2](x)); })
        .scaled(scale);
  }
  if (type == "zero") return VectorField::zero();
  throw Error(ErrorKind::Config, "unknown vector field type '" + type + "'");
}

SurfaceSystem system_from_json(const Json& j) {
  const auto constants = read_constants(j);
  SurfaceSystem s;
  if (j.contains("preset")) {
    const std::string preset = j["preset"].get<std::string>();
    if (preset == "canonical-sphere")
      s = canonical_sphere_system(constants.count("beta") ? constants.at("beta") : 0.0,
                                  constants.count("kappa") ? constants.at("kappa") : 1.0);
    else if (preset == "sphere-height")
      s = sphere_height_system();
    else
      throw Error(ErrorKind::Config, "unknown preset '" + preset + "'");
  } else {
    const auto& fields = j.at("fields");
    s.F = field_from_json(fields.at("F"), constants);
    s.G = field_from_json(fields.at("G"), constants);
    s.perturbation.field = VectorField::gradient_of(s.G);
    s.noise = NoiseMap::tangent_projection(s.F);
  }
  s.name = j.value("name", s.name.empty() ? std::string("system") : s.name);
  if (j.contains("perturbation")) {
    const auto& p = j["perturbation"];
    const std::string form = p.value("form", "double-cross");
    if (form == "double-cross") s.perturbation.form = PerturbationForm::DoubleCross;
    else if (form == "single-cross") s.perturbation.form = PerturbationForm::SingleCross;
    else throw Error(ErrorKind::Config, "unknown perturbation form '" + form + "'");
    s.perturbation.field = vector_field_from_json(p.value("field", Json::object()), s.G, constants);
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    const std::string type = n.value("type", "tangent-projection");
    if (type == "none") {
      s.noise.reset();
    } else if (type == "tangent-projection") {
      std::optional<SmoothField> scale;
      if (n.contains("scale")) scale = field_from_json(n["scale"], constants);
      s.noise = NoiseMap::tangent_projection(s.F, scale);
    } else if (type == "expression") {
      const auto& m = n.at("sigma");
      if (!m.is_array() || m.size() != 9) throw Error(ErrorKind::Config, "sigma needs 9 row-major entries");
      std::array<Expression, 9> e;
      for (int i = 0; i < 9; ++i) e[i] = Expression::parse(m[i].get<std::string>(), constants);
      s.noise = NoiseMap::from_sigma([e](const Vec3& x) {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = e[i](x);
        return r;
      });
    } else {
      throw Error(ErrorKind::Config, "unknown noise type '" + type + "'");
    }
  }
  if (j.contains("parameters")) {
    const auto& p = j["parameters"];
    if (p.contains("z")) s.z = number(p["z"], constants);
    if (p.contains("x0")) s.x0 = vec3_from_json(p["x0"]);
    if (p.contains("epsilon")) s.epsilon = number(p["epsilon"], constants);
    if (p.contains("delta")) s.delta = number(p["delta"], constants);
    if (p.contains("center")) s.center = vec3_from_json(p["center"]);
    if (p.value("project_x0", false)) s.x0 = project_to_level(s.F, s.z, s.x0);
  }
  s.fingerprint = j.dump();
  validate(s);
  return s;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open '" + path + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, "'" + path + "': " + e.what());
  }
}

SurfaceSystem load_system(const std::string& path) {
  Json j = read_json_file(path);
  if (j.contains("system")) j = j["system"];
  return system_from_json(j);
}

}  // namespace slowfast
