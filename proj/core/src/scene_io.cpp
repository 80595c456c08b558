#include "alphainv/scene_io.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>

#include <fmt/format.h>

#include "alphainv/error.hpp"

namespace alphainv {

using nlohmann::json;

namespace {

void allow_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) {
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (auto allowed : keys) known = known || (k == allowed);
    if (!known) throw ConfigError(path + "." + k, "unknown key");
  }
}

const json& member(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing required key");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), path + "." + key) : fallback;
}

double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) throw ConfigError(path, "expected a positive number");
  return x;
}

Vec3 vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected an array of 3 numbers");
  return {number(v[0], path + "[0]"), number(v[1], path + "[1]"), number(v[2], path + "[2]")};
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Primitive parse_primitive(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const std::string shape = string(member(j, path, "shape"), path + ".shape");
  Primitive p;
  p.sigma = number(member(j, path, "sigma"), path + ".sigma");
  if (!(p.sigma >= 0.0)) throw ConfigError(path + ".sigma", "must be >= 0");
  p.albedo = j.contains("albedo") ? vec3(j.at("albedo"), path + ".albedo") : Vec3{1.0, 1.0, 1.0};
  if (shape == "sphere") {
    allow_keys(j, path, {"shape", "sigma", "albedo", "center", "radius"});
    p.geometry = Sphere{vec3(member(j, path, "center"), path + ".center"),
                        positive(member(j, path, "radius"), path + ".radius")};
  } else if (shape == "shell") {
    allow_keys(j, path, {"shape", "sigma", "albedo", "center", "inner_radius", "outer_radius"});
    p.geometry = Shell{vec3(member(j, path, "center"), path + ".center"),
                       positive(member(j, path, "inner_radius"), path + ".inner_radius"),
                       positive(member(j, path, "outer_radius"), path + ".outer_radius")};
  } else if (shape == "box") {
    allow_keys(j, path, {"shape", "sigma", "albedo", "min", "max"});
    p.geometry = Box{vec3(member(j, path, "min"), path + ".min"), vec3(member(j, path, "max"), path + ".max")};
  } else if (shape == "slab") {
    allow_keys(j, path, {"shape", "sigma", "albedo", "normal", "lo", "hi"});
    p.geometry = Slab{vec3(member(j, path, "normal"), path + ".normal"), number(member(j, path, "lo"), path + ".lo"),
                      number(member(j, path, "hi"), path + ".hi")};
  } else {
    throw ConfigError(path + ".shape", fmt::format("unknown shape '{}' (expected sphere|shell|box|slab)", shape));
  }
  return p;
}

json primitive_to_json(const Primitive& p) {
  json j;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          j = {{"shape", "sphere"}, {"center", to_json(s.center)}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<T, Shell>) {
          j = {{"shape", "shell"},
               {"center", to_json(s.center)},
               {"inner_radius", s.inner_radius},
               {"outer_radius", s.outer_radius}};
        } else if constexpr (std::is_same_v<T, Box>) {
          j = {{"shape", "box"}, {"min", to_json(s.min)}, {"max", to_json(s.max)}};
        } else {
          j = {{"shape", "slab"}, {"normal", to_json(s.normal)}, {"lo", s.lo}, {"hi", s.hi}};
        }
      },
      p.geometry);
  j["sigma"] = p.sigma;
  j["albedo"] = to_json(p.albedo);
  return j;
}

Camera parse_camera(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  allow_keys(j, path, {"position", "look_at", "up", "fov_y", "width", "height"});
  Camera c;
  c.position = vec3(member(j, path, "position"), path + ".position");
  c.look_at = j.contains("look_at") ? vec3(j.at("look_at"), path + ".look_at") : Vec3{};
  c.up = j.contains("up") ? vec3(j.at("up"), path + ".up") : Vec3{0.0, 0.0, 1.0};
  c.fov_y_deg = number_or(j, path, "fov_y", 40.0);
  for (auto [key, dst] : {std::pair{"width", &c.width}, std::pair{"height", &c.height}}) {
    if (!j.contains(key)) continue;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 8192) {
      throw ConfigError(path + "." + key, "expected an integer in [1, 8192]");
    }
    *dst = v.get<int>();
  }
  return c;
}

SamplerSpec parse_sampler(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  allow_keys(j, path, {"kind", "n_samples", "n_importance", "seed", "contraction"});
  SamplerSpec s;
  try {
    if (j.contains("kind")) s.kind = parse_sampler_kind(string(j.at("kind"), path + ".kind"));
    if (j.contains("contraction")) s.contraction = parse_contraction(string(j.at("contraction"), path + ".contraction"));
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  for (auto [key, dst] : {std::pair{"n_samples", &s.n_samples}, std::pair{"n_importance", &s.n_importance}}) {
    if (!j.contains(key)) continue;
    if (!j.at(key).is_number_unsigned()) throw ConfigError(path + "." + key, "expected a non-negative integer");
    *dst = j.at(key).get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError(path + ".seed", "expected a non-negative integer");
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  if (s.n_samples == 0) throw ConfigError(path + ".n_samples", "must be >= 1");
  return s;
}

}  // namespace

json sampler_to_json(const SamplerSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"n_samples", s.n_samples},
          {"n_importance", s.n_importance},
          {"seed", s.seed},
          {"contraction", to_string(s.contraction)}};
}

SceneSpec parse_scene(const json& doc) {
  const std::string root = "scene";
  if (!doc.is_object()) throw ConfigError(root, "expected a JSON object");
  allow_keys(doc, root, {"name", "bounds", "primitives", "cameras", "near", "far", "scale_k", "sampler"});

  SceneSpec s;
  s.name = doc.contains("name") ? string(doc.at("name"), root + ".name") : "scene";

  const json& b = member(doc, root, "bounds");
  if (!b.is_object()) throw ConfigError(root + ".bounds", "expected an object with min and max");
  allow_keys(b, root + ".bounds", {"min", "max"});
  s.bounds = {vec3(member(b, root + ".bounds", "min"), root + ".bounds.min"),
              vec3(member(b, root + ".bounds", "max"), root + ".bounds.max")};

  const json& prims = member(doc, root, "primitives");
  if (!prims.is_array()) throw ConfigError(root + ".primitives", "expected an array");
  for (std::size_t i = 0; i < prims.size(); ++i) {
    s.primitives.push_back(parse_primitive(prims[i], fmt::format("{}.primitives[{}]", root, i)));
  }

  const json& cams = member(doc, root, "cameras");
  if (!cams.is_array() || cams.empty()) throw ConfigError(root + ".cameras", "expected a non-empty array");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    s.cameras.push_back(parse_camera(cams[i], fmt::format("{}.cameras[{}]", root, i)));
  }

  s.near = number(member(doc, root, "near"), root + ".near");
  s.far = number(member(doc, root, "far"), root + ".far");
  const double k = number_or(doc, root, "scale_k", 1.0);
  if (!(k > 0.0)) throw ConfigError(root + ".scale_k", "must be > 0");
  if (doc.contains("sampler")) s.sampler = parse_sampler(doc.at("sampler"), root + ".sampler");
  if (s.sampler.kind == SamplerKind::Disparity && !(s.near > 0.0)) {
    throw ConfigError(root + ".sampler.kind", "disparity sampling requires near > 0");
  }
  s.validate();
  return k == 1.0 ? s : scale_scene(s, k);
}

json scene_to_json(const SceneSpec& scene) {
  const SceneSpec base = scene.scale_k == 1.0 ? scene : scale_scene(scene, 1.0 / scene.scale_k);
  json prims = json::array();
  for (const Primitive& p : base.primitives) prims.push_back(primitive_to_json(p));
  json cams = json::array();
  for (const Camera& c : base.cameras) {
    cams.push_back({{"position", to_json(c.position)},
                    {"look_at", to_json(c.look_at)},
                    {"up", to_json(c.up)},
                    {"fov_y", c.fov_y_deg},
                    {"width", c.width},
                    {"height", c.height}});
  }
  return {{"name", base.name},
          {"bounds", {{"min", to_json(base.bounds.min)}, {"max", to_json(base.bounds.max)}}},
          {"primitives", prims},
          {"cameras", cams},
          {"near", base.near},
          {"far", base.far},
          {"scale_k", scene.scale_k},
          {"sampler", sampler_to_json(base.sampler)}};
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open scene file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, fmt::format("invalid JSON: {}", e.what()));
  }
  return parse_scene(doc);
}

SceneSpec resolve_scene(const std::string& name_or_path) {
  for (const auto& n : bundled_scene_names()) {
    if (n == name_or_path) return bundled_scene(n);
  }
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError(name_or_path, "not a bundled scene name and no such file");
  }
  return load_scene(name_or_path);
}

}  // namespace alphainv
