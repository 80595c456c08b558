#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "alphainv/scene.hpp"

namespace alphainv {

/// Parses a scene document. Geometry in the document is the base (k = 1) scene;
/// a "scale_k" other than 1 is applied with scale_scene(). Errors are ConfigError
/// with a JSON path such as "scene.primitives[1].radius".
SceneSpec parse_scene(const nlohmann::json& doc);

/// Inverse of parse_scene (writes base geometry and scale_k).
nlohmann::json scene_to_json(const SceneSpec& scene);

SceneSpec load_scene(const std::string& path);

/// A bundled scene name ("sphere", ...) or a path to a scene JSON file.
SceneSpec resolve_scene(const std::string& name_or_path);

nlohmann::json sampler_to_json(const SamplerSpec& s);

}  // namespace alphainv
