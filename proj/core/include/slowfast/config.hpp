#pragma once

#include <string>

#include <json.hpp>

#include "slowfast/geometry.hpp"

namespace slowfast {

using Json = nlohmann::json;

// Field description, e.g. {"type":"polynomial","terms":[[1,0,0,1],[-1,2,0,0]]}.
SmoothField field_from_json(const Json& j, const std::map<std::string, double>& constants = {});
VectorField vector_field_from_json(const Json& j, const SmoothField& G,
                                   const std::map<std::string, double>& constants = {});

SurfaceSystem system_from_json(const Json& j);
SurfaceSystem load_system(const std::string& path);
Json read_json_file(const std::string& path);

Vec3 vec3_from_json(const Json& j);
Json to_json(const Vec3& v);

}  // namespace slowfast
