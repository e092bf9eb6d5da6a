// Copyright 2026 The TensiForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tensiforge/errors.hpp"
#include "tensiforge/structure.hpp"

namespace tensiforge::exporter {

enum class PartKind { kPlate, kRod, kPin };
std::string_view to_string(PartKind kind);

using Triangle = std::array<Vec3, 3>;  // millimeters, counter-clockwise seen from outside

struct PartMesh {
  std::string id;      // "plate-L<level>" or "rod-S<set>-I<strut>"
  PartKind kind = PartKind::kPlate;
  std::vector<Triangle> triangles;
  std::string source;  // element the part was cut from
};

struct FabConfig {
  double plate_thickness_mm = 3.0;
  double rod_radius_mm = 2.0;
  int rod_sides = 8;

  void validate() const;  // throws RangeError
};

// One prism per plate and per rod. Throws DegenerateGeometry for zero-length
// rods and zero-area plates.
std::vector<PartMesh> decompose_parts(const structure::Scene& scene, const FabConfig& fab = {});

// Throws DegenerateGeometry when the mesh has fewer than 4 triangles or
// non-finite vertices.
void check_part(const PartMesh& part);

// Binary STL: 80-byte header, u32 count, 50 bytes per triangle.
// Throws TooManyTriangles.
std::string export_stl(const PartMesh& part);

struct StlTriangle {
  std::array<float, 3> normal;
  std::array<std::array<float, 3>, 3> vertices;
  bool operator==(const StlTriangle&) const = default;
};

struct StlFile {
  std::string header;  // trailing NUL padding removed
  std::vector<StlTriangle> triangles;
};

// Throws ParseError when the size does not match the triangle count.
StlFile parse_stl(std::string_view bytes);

// Writes "<scene_name>_<part id>.stl" files; returns their paths in part order.
std::vector<std::filesystem::path> write_parts(const std::vector<PartMesh>& parts,
                                               const std::filesystem::path& dir,
                                               const std::string& scene_name);

// Scene document with lengths in millimeters and at most 9 significant digits.
std::string export_scene_json(const structure::Scene& scene);

// Throws SchemaError naming the JSON path of the first violation.
structure::Scene import_scene_json(std::string_view text);

// Rounds to 9 significant digits, as written to scene documents.
double round_sig9(double v);

}  // namespace tensiforge::exporter
