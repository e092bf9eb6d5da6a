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

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace tensiforge {

using Vec3 = Eigen::Vector3d;

namespace structure {

enum class CableClass { kHorizontal, kSaddle, kVertical, kDiagonal };

inline constexpr CableClass kAllCableClasses[] = {CableClass::kHorizontal, CableClass::kSaddle,
                                                  CableClass::kVertical, CableClass::kDiagonal};

std::string_view to_string(CableClass cls);
// Throws ParseError on unknown names.
CableClass cable_class_from_string(std::string_view name);

// Compliance (m/N) per element class. Zero means perfectly rigid.
struct ComplianceSet {
  double rod = 0.0;
  double bend = 0.0;
  double plate = 0.0;
  double link = 0.0;  // eyelet-to-structure ties
  double horizontal = 1e-3;
  double saddle = 1.5e-2;
  double vertical = 1e-3;
  double diagonal = 1e-3;
  double tendon = 7e-3;

  double for_cable(CableClass cls) const;
  bool operator==(const ComplianceSet&) const = default;
};

struct StructureSpec {
  int n = 3;                       // struts per rod set
  int m = 3;                       // layer count, 3p + 3
  double base_radius = 0.06;       // m
  double layer_height = 0.045;     // m
  std::optional<double> twist;     // rad, defaults to pi
  int rod_segments = 1;
  int tendon_count = 3;
  double tendon_radius = 0.04;     // m
  double particle_mass = 0.01;     // kg
  double cable_prestress = 0.01;   // cable rest = (1 - p) * embedded length
  ComplianceSet compliance;
  std::vector<int> plate_levels;   // empty means {0, m - 1}

  double resolved_twist() const;
  std::vector<int> resolved_plate_levels() const;
  bool operator==(const StructureSpec&) const = default;
};

// A spec that passed validate_spec. Only validate_spec can mint one.
class ValidatedSpec {
 public:
  const StructureSpec& get() const noexcept { return spec_; }
  const StructureSpec* operator->() const noexcept { return &spec_; }

 private:
  explicit ValidatedSpec(StructureSpec spec) : spec_(std::move(spec)) {}
  friend ValidatedSpec validate_spec(const StructureSpec& spec);
  StructureSpec spec_;
};

// Rod end label: rod set, strut within the set, end (0 bottom, 1 top).
struct VertexId {
  int set = 0;
  int strut = 0;
  int end = 0;

  int level() const noexcept { return set + end; }
  auto operator<=>(const VertexId&) const = default;
};

std::string to_string(const VertexId& v);

struct Rod {
  VertexId bottom;
  VertexId top;
};

struct Plate {
  int level = 0;
  std::vector<VertexId> members;
  bool rigid = true;
};

struct Cable {
  VertexId a;
  VertexId b;
  CableClass cls = CableClass::kHorizontal;
};

struct TendonRoute {
  int id = 0;
  int segment = 0;
  double azimuth = 0.0;      // rad
  std::vector<int> levels;   // bottom to top
};

struct Topology {
  int n = 0;
  int m = 0;
  std::vector<VertexId> vertices;  // ordered by (set, strut, end)
  std::vector<Rod> rods;
  std::vector<Plate> plates;
  std::vector<Cable> cables;
  std::vector<TendonRoute> tendon_routes;

  std::size_t count(CableClass cls) const;
  std::size_t vertex_index(const VertexId& v) const;
  std::size_t segment_count() const { return plates.empty() ? 0 : plates.size() - 1; }
};

struct Eyelet {
  int particle = 0;
  int tendon = 0;
  int level = 0;
  std::vector<int> links;        // structural particle indices
  std::vector<double> link_rest; // m
};

struct Tendon {
  int id = 0;
  int segment = 0;
  double azimuth = 0.0;
  std::vector<int> eyelets;       // indices into Scene::eyelets, bottom to top
  double natural_length = 0.0;    // m
  double factor = 1.0;
};

struct Scene {
  StructureSpec spec;
  Topology topology;
  // Rod-end vertices first (topology order), then rod interior nodes, then eyelets.
  std::vector<Vec3> positions;
  std::vector<std::vector<int>> rod_nodes;  // per rod, bottom end to top end
  std::vector<double> cable_rest;           // per topology cable, m
  std::vector<double> cable_compliance;     // per topology cable, m/N
  std::vector<Eyelet> eyelets;
  std::vector<Tendon> tendons;
  std::map<std::string, std::string> provenance;

  std::size_t structural_count() const { return topology.vertices.size(); }
};

ValidatedSpec validate_spec(const StructureSpec& spec);
Topology generate_topology(const ValidatedSpec& spec);
Scene embed_geometry(const Topology& topology, const ValidatedSpec& spec);
Scene route_tendons(Scene scene, const ValidatedSpec& spec);

// validate -> generate -> embed -> route.
Scene build_scene(const StructureSpec& spec);

}  // namespace structure
}  // namespace tensiforge
