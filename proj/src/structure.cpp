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

#include "tensiforge/structure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "tensiforge/errors.hpp"

namespace tensiforge::structure {
namespace {

constexpr double kPi = std::numbers::pi;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

void require_compliance(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    throw RangeError(std::string("compliance.") + name + " must be finite and >= 0");
  }
}

}  // namespace

std::string_view to_string(CableClass cls) {
  switch (cls) {
    case CableClass::kHorizontal: return "horizontal";
    case CableClass::kSaddle: return "saddle";
    case CableClass::kVertical: return "vertical";
    case CableClass::kDiagonal: return "diagonal";
  }
  return "unknown";
}

CableClass cable_class_from_string(std::string_view name) {
  for (CableClass cls : kAllCableClasses) {
    if (to_string(cls) == name) return cls;
  }
  throw ParseError("unknown cable class '" + std::string(name) + "'");
}

double ComplianceSet::for_cable(CableClass cls) const {
  switch (cls) {
    case CableClass::kHorizontal: return horizontal;
    case CableClass::kSaddle: return saddle;
    case CableClass::kVertical: return vertical;
    case CableClass::kDiagonal: return diagonal;
  }
  return horizontal;
}

double StructureSpec::resolved_twist() const { return twist.value_or(kPi); }

std::vector<int> StructureSpec::resolved_plate_levels() const {
  if (plate_levels.empty()) return {0, m - 1};
  return plate_levels;
}

std::string to_string(const VertexId& v) {
  return "V" + std::to_string(v.set) + "." + std::to_string(v.strut) + "." + std::to_string(v.end);
}

std::size_t Topology::count(CableClass cls) const {
  return static_cast<std::size_t>(
      std::count_if(cables.begin(), cables.end(), [cls](const Cable& c) { return c.cls == cls; }));
}

std::size_t Topology::vertex_index(const VertexId& v) const {
  return static_cast<std::size_t>((v.set * n + v.strut) * 2 + v.end);
}

ValidatedSpec validate_spec(const StructureSpec& spec) {
  if (spec.m < 3 || spec.m % 3 != 0) {
    throw LayerRuleViolation("layer rule: m must be one of 3, 6, 9, ... (3p + 3), got " +
                             std::to_string(spec.m));
  }
  if (spec.n < 3) throw RangeError("n must be >= 3, got " + std::to_string(spec.n));
  if (!finite_positive(spec.base_radius)) throw RangeError("base_radius must be > 0");
  if (!finite_positive(spec.layer_height)) throw RangeError("layer_height must be > 0");
  if (spec.twist && !std::isfinite(*spec.twist)) throw RangeError("twist must be finite");
  if (spec.rod_segments < 1) throw RangeError("rod_segments must be >= 1");
  if (spec.tendon_count < 3) throw RangeError("tendon_count must be >= 3");
  if (!finite_positive(spec.tendon_radius) || spec.tendon_radius >= spec.base_radius) {
    throw RangeError("tendon_radius must satisfy 0 < tendon_radius < base_radius");
  }
  if (!finite_positive(spec.particle_mass)) throw RangeError("particle_mass must be > 0");
  if (!(spec.cable_prestress >= 0.0 && spec.cable_prestress < 1.0)) {
    throw RangeError("cable_prestress must be in [0, 1)");
  }

  const auto& c = spec.compliance;
  require_compliance(c.rod, "rod");
  require_compliance(c.bend, "bend");
  require_compliance(c.plate, "plate");
  require_compliance(c.link, "link");
  require_compliance(c.horizontal, "horizontal");
  require_compliance(c.saddle, "saddle");
  require_compliance(c.vertical, "vertical");
  require_compliance(c.diagonal, "diagonal");
  require_compliance(c.tendon, "tendon");

  const auto levels = spec.resolved_plate_levels();
  if (levels.size() < 2 || levels.front() != 0 || levels.back() != spec.m - 1 ||
      !std::is_sorted(levels.begin(), levels.end()) ||
      std::adjacent_find(levels.begin(), levels.end()) != levels.end()) {
    throw RangeError("plate_levels must be strictly increasing from 0 to m - 1");
  }
  return ValidatedSpec(spec);
}

Topology generate_topology(const ValidatedSpec& validated) {
  const StructureSpec& spec = validated.get();
  const int n = spec.n;
  const int m = spec.m;
  const int sets = m - 1;
  auto wrap = [n](int i) { return ((i % n) + n) % n; };

  Topology topo;
  topo.n = n;
  topo.m = m;

  for (int set = 0; set < sets; ++set) {
    for (int i = 0; i < n; ++i) {
      topo.vertices.push_back({set, i, 0});
      topo.vertices.push_back({set, i, 1});
      topo.rods.push_back({{set, i, 0}, {set, i, 1}});
    }
  }

  // End rings at level 0 and level m - 1.
  for (int i = 0; i < n; ++i) {
    topo.cables.push_back({{0, i, 0}, {0, wrap(i + 1), 0}, CableClass::kHorizontal});
  }
  for (int i = 0; i < n; ++i) {
    topo.cables.push_back({{sets - 1, i, 1}, {sets - 1, wrap(i + 1), 1}, CableClass::kHorizontal});
  }

  // Closed 2n-cycle at each middle level: top(l, i) - bottom(l+1, i) - top(l, i+1).
  for (int level = 1; level <= m - 2; ++level) {
    const int lower = level - 1;
    for (int i = 0; i < n; ++i) {
      topo.cables.push_back({{lower, i, 1}, {lower + 1, i, 0}, CableClass::kSaddle});
      topo.cables.push_back({{lower + 1, i, 0}, {lower, wrap(i + 1), 1}, CableClass::kSaddle});
    }
  }

  for (int set = 0; set < sets; ++set) {
    for (int i = 0; i < n; ++i) {
      topo.cables.push_back({{set, i, 0}, {set, wrap(i - 1), 1}, CableClass::kVertical});
    }
  }

  // One ring of n cross-set ties per level transition: bottom ends for the base
  // transition, top ends of consecutive sets above it.
  for (int transition = 0; transition < m - 1; ++transition) {
    for (int i = 0; i < n; ++i) {
      if (transition == 0) {
        topo.cables.push_back({{0, i, 0}, {1, i, 0}, CableClass::kDiagonal});
      } else {
        topo.cables.push_back(
            {{transition - 1, i, 1}, {transition, i, 1}, CableClass::kDiagonal});
      }
    }
  }

  for (int level : spec.resolved_plate_levels()) {
    Plate plate;
    plate.level = level;
    for (const VertexId& v : topo.vertices) {
      if (v.level() == level) plate.members.push_back(v);
    }
    topo.plates.push_back(std::move(plate));
  }

  const auto levels = spec.resolved_plate_levels();
  const int tc = spec.tendon_count;
  for (std::size_t s = 0; s + 1 < levels.size(); ++s) {
    for (int k = 0; k < tc; ++k) {
      TendonRoute route;
      route.id = static_cast<int>(s) * tc + k;
      route.segment = static_cast<int>(s);
      route.azimuth = 2.0 * kPi * k / tc + static_cast<double>(s) * kPi / tc;
      for (int level = levels[s]; level <= levels[s + 1]; ++level) route.levels.push_back(level);
      topo.tendon_routes.push_back(std::move(route));
    }
  }
  return topo;
}

Scene embed_geometry(const Topology& topology, const ValidatedSpec& validated) {
  const StructureSpec& spec = validated.get();
  const int n = topology.n;
  const double twist = spec.resolved_twist();
  // Each set's bottom ring sits pi/n past the top ring of the set below so the
  // middle levels form an evenly interleaved 2n-gon.
  const double set_offset = twist + kPi / n;

  Scene scene;
  scene.spec = spec;
  scene.topology = topology;
  scene.positions.reserve(topology.vertices.size());
  for (const VertexId& v : topology.vertices) {
    double azimuth = 2.0 * kPi * v.strut / n + v.set * set_offset;
    if (v.end == 1) azimuth += twist;
    scene.positions.emplace_back(spec.base_radius * std::cos(azimuth),
                                 spec.base_radius * std::sin(azimuth),
                                 v.level() * spec.layer_height);
  }

  for (const Rod& rod : topology.rods) {
    const int a = static_cast<int>(topology.vertex_index(rod.bottom));
    const int b = static_cast<int>(topology.vertex_index(rod.top));
    std::vector<int> nodes{a};
    for (int k = 1; k < spec.rod_segments; ++k) {
      const double t = static_cast<double>(k) / spec.rod_segments;
      nodes.push_back(static_cast<int>(scene.positions.size()));
      scene.positions.push_back((1.0 - t) * scene.positions[a] + t * scene.positions[b]);
    }
    nodes.push_back(b);
    scene.rod_nodes.push_back(std::move(nodes));
  }

  for (const Cable& cable : topology.cables) {
    const auto a = topology.vertex_index(cable.a);
    const auto b = topology.vertex_index(cable.b);
    scene.cable_rest.push_back((1.0 - spec.cable_prestress) *
                               (scene.positions[a] - scene.positions[b]).norm());
    scene.cable_compliance.push_back(spec.compliance.for_cable(cable.cls));
  }

  scene.provenance["generator"] = "tensiforge";
  scene.provenance["stage"] = "embed_geometry";
  return scene;
}

Scene route_tendons(Scene scene, const ValidatedSpec& validated) {
  const StructureSpec& spec = validated.get();
  const Topology& topo = scene.topology;
  const double r = spec.tendon_radius;

  for (const TendonRoute& route : topo.tendon_routes) {
    Tendon tendon;
    tendon.id = route.id;
    tendon.segment = route.segment;
    tendon.azimuth = route.azimuth;
    for (int level : route.levels) {
      const Vec3 pos(r * std::cos(route.azimuth), r * std::sin(route.azimuth),
                     level * spec.layer_height);

      std::vector<std::pair<double, int>> candidates;
      for (std::size_t vi = 0; vi < topo.vertices.size(); ++vi) {
        if (topo.vertices[vi].level() != level) continue;
        candidates.emplace_back((scene.positions[vi] - pos).norm(), static_cast<int>(vi));
      }
      std::sort(candidates.begin(), candidates.end());

      Eyelet eyelet;
      eyelet.particle = static_cast<int>(scene.positions.size());
      eyelet.tendon = route.id;
      eyelet.level = level;
      for (std::size_t k = 0; k < std::min<std::size_t>(3, candidates.size()); ++k) {
        eyelet.links.push_back(candidates[k].second);
        eyelet.link_rest.push_back(candidates[k].first);
      }
      scene.positions.push_back(pos);
      tendon.eyelets.push_back(static_cast<int>(scene.eyelets.size()));
      scene.eyelets.push_back(std::move(eyelet));
    }
    for (std::size_t k = 0; k + 1 < tendon.eyelets.size(); ++k) {
      const int a = scene.eyelets[tendon.eyelets[k]].particle;
      const int b = scene.eyelets[tendon.eyelets[k + 1]].particle;
      tendon.natural_length += (scene.positions[a] - scene.positions[b]).norm();
    }
    scene.tendons.push_back(std::move(tendon));
  }

  // Eyelets on one level must not share a location.
  for (std::size_t i = 0; i < scene.eyelets.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.eyelets.size(); ++j) {
      const Vec3& a = scene.positions[scene.eyelets[i].particle];
      const Vec3& b = scene.positions[scene.eyelets[j].particle];
      if ((a - b).norm() < 1e-9 * spec.base_radius) {
        throw DegenerateRouting("eyelets of tendons " + std::to_string(scene.eyelets[i].tendon) +
                                " and " + std::to_string(scene.eyelets[j].tendon) +
                                " coincide at level " + std::to_string(scene.eyelets[i].level));
      }
    }
  }
  scene.provenance["stage"] = "route_tendons";
  return scene;
}

Scene build_scene(const StructureSpec& spec) {
  const ValidatedSpec validated = validate_spec(spec);
  const Topology topology = generate_topology(validated);
  return route_tendons(embed_geometry(topology, validated), validated);
}

}  // namespace tensiforge::structure
