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


#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>

#include "tensiforge/errors.hpp"
#include "tensiforge/structure.hpp"

namespace tensiforge::structure {
namespace {

StructureSpec spec_nm(int n, int m) {
  StructureSpec s;
  s.n = n;
  s.m = m;
  return s;
}

TEST(ValidateSpec, AcceptsMultiplesOfThree) {
  for (int m : {3, 6, 9, 12}) EXPECT_NO_THROW(validate_spec(spec_nm(3, m))) << "m=" << m;
}

TEST(ValidateSpec, RejectsOtherLayerCounts) {
  for (int m : {1, 2, 4, 5, 7, 8, 10, 11, 13, 0, -3}) {
    EXPECT_THROW(validate_spec(spec_nm(3, m)), LayerRuleViolation) << "m=" << m;
  }
}

TEST(ValidateSpec, LayerRuleMessageNamesTheRule) {
  try {
    validate_spec(spec_nm(3, 4));
    FAIL();
  } catch (const LayerRuleViolation& e) {
    EXPECT_NE(std::string(e.what()).find("layer rule"), std::string::npos);
  }
}

TEST(ValidateSpec, RangeChecks) {
  EXPECT_THROW(validate_spec(spec_nm(2, 3)), RangeError);
  auto s = spec_nm(3, 3);
  s.base_radius = 0.0;
  EXPECT_THROW(validate_spec(s), RangeError);
  s = spec_nm(3, 3);
  s.layer_height = -1.0;
  EXPECT_THROW(validate_spec(s), RangeError);
  s = spec_nm(3, 3);
  s.tendon_radius = s.base_radius;
  EXPECT_THROW(validate_spec(s), RangeError);
  s = spec_nm(3, 3);
  s.tendon_count = 2;
  EXPECT_THROW(validate_spec(s), RangeError);
  s = spec_nm(3, 3);
  s.cable_prestress = 1.0;
  EXPECT_THROW(validate_spec(s), RangeError);
  s = spec_nm(3, 3);
  s.compliance.saddle = -1.0;
  EXPECT_THROW(validate_spec(s), RangeError);
}

TEST(ValidateSpec, ReturnsSpecUnchanged) {
  auto s = spec_nm(5, 6);
  s.base_radius = 0.08;
  EXPECT_EQ(validate_spec(s).get(), s);
}

TEST(Topology, CountsMatchFormulasOverGrid) {
  for (int n = 3; n <= 6; ++n) {
    for (int m : {3, 6, 9, 12}) {
      const auto topo = generate_topology(validate_spec(spec_nm(n, m)));
      EXPECT_EQ(topo.count(CableClass::kHorizontal), static_cast<std::size_t>(2 * n));
      EXPECT_EQ(topo.count(CableClass::kSaddle), static_cast<std::size_t>(2 * n * (m - 2)));
      EXPECT_EQ(topo.count(CableClass::kVertical), static_cast<std::size_t>(n * (m - 1)));
      EXPECT_EQ(topo.count(CableClass::kDiagonal), static_cast<std::size_t>(n * (m - 1)));
      EXPECT_EQ(topo.rods.size(), static_cast<std::size_t>(n * (m - 1)));
      EXPECT_EQ(topo.vertices.size(), static_cast<std::size_t>(2 * n * (m - 1)));
    }
  }
}

TEST(Topology, SmallInstances) {
  auto t = generate_topology(validate_spec(spec_nm(3, 6)));
  EXPECT_EQ(t.count(CableClass::kHorizontal), 6u);
  EXPECT_EQ(t.count(CableClass::kSaddle), 24u);
  EXPECT_EQ(t.count(CableClass::kVertical), 15u);
  EXPECT_EQ(t.count(CableClass::kDiagonal), 15u);
  t = generate_topology(validate_spec(spec_nm(4, 3)));
  for (auto cls : kAllCableClasses) EXPECT_EQ(t.count(cls), 8u) << to_string(cls);
}

TEST(Topology, SaddleCycleOrder) {
  const auto topo = generate_topology(validate_spec(spec_nm(3, 3)));
  // Walk the saddle edges from A(0,1) and record the visited vertices.
  std::multimap<VertexId, VertexId> adj;
  for (const auto& c : topo.cables) {
    if (c.cls != CableClass::kSaddle) continue;
    adj.insert({c.a, c.b});
    adj.insert({c.b, c.a});
  }
  const std::vector<VertexId> expected = {{0, 0, 1}, {1, 0, 0}, {0, 1, 1}, {1, 1, 0},
                                          {0, 2, 1}, {1, 2, 0}, {0, 0, 1}};
  for (std::size_t k = 0; k + 1 < expected.size(); ++k) {
    bool found = false;
    for (auto [it, end] = adj.equal_range(expected[k]); it != end; ++it) found |= it->second == expected[k + 1];
    EXPECT_TRUE(found) << to_string(expected[k]) << " -> " << to_string(expected[k + 1]);
  }
  for (const auto& [v, _] : adj) EXPECT_EQ(adj.count(v), 2u) << to_string(v);
}

TEST(Topology, NoDuplicateEdgesAndValidEndpoints) {
  for (int m : {3, 6, 9}) {
    const auto topo = generate_topology(validate_spec(spec_nm(4, m)));
    std::set<std::pair<VertexId, VertexId>> seen;
    for (const auto& c : topo.cables) {
      EXPECT_NE(c.a, c.b);
      EXPECT_NO_THROW(topo.vertex_index(c.a));
      EXPECT_NO_THROW(topo.vertex_index(c.b));
      const auto key = c.a < c.b ? std::make_pair(c.a, c.b) : std::make_pair(c.b, c.a);
      EXPECT_TRUE(seen.insert(key).second) << to_string(c.a) << "-" << to_string(c.b);
    }
  }
}

TEST(Topology, EveryVertexHasDegreeAtLeastThree) {
  for (int n = 3; n <= 6; ++n) {
    for (int m : {3, 6, 9, 12}) {
      const auto topo = generate_topology(validate_spec(spec_nm(n, m)));
      std::vector<int> degree(topo.vertices.size(), 0);
      for (const auto& r : topo.rods) {
        ++degree[topo.vertex_index(r.bottom)];
        ++degree[topo.vertex_index(r.top)];
      }
      for (const auto& c : topo.cables) {
        ++degree[topo.vertex_index(c.a)];
        ++degree[topo.vertex_index(c.b)];
      }
      for (std::size_t v = 0; v < degree.size(); ++v) EXPECT_GE(degree[v], 3) << to_string(topo.vertices[v]);
    }
  }
}

TEST(Topology, VerticalAndDiagonalCablesConnectAllSets) {
  const auto topo = generate_topology(validate_spec(spec_nm(3, 9)));
  std::vector<int> parent(topo.vertices.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  const auto join = [&](std::size_t a, std::size_t b) { parent[find(static_cast<int>(a))] = find(static_cast<int>(b)); };
  for (const auto& r : topo.rods) join(topo.vertex_index(r.bottom), topo.vertex_index(r.top));
  for (const auto& c : topo.cables) {
    if (c.cls == CableClass::kVertical || c.cls == CableClass::kDiagonal) {
      join(topo.vertex_index(c.a), topo.vertex_index(c.b));
    }
  }
  for (std::size_t v = 0; v < topo.vertices.size(); ++v) EXPECT_EQ(find(static_cast<int>(v)), find(0));
}

TEST(Embed, DefaultTowerGeometry) {
  const auto spec = validate_spec(spec_nm(3, 3));
  const auto scene = embed_geometry(generate_topology(spec), spec);
  EXPECT_EQ(scene.structural_count(), 12u);
  double top = 0.0;
  for (std::size_t v = 0; v < scene.structural_count(); ++v) {
    const auto& id = scene.topology.vertices[v];
    const auto& p = scene.positions[v];
    EXPECT_NEAR(p.z(), id.level() * 0.045, 1e-15);
    EXPECT_NEAR(std::hypot(p.x(), p.y()), 0.06, 1e-15);
    if (id.level() == 0) {
      EXPECT_EQ(p.z(), 0.0);
    }
    top = std::max(top, p.z());
  }
  EXPECT_NEAR(top, 0.090, 1e-15);
}

TEST(Embed, TopEndsAreTwistedFromBottomEnds) {
  auto s = spec_nm(3, 3);
  s.twist = 0.7;
  const auto spec = validate_spec(s);
  const auto scene = embed_geometry(generate_topology(spec), spec);
  for (const auto& rod : scene.topology.rods) {
    const auto& a = scene.positions[scene.topology.vertex_index(rod.bottom)];
    const auto& b = scene.positions[scene.topology.vertex_index(rod.top)];
    double d = std::atan2(b.y(), b.x()) - std::atan2(a.y(), a.x());
    d = std::remainder(d, 2.0 * std::numbers::pi);
    EXPECT_NEAR(d, 0.7, 1e-12);
  }
}

TEST(Embed, DeterministicAndScaleEquivariant) {
  const auto a = build_scene(spec_nm(4, 6));
  const auto b = build_scene(spec_nm(4, 6));
  ASSERT_EQ(a.positions.size(), b.positions.size());
  for (std::size_t i = 0; i < a.positions.size(); ++i) EXPECT_EQ(a.positions[i], b.positions[i]);

  auto scaled = spec_nm(4, 6);
  scaled.base_radius *= 2.5;
  scaled.layer_height *= 2.5;
  scaled.tendon_radius *= 2.5;
  const auto c = build_scene(scaled);
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    EXPECT_LT((c.positions[i] - 2.5 * a.positions[i]).norm(), 1e-14) << i;
  }
}

TEST(Embed, InteriorNodesInterpolateRods) {
  auto s = spec_nm(3, 3);
  s.rod_segments = 4;
  const auto scene = build_scene(s);
  for (const auto& nodes : scene.rod_nodes) {
    ASSERT_EQ(nodes.size(), 5u);
    const Vec3 a = scene.positions[nodes.front()];
    const Vec3 b = scene.positions[nodes.back()];
    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
      EXPECT_LT((scene.positions[nodes[k]] - (a + (b - a) * (k / 4.0))).norm(), 1e-15);
    }
  }
}

TEST(Route, ThreeTendonsOnDefaultTower) {
  const auto scene = build_scene(spec_nm(3, 3));
  ASSERT_EQ(scene.tendons.size(), 3u);
  EXPECT_EQ(scene.eyelets.size(), 9u);
  EXPECT_EQ(scene.positions.size(), 21u);
  for (const auto& t : scene.tendons) {
    EXPECT_EQ(t.eyelets.size(), 3u);
    EXPECT_NEAR(t.azimuth, 2.0 * std::numbers::pi * t.id / 3.0, 1e-15);
    EXPECT_NEAR(t.natural_length, 2 * 0.045, 1e-12);
    EXPECT_EQ(t.factor, 1.0);
  }
  for (const auto& e : scene.eyelets) {
    EXPECT_EQ(e.links.size(), 3u);
    const auto& p = scene.positions[e.particle];
    EXPECT_NEAR(std::hypot(p.x(), p.y()), 0.04, 1e-15);
    for (std::size_t k = 0; k < e.links.size(); ++k) {
      EXPECT_NEAR((scene.positions[e.links[k]] - p).norm(), e.link_rest[k], 1e-15);
      EXPECT_LT(e.links[k], static_cast<int>(scene.structural_count()));
    }
  }
}

TEST(Route, SixLayerTower) {
  const auto scene = build_scene(spec_nm(3, 6));
  EXPECT_EQ(scene.tendons.size(), 3u);
  EXPECT_EQ(scene.eyelets.size(), 18u);
  for (const auto& t : scene.tendons) {
    EXPECT_EQ(t.eyelets.size() - 1, 5u);
    EXPECT_NEAR(t.natural_length, 5 * 0.045, 1e-12);
  }
}

TEST(Scene, CableRestLengthsCarryPrestress) {
  auto s = spec_nm(3, 3);
  s.cable_prestress = 0.05;
  const auto scene = build_scene(s);
  for (std::size_t c = 0; c < scene.topology.cables.size(); ++c) {
    const auto& cable = scene.topology.cables[c];
    const double len = (scene.positions[scene.topology.vertex_index(cable.a)] -
                        scene.positions[scene.topology.vertex_index(cable.b)]).norm();
    EXPECT_NEAR(scene.cable_rest[c], 0.95 * len, 1e-15);
    EXPECT_EQ(scene.cable_compliance[c], s.compliance.for_cable(cable.cls));
  }
}

TEST(Scene, PlatesAtEndsByDefault) {
  const auto scene = build_scene(spec_nm(3, 6));
  ASSERT_EQ(scene.topology.plates.size(), 2u);
  EXPECT_EQ(scene.topology.plates[0].level, 0);
  EXPECT_EQ(scene.topology.plates[1].level, 5);
  for (const auto& p : scene.topology.plates) EXPECT_EQ(p.members.size(), 3u);
}

TEST(Scene, CableClassNamesRoundTrip) {
  for (auto cls : kAllCableClasses) EXPECT_EQ(cable_class_from_string(to_string(cls)), cls);
  EXPECT_ANY_THROW(cable_class_from_string("bogus"));
}

}  // namespace
}  // namespace tensiforge::structure
