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

#include "tensiforge/export.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "tensiforge/physics.hpp"

namespace tensiforge::exporter {

static_assert(std::endian::native == std::endian::little, "STL writer assumes a little-endian host");

using nlohmann::json;
using structure::Scene;
using structure::VertexId;

namespace {

constexpr std::size_t kStlHeader = 80;
constexpr std::size_t kStlRecord = 50;
constexpr int kFormatVersion = 1;

// Vertices of a convex polygon sorted counter-clockwise about `normal`.
std::vector<Vec3> order_polygon(std::vector<Vec3> pts, const Vec3& normal) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Vec3 u = (pts[0] - c);
  u -= normal * normal.dot(u);
  u.normalize();
  const Vec3 v = normal.cross(u);
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 d = pts[i] - c;
    keyed.emplace_back(std::atan2(d.dot(v), d.dot(u)), i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<Vec3> out;
  for (const auto& [angle, i] : keyed) out.push_back(pts[i]);
  return out;
}

// Closed prism between two rings; ring vertices run counter-clockwise seen
// from the side `top` lies on.
void prism(const std::vector<Vec3>& bottom, const std::vector<Vec3>& top, std::vector<Triangle>& out) {
  const std::size_t k = bottom.size();
  for (std::size_t i = 1; i + 1 < k; ++i) {
    out.push_back({bottom[0], bottom[i + 1], bottom[i]});
    out.push_back({top[0], top[i], top[i + 1]});
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = (i + 1) % k;
    out.push_back({bottom[i], bottom[j], top[j]});
    out.push_back({bottom[i], top[j], top[i]});
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

double mm(double meters) { return round_sig9(meters * 1000.0); }

json vec_mm(const Vec3& p) { return json::array({mm(p.x()), mm(p.y()), mm(p.z())}); }

// ---- import helpers -------------------------------------------------------

struct Reader {
  const json& node;
  std::string path;

  Reader at(const std::string& key) const {
    if (!node.is_object()) throw SchemaError(path, "expected an object");
    const auto it = node.find(key);
    if (it == node.end()) throw SchemaError(path + "." + key, "missing required key");
    return {*it, path + "." + key};
  }
  bool has(const std::string& key) const { return node.is_object() && node.contains(key); }
  Reader at(std::size_t i) const { return {node.at(i), path + "[" + std::to_string(i) + "]"}; }
  std::size_t size() const {
    if (!node.is_array()) throw SchemaError(path, "expected an array");
    return node.size();
  }
  double number() const {
    if (!node.is_number()) throw SchemaError(path, "expected a number");
    const double v = node.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
    return v;
  }
  int integer() const {
    if (!node.is_number_integer()) throw SchemaError(path, "expected an integer");
    const auto v = node.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw SchemaError(path, "integer out of range");
    }
    return static_cast<int>(v);
  }
  int index(std::size_t bound) const {
    const int v = integer();
    if (v < 0 || static_cast<std::size_t>(v) >= bound) {
      throw SchemaError(path, "index " + std::to_string(v) + " out of range [0, " + std::to_string(bound) + ")");
    }
    return v;
  }
  std::string string() const {
    if (!node.is_string()) throw SchemaError(path, "expected a string");
    return node.get<std::string>();
  }
  bool boolean() const {
    if (!node.is_boolean()) throw SchemaError(path, "expected a boolean");
    return node.get<bool>();
  }
  Vec3 point_mm() const {
    if (size() != 3) throw SchemaError(path, "expected [x, y, z]");
    return Vec3(at(0).number(), at(1).number(), at(2).number()) / 1000.0;
  }
};

}  // namespace

std::string_view to_string(PartKind kind) {
  switch (kind) {
    case PartKind::kPlate: return "plate";
    case PartKind::kRod: return "rod";
    case PartKind::kPin: return "pin";
  }
  return "unknown";
}

double round_sig9(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? 0.0 : v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

void FabConfig::validate() const {
  if (!(plate_thickness_mm > 0.0) || !std::isfinite(plate_thickness_mm)) {
    throw RangeError("plate thickness must be > 0 mm");
  }
  if (!(rod_radius_mm > 0.0) || !std::isfinite(rod_radius_mm)) throw RangeError("rod radius must be > 0 mm");
  if (rod_sides < 3) throw RangeError("rod_sides must be >= 3");
}

void check_part(const PartMesh& part) {
  if (part.triangles.size() < 4) {
    throw DegenerateGeometry("part " + part.id + " has " + std::to_string(part.triangles.size()) +
                             " triangles; a closed solid needs at least 4");
  }
  for (const Triangle& t : part.triangles) {
    for (const Vec3& v : t) {
      if (!v.allFinite()) throw DegenerateGeometry("part " + part.id + " has a non-finite vertex");
    }
  }
}

std::vector<PartMesh> decompose_parts(const Scene& scene, const FabConfig& fab) {
  fab.validate();
  const auto& topo = scene.topology;
  if (scene.positions.size() < topo.vertices.size()) {
    throw DegenerateGeometry("scene has no positions for its vertices");
  }
  const auto pos_mm = [&](const VertexId& v) { return Vec3(scene.positions[topo.vertex_index(v)] * 1000.0); };
  std::vector<PartMesh> parts;

  for (const auto& plate : topo.plates) {
    PartMesh part;
    part.id = "plate-L" + std::to_string(plate.level);
    part.kind = PartKind::kPlate;
    part.source = "plate level " + std::to_string(plate.level);
    std::vector<Vec3> pts;
    for (const auto& v : plate.members) pts.push_back(pos_mm(v));
    if (pts.size() < 3) throw DegenerateGeometry(part.id + " has fewer than 3 members");
    const physics::Plane plane = physics::fit_plane(pts);
    if (!(plane.spread_ratio > 1e-9)) throw DegenerateGeometry(part.id + " has zero area");
    const Vec3 n = plane.normal;
    std::vector<Vec3> bottom = order_polygon(pts, n);
    double area = 0.0;
    for (std::size_t i = 1; i + 1 < bottom.size(); ++i) {
      area += 0.5 * (bottom[i] - bottom[0]).cross(bottom[i + 1] - bottom[0]).norm();
    }
    if (!(area > 1e-9)) throw DegenerateGeometry(part.id + " has zero area");
    std::vector<Vec3> top;
    for (const Vec3& p : bottom) top.push_back(p + n * fab.plate_thickness_mm);
    prism(bottom, top, part.triangles);
    parts.push_back(std::move(part));
  }

  constexpr double kTwoPi = 6.28318530717958647692;
  for (const auto& rod : topo.rods) {
    PartMesh part;
    part.id = "rod-S" + std::to_string(rod.bottom.set) + "-I" + std::to_string(rod.bottom.strut);
    part.kind = PartKind::kRod;
    part.source = to_string(rod.bottom) + "-" + to_string(rod.top);
    const Vec3 a = pos_mm(rod.bottom);
    const Vec3 b = pos_mm(rod.top);
    const Vec3 axis = b - a;
    if (!(axis.norm() > 1e-9)) throw DegenerateGeometry(part.id + " has zero length");
    const Vec3 w = axis.normalized();
    const Vec3 helper = std::abs(w.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    const Vec3 u = w.cross(helper).normalized();
    const Vec3 v = w.cross(u);
    std::vector<Vec3> bottom, top;
    for (int k = 0; k < fab.rod_sides; ++k) {
      const double t = kTwoPi * k / fab.rod_sides;
      const Vec3 r = fab.rod_radius_mm * (std::cos(t) * u + std::sin(t) * v);
      bottom.push_back(a + r);
      top.push_back(b + r);
    }
    prism(bottom, top, part.triangles);
    parts.push_back(std::move(part));
  }
  for (const auto& p : parts) check_part(p);
  return parts;
}

std::string export_stl(const PartMesh& part) {
  check_part(part);
  if (part.triangles.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw TooManyTriangles("part " + part.id + " has more triangles than binary STL can count");
  }
  std::string out;
  out.reserve(kStlHeader + 4 + kStlRecord * part.triangles.size());
  std::string header = "tensiforge " + part.id;
  header.resize(kStlHeader, '\0');
  out += header;
  put_u32(out, static_cast<std::uint32_t>(part.triangles.size()));
  for (const Triangle& t : part.triangles) {
    std::array<Eigen::Vector3f, 3> f;
    for (int i = 0; i < 3; ++i) f[i] = t[i].cast<float>();
    Eigen::Vector3f n = (f[1] - f[0]).cross(f[2] - f[0]);
    const float len = n.norm();
    n = len > 0.0f ? Eigen::Vector3f(n / len) : Eigen::Vector3f::Zero();
    for (int i = 0; i < 3; ++i) put_f32(out, n[i]);
    for (const auto& p : f) {
      for (int i = 0; i < 3; ++i) put_f32(out, p[i]);
    }
    out.append(2, '\0');
  }
  return out;
}

StlFile parse_stl(std::string_view bytes) {
  if (bytes.size() < kStlHeader + 4) throw ParseError("STL shorter than its 84-byte preamble");
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + kStlHeader, 4);
  const std::size_t expected = kStlHeader + 4 + kStlRecord * static_cast<std::size_t>(count);
  if (bytes.size() != expected) {
    throw ParseError("STL size " + std::to_string(bytes.size()) + " does not match " +
                     std::to_string(count) + " triangles (" + std::to_string(expected) + " bytes)");
  }
  StlFile out;
  out.header = std::string(bytes.substr(0, kStlHeader));
  out.header.erase(out.header.find_last_not_of('\0') + 1);
  out.triangles.resize(count);
  const char* p = bytes.data() + kStlHeader + 4;
  for (auto& t : out.triangles) {
    std::memcpy(t.normal.data(), p, 12);
    for (int i = 0; i < 3; ++i) std::memcpy(t.vertices[i].data(), p + 12 + 12 * i, 12);
    p += kStlRecord;
  }
  return out;
}

std::vector<std::filesystem::path> write_parts(const std::vector<PartMesh>& parts,
                                               const std::filesystem::path& dir,
                                               const std::string& scene_name) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (const auto& part : parts) {
    const auto path = dir / (scene_name + "_" + part.id + ".stl");
    const std::string bytes = export_stl(part);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw InvalidScene("cannot write " + path.string());
    out.push_back(path);
  }
  return out;
}

std::string export_scene_json(const Scene& scene) {
  const auto& spec = scene.spec;
  const auto& topo = scene.topology;
  json doc;
  doc["format"] = "tensiforge-scene";
  doc["version"] = kFormatVersion;

  json plate_levels = json::array();
  for (int l : spec.plate_levels) plate_levels.push_back(l);
  const auto& c = spec.compliance;
  doc["spec"] = {
      {"n", spec.n},
      {"m", spec.m},
      {"base_radius_mm", mm(spec.base_radius)},
      {"layer_height_mm", mm(spec.layer_height)},
      {"twist_rad", spec.twist ? json(round_sig9(*spec.twist)) : json(nullptr)},
      {"rod_segments", spec.rod_segments},
      {"tendon_count", spec.tendon_count},
      {"tendon_radius_mm", mm(spec.tendon_radius)},
      {"particle_mass_kg", round_sig9(spec.particle_mass)},
      {"cable_prestress", round_sig9(spec.cable_prestress)},
      {"plate_levels", plate_levels},
      {"compliance",
       {{"rod", round_sig9(c.rod)},
        {"bend", round_sig9(c.bend)},
        {"plate", round_sig9(c.plate)},
        {"link", round_sig9(c.link)},
        {"horizontal", round_sig9(c.horizontal)},
        {"saddle", round_sig9(c.saddle)},
        {"vertical", round_sig9(c.vertical)},
        {"diagonal", round_sig9(c.diagonal)},
        {"tendon", round_sig9(c.tendon)}}},
  };

  json vertices = json::array();
  for (std::size_t i = 0; i < topo.vertices.size(); ++i) {
    const auto& v = topo.vertices[i];
    vertices.push_back({{"id", to_string(v)},
                        {"set", v.set},
                        {"strut", v.strut},
                        {"end", v.end},
                        {"level", v.level()},
                        {"pos_mm", vec_mm(scene.positions.at(i))}});
  }
  doc["vertices"] = std::move(vertices);

  json rods = json::array();
  for (std::size_t r = 0; r < topo.rods.size(); ++r) {
    const auto& rod = topo.rods[r];
    json interior = json::array();
    const auto& nodes = scene.rod_nodes.at(r);
    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
      interior.push_back({{"particle", nodes[k]}, {"pos_mm", vec_mm(scene.positions.at(nodes[k]))}});
    }
    rods.push_back({{"id", "rod-S" + std::to_string(rod.bottom.set) + "-I" + std::to_string(rod.bottom.strut)},
                    {"bottom", to_string(rod.bottom)},
                    {"top", to_string(rod.top)},
                    {"interior", std::move(interior)}});
  }
  doc["rods"] = std::move(rods);

  json plates = json::array();
  for (const auto& plate : topo.plates) {
    json members = json::array();
    for (const auto& v : plate.members) members.push_back(to_string(v));
    plates.push_back({{"id", "plate-L" + std::to_string(plate.level)},
                      {"level", plate.level},
                      {"members", std::move(members)},
                      {"rigid", plate.rigid}});
  }
  doc["plates"] = std::move(plates);

  json cables = json::array();
  for (std::size_t k = 0; k < topo.cables.size(); ++k) {
    const auto& cable = topo.cables[k];
    cables.push_back({{"a", to_string(cable.a)},
                      {"b", to_string(cable.b)},
                      {"class", std::string(to_string(cable.cls))},
                      {"rest_mm", mm(scene.cable_rest.at(k))},
                      {"compliance", round_sig9(scene.cable_compliance.at(k))}});
  }
  doc["cables"] = std::move(cables);

  json eyelets = json::array();
  for (const auto& e : scene.eyelets) {
    json link_rest = json::array();
    for (double r : e.link_rest) link_rest.push_back(mm(r));
    eyelets.push_back({{"particle", e.particle},
                       {"tendon", e.tendon},
                       {"level", e.level},
                       {"pos_mm", vec_mm(scene.positions.at(e.particle))},
                       {"links", e.links},
                       {"link_rest_mm", std::move(link_rest)}});
  }
  doc["eyelets"] = std::move(eyelets);

  json tendons = json::array();
  for (std::size_t k = 0; k < scene.tendons.size(); ++k) {
    const auto& t = scene.tendons[k];
    json levels = json::array();
    for (const auto& route : topo.tendon_routes) {
      if (route.id == t.id) levels = route.levels;
    }
    tendons.push_back({{"id", t.id},
                       {"segment", t.segment},
                       {"azimuth_rad", round_sig9(t.azimuth)},
                       {"levels", std::move(levels)},
                       {"segments", t.eyelets},
                       {"natural_mm", mm(t.natural_length)},
                       {"factor", round_sig9(t.factor)}});
  }
  doc["tendons"] = std::move(tendons);

  json provenance = json::object();
  for (const auto& [k, v] : scene.provenance) provenance[k] = v;
  doc["provenance"] = std::move(provenance);
  return doc.dump(2) + "\n";
}

Scene import_scene_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("not valid JSON: ") + e.what());
  }
  const Reader root{doc, "$"};
  if (!doc.is_object()) throw SchemaError("$", "expected an object");
  if (root.has("version") && root.at("version").integer() != kFormatVersion) {
    throw SchemaError("$.version", "unsupported scene version");
  }

  Scene scene;
  auto& spec = scene.spec;
  {
    const Reader s = root.at("spec");
    spec.n = s.at("n").integer();
    spec.m = s.at("m").integer();
    spec.base_radius = s.at("base_radius_mm").number() / 1000.0;
    spec.layer_height = s.at("layer_height_mm").number() / 1000.0;
    if (s.has("twist_rad") && !s.at("twist_rad").node.is_null()) spec.twist = s.at("twist_rad").number();
    spec.rod_segments = s.at("rod_segments").integer();
    spec.tendon_count = s.at("tendon_count").integer();
    spec.tendon_radius = s.at("tendon_radius_mm").number() / 1000.0;
    spec.particle_mass = s.at("particle_mass_kg").number();
    if (s.has("cable_prestress")) spec.cable_prestress = s.at("cable_prestress").number();
    if (s.has("plate_levels")) {
      const Reader pl = s.at("plate_levels");
      for (std::size_t i = 0; i < pl.size(); ++i) spec.plate_levels.push_back(pl.at(i).integer());
    }
    if (s.has("compliance")) {
      const Reader c = s.at("compliance");
      auto& cs = spec.compliance;
      const std::pair<const char*, double*> fields[] = {
          {"rod", &cs.rod},         {"bend", &cs.bend},         {"plate", &cs.plate},
          {"link", &cs.link},       {"horizontal", &cs.horizontal}, {"saddle", &cs.saddle},
          {"vertical", &cs.vertical}, {"diagonal", &cs.diagonal}, {"tendon", &cs.tendon}};
      for (const auto& [name, slot] : fields) {
        if (c.has(name)) *slot = c.at(name).number();
      }
    }
    try {
      structure::validate_spec(spec);
    } catch (const Error& e) {
      throw SchemaError("$.spec", e.what());
    }
  }

  auto& topo = scene.topology;
  topo.n = spec.n;
  topo.m = spec.m;
  std::map<std::string, VertexId> by_id;
  {
    const Reader vs = root.at("vertices");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const Reader v = vs.at(i);
      VertexId id{v.at("set").integer(), v.at("strut").integer(), v.at("end").integer()};
      const std::size_t expected = static_cast<std::size_t>((id.set * spec.n + id.strut) * 2 + id.end);
      if (id.set < 0 || id.strut < 0 || id.strut >= spec.n || id.end < 0 || id.end > 1 || expected != i) {
        throw SchemaError(v.path, "vertex out of (set, strut, end) order");
      }
      if (v.at("id").string() != to_string(id)) throw SchemaError(v.path + ".id", "does not match set/strut/end");
      by_id[to_string(id)] = id;
      topo.vertices.push_back(id);
      scene.positions.push_back(v.at("pos_mm").point_mm());
    }
    if (topo.vertices.size() != static_cast<std::size_t>(2 * spec.n * (spec.m - 1))) {
      throw SchemaError(vs.path, "vertex count does not match n and m");
    }
  }
  const auto vertex_ref = [&](const Reader& r) {
    const auto it = by_id.find(r.string());
    if (it == by_id.end()) throw SchemaError(r.path, "unknown vertex id");
    return it->second;
  };

  {
    const Reader rs = root.at("rods");
    std::vector<std::vector<std::pair<int, Vec3>>> interiors;
    for (std::size_t r = 0; r < rs.size(); ++r) {
      const Reader rod = rs.at(r);
      topo.rods.push_back({vertex_ref(rod.at("bottom")), vertex_ref(rod.at("top"))});
      interiors.emplace_back();
      if (rod.has("interior")) {
        const Reader in = rod.at("interior");
        for (std::size_t k = 0; k < in.size(); ++k) {
          interiors.back().emplace_back(in.at(k).at("particle").integer(), in.at(k).at("pos_mm").point_mm());
        }
      }
    }
    for (std::size_t r = 0; r < topo.rods.size(); ++r) {
      std::vector<int> nodes{static_cast<int>(topo.vertex_index(topo.rods[r].bottom))};
      for (std::size_t k = 0; k < interiors[r].size(); ++k) {
        const auto& [particle, pos] = interiors[r][k];
        if (particle != static_cast<int>(scene.positions.size())) {
          throw SchemaError(rs.at(r).path + ".interior[" + std::to_string(k) + "].particle",
                            "interior nodes must follow the vertices in rod order");
        }
        nodes.push_back(particle);
        scene.positions.push_back(pos);
      }
      nodes.push_back(static_cast<int>(topo.vertex_index(topo.rods[r].top)));
      scene.rod_nodes.push_back(std::move(nodes));
    }
  }

  {
    const Reader ps = root.at("plates");
    for (std::size_t p = 0; p < ps.size(); ++p) {
      const Reader plate = ps.at(p);
      structure::Plate out;
      out.level = plate.at("level").integer();
      const Reader members = plate.at("members");
      for (std::size_t k = 0; k < members.size(); ++k) out.members.push_back(vertex_ref(members.at(k)));
      if (plate.has("rigid")) out.rigid = plate.at("rigid").boolean();
      topo.plates.push_back(std::move(out));
    }
  }

  {
    const Reader cs = root.at("cables");
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const Reader c = cs.at(k);
      structure::Cable cable;
      cable.a = vertex_ref(c.at("a"));
      cable.b = vertex_ref(c.at("b"));
      try {
        cable.cls = structure::cable_class_from_string(c.at("class").string());
      } catch (const ParseError&) {
        throw SchemaError(c.path + ".class", "unknown cable class");
      }
      topo.cables.push_back(cable);
      const double rest = c.at("rest_mm").number() / 1000.0;
      const double compliance = c.at("compliance").number();
      if (!(rest > 0.0)) throw SchemaError(c.path + ".rest_mm", "must be > 0");
      if (compliance < 0.0) throw SchemaError(c.path + ".compliance", "must be >= 0");
      scene.cable_rest.push_back(rest);
      scene.cable_compliance.push_back(compliance);
    }
  }

  {
    const Reader es = root.at("eyelets");
    for (std::size_t k = 0; k < es.size(); ++k) {
      const Reader e = es.at(k);
      structure::Eyelet eyelet;
      eyelet.particle = e.at("particle").integer();
      if (eyelet.particle != static_cast<int>(scene.positions.size())) {
        throw SchemaError(e.path + ".particle", "eyelets must follow the rod nodes in order");
      }
      eyelet.tendon = e.at("tendon").integer();
      eyelet.level = e.at("level").integer();
      scene.positions.push_back(e.at("pos_mm").point_mm());
      const Reader links = e.at("links");
      for (std::size_t i = 0; i < links.size(); ++i) eyelet.links.push_back(links.at(i).index(topo.vertices.size()));
      const Reader rest = e.at("link_rest_mm");
      if (rest.size() != eyelet.links.size()) throw SchemaError(rest.path, "needs one rest length per link");
      for (std::size_t i = 0; i < rest.size(); ++i) eyelet.link_rest.push_back(rest.at(i).number() / 1000.0);
      scene.eyelets.push_back(std::move(eyelet));
    }
  }

  {
    const Reader ts = root.at("tendons");
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const Reader t = ts.at(k);
      structure::Tendon tendon;
      tendon.id = t.at("id").integer();
      tendon.segment = t.at("segment").integer();
      tendon.azimuth = t.at("azimuth_rad").number();
      const Reader segs = t.at("segments");
      for (std::size_t i = 0; i < segs.size(); ++i) tendon.eyelets.push_back(segs.at(i).index(scene.eyelets.size()));
      tendon.natural_length = t.at("natural_mm").number() / 1000.0;
      tendon.factor = t.at("factor").number();
      if (!(tendon.natural_length > 0.0)) throw SchemaError(t.path + ".natural_mm", "must be > 0");
      if (!(tendon.factor > 0.0)) throw SchemaError(t.path + ".factor", "must be > 0");
      structure::TendonRoute route{tendon.id, tendon.segment, tendon.azimuth, {}};
      if (t.has("levels")) {
        const Reader lv = t.at("levels");
        for (std::size_t i = 0; i < lv.size(); ++i) route.levels.push_back(lv.at(i).integer());
      }
      topo.tendon_routes.push_back(std::move(route));
      scene.tendons.push_back(std::move(tendon));
    }
  }

  if (root.has("provenance")) {
    const Reader p = root.at("provenance");
    if (!p.node.is_object()) throw SchemaError(p.path, "expected an object");
    for (const auto& [k, v] : p.node.items()) {
      scene.provenance[k] = Reader{v, p.path + "." + k}.string();
    }
  }
  return scene;
}

}  // namespace tensiforge::exporter
