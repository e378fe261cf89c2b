#include "nslf/ingest/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nslf/core/binary_io.hpp"
#include "nslf/core/errors.hpp"

namespace fs = std::filesystem;

namespace nslf {

namespace {

void drop_degenerate(TriangleMesh& mesh, const fs::path& path, MeshLoadReport& report) {
  std::vector<std::array<std::uint32_t, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (mesh.triangle_area(t) > 0.0)
      kept.push_back(mesh.triangles[t]);
    else
      ++report.degenerate_dropped;
  }
  if (report.degenerate_dropped > 0)
    spdlog::warn("{}: dropped {} zero-area triangle(s)", path.string(), report.degenerate_dropped);
  mesh.triangles = std::move(kept);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// OBJ face vertex "i", "i/t", "i//n", "i/t/n"; negative indices are relative.
std::uint32_t parse_face_index(const std::string& token, std::size_t vertex_count, const fs::path& path,
                               std::size_t line_no) {
  const std::string head = token.substr(0, token.find('/'));
  long idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stol(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw DataError(fmt::format("{}:{}: bad face index '{}'", path.string(), line_no, token));
  }
  const long resolved = idx > 0 ? idx - 1 : static_cast<long>(vertex_count) + idx;
  if (idx == 0 || resolved < 0 || resolved >= static_cast<long>(vertex_count))
    throw DataError(fmt::format("{}:{}: face index {} out of range", path.string(), line_no, idx));
  return static_cast<std::uint32_t>(resolved);
}

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

PlyType parse_ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::I8;
  if (name == "uchar" || name == "uint8") return PlyType::U8;
  if (name == "short" || name == "int16") return PlyType::I16;
  if (name == "ushort" || name == "uint16") return PlyType::U16;
  if (name == "int" || name == "int32") return PlyType::I32;
  if (name == "uint" || name == "uint32") return PlyType::U32;
  if (name == "float" || name == "float32") return PlyType::F32;
  if (name == "double" || name == "float64") return PlyType::F64;
  throw DataError("ply: unknown property type '" + name + "'");
}

double read_ply_value(std::istream& is, PlyType t) {
  switch (t) {
    case PlyType::I8: return binio::read<std::int8_t>(is);
    case PlyType::U8: return binio::read<std::uint8_t>(is);
    case PlyType::I16: return binio::read<std::int16_t>(is);
    case PlyType::U16: return binio::read<std::uint16_t>(is);
    case PlyType::I32: return binio::read<std::int32_t>(is);
    case PlyType::U32: return binio::read<std::uint32_t>(is);
    case PlyType::F32: return binio::read<float>(is);
    case PlyType::F64: return binio::read<double>(is);
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

}  // namespace

TriangleMesh load_obj(const fs::path& path, MeshLoadReport* report) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open mesh " + path.string());
  MeshLoadReport local;
  MeshLoadReport& rep = report ? *report : local;
  rep = {};
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::uint32_t> face;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw DataError(fmt::format("{}:{}: malformed vertex", path.string(), line_no));
      mesh.vertices.push_back(Vec3f(Vec3d{x, y, z}));
    } else if (tag == "f") {
      face.clear();
      std::string tok;
      while (ss >> tok) face.push_back(parse_face_index(tok, mesh.vertices.size(), path, line_no));
      if (face.size() < 3) throw DataError(fmt::format("{}:{}: face with fewer than 3 vertices", path.string(), line_no));
      if (face.size() > 3) ++rep.polygons_triangulated;
      for (std::size_t k = 1; k + 1 < face.size(); ++k) mesh.triangles.push_back({face[0], face[k], face[k + 1]});
    } else if (tag == "vt" || tag == "vn" || tag == "g" || tag == "o" || tag == "s" || tag == "usemtl" ||
               tag == "mtllib") {
      continue;
    } else {
      throw DataError(fmt::format("{}:{}: unsupported OBJ statement '{}'", path.string(), line_no, tag));
    }
  }
  drop_degenerate(mesh, path, rep);
  return mesh;
}

TriangleMesh load_ply(const fs::path& path, MeshLoadReport* report) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open mesh " + path.string());
  MeshLoadReport local;
  MeshLoadReport& rep = report ? *report : local;
  rep = {};
  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply") throw DataError(path.string() + ": not a PLY file");
  std::vector<PlyElement> elements;
  bool binary_le = false;
  for (;;) {
    if (!std::getline(is, line)) throw DataError(path.string() + ": truncated PLY header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "end_header") break;
    if (kw == "format") {
      std::string fmt_name;
      ss >> fmt_name;
      binary_le = fmt_name == "binary_little_endian";
      if (!binary_le) throw DataError(path.string() + ": only binary_little_endian PLY is supported");
    } else if (kw == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) throw DataError(path.string() + ": property before element");
      std::string t;
      ss >> t;
      PlyProperty p;
      if (t == "list") {
        std::string ct, it;
        ss >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(ct);
        p.type = parse_ply_type(it);
      } else {
        p.type = parse_ply_type(t);
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (kw == "comment" || kw == "obj_info" || kw.empty()) {
      continue;
    } else {
      throw DataError(path.string() + ": unsupported PLY header line '" + line + "'");
    }
  }
  if (!binary_le) throw DataError(path.string() + ": missing PLY format line");

  TriangleMesh mesh;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      mesh.vertices.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        Vec3d v{};
        for (const auto& p : e.props) {
          if (p.is_list) throw DataError(path.string() + ": list property on vertex element");
          const double val = read_ply_value(is, p.type);
          if (p.name == "x") v.x = val;
          if (p.name == "y") v.y = val;
          if (p.name == "z") v.z = val;
        }
        mesh.vertices.push_back(Vec3f(v));
      }
    } else if (e.name == "face") {
      std::vector<std::uint32_t> face;
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& p : e.props) {
          if (!p.is_list) {
            read_ply_value(is, p.type);
            continue;
          }
          const auto n = static_cast<std::size_t>(read_ply_value(is, p.count_type));
          face.resize(n);
          for (auto& idx : face) {
            const double v = read_ply_value(is, p.type);
            if (v < 0 || v >= static_cast<double>(mesh.vertices.size()))
              throw DataError(fmt::format("{}: face {} index out of range", path.string(), i));
            idx = static_cast<std::uint32_t>(v);
          }
          if (p.name != "vertex_indices" && p.name != "vertex_index") continue;
          if (n < 3) throw DataError(fmt::format("{}: face {} has fewer than 3 vertices", path.string(), i));
          if (n > 3) ++rep.polygons_triangulated;
          for (std::size_t k = 1; k + 1 < n; ++k) mesh.triangles.push_back({face[0], face[k], face[k + 1]});
        }
      }
    } else {
      throw DataError(path.string() + ": unsupported PLY element '" + e.name + "'");
    }
  }
  drop_degenerate(mesh, path, rep);
  return mesh;
}

TriangleMesh load_mesh(const fs::path& path, MeshLoadReport* report) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".obj") return load_obj(path, report);
  if (ext == ".ply") return load_ply(path, report);
  throw DataError("unsupported mesh format: " + path.string());
}

void write_obj(const fs::path& path, const TriangleMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& v : mesh.vertices) os << fmt::format("v {:.9g} {:.9g} {:.9g}\n", v.x, v.y, v.z);
  for (const auto& t : mesh.triangles) os << fmt::format("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1);
  if (!os) throw DataError("write failed: " + path.string());
}

void write_ply(const fs::path& path, const TriangleMesh& mesh) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "ply\nformat binary_little_endian 1.0\n";
  os << "element vertex " << mesh.vertices.size() << "\nproperty float x\nproperty float y\nproperty float z\n";
  os << "element face " << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) {
    binio::write(os, v.x);
    binio::write(os, v.y);
    binio::write(os, v.z);
  }
  for (const auto& t : mesh.triangles) {
    binio::write<std::uint8_t>(os, 3);
    for (auto i : t) binio::write<std::int32_t>(os, static_cast<std::int32_t>(i));
  }
  if (!os) throw DataError("write failed: " + path.string());
}

}  // namespace nslf
