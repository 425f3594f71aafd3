#pragma once

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tactile/geometry.hpp"

namespace tactile {

namespace detail {

inline void append_float(std::string& out, float v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  throw Error(ErrorCode::Parse, "unsupported PLY property type '" + t + "'");
}

inline double ply_read_binary(const char* p, const std::string& t) {
  auto load = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return load(std::int8_t{});
  if (t == "uchar" || t == "uint8") return load(std::uint8_t{});
  if (t == "short" || t == "int16") return load(std::int16_t{});
  if (t == "ushort" || t == "uint16") return load(std::uint16_t{});
  if (t == "int" || t == "int32") return load(std::int32_t{});
  if (t == "uint" || t == "uint32") return load(std::uint32_t{});
  if (t == "float" || t == "float32") return load(float{});
  return load(double{});
}

}  // namespace detail

/// ASCII PLY with float x, y, z and, when present, nx, ny, nz.
inline void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  const bool normals = cloud.has_normals();
  std::string out;
  out.reserve(64 * cloud.size() + 256);
  out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (normals) out += "property float nx\nproperty float ny\nproperty float nz\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    for (int a = 0; a < 3; ++a) {
      if (a) out += ' ';
      detail::append_float(out, static_cast<float>(p[a]));
    }
    if (normals) {
      for (int a = 0; a < 3; ++a) {
        out += ' ';
        detail::append_float(out, static_cast<float>(cloud.normals[i][a]));
      }
    }
    out += '\n';
  }
  std::ofstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(static_cast<bool>(file), ErrorCode::Io, "failed writing " + path.string());
}

/// Reads the vertex element of an ASCII or binary little-endian PLY file.
inline PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::MissingFile, "cannot open " + path.string(), {path.string()});

  std::string line;
  std::getline(file, line);
  require(line.rfind("ply", 0) == 0, ErrorCode::Parse, path.string() + " is not a PLY file");
  std::string format;
  std::vector<detail::PlyElement> elements;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      ss >> format;
    } else if (word == "element") {
      detail::PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      require(!elements.empty(), ErrorCode::Parse, "PLY property before element");
      detail::PlyProperty prop;
      std::string t;
      ss >> t;
      if (t == "list") {
        std::string count_t, item_t;
        ss >> count_t >> item_t >> prop.name;
        prop.is_list = true;
        prop.type = count_t + " " + item_t;
      } else {
        prop.type = t;
        ss >> prop.name;
      }
      elements.back().props.push_back(prop);
    } else if (word == "end_header") {
      break;
    }
  }
  require(format == "ascii" || format == "binary_little_endian", ErrorCode::Parse,
          "unsupported PLY format '" + format + "'");
  const bool ascii = format == "ascii";

  PointCloud cloud;
  for (const auto& element : elements) {
    if (element.name != "vertex") {
      // Elements ahead of the vertices must be skippable.
      require(cloud.empty(), ErrorCode::Parse, "unexpected PLY element before vertex");
      for (const auto& prop : element.props)
        require(!prop.is_list || ascii, ErrorCode::Parse, "list element before vertex in binary PLY");
      if (ascii) {
        for (std::size_t i = 0; i < element.count; ++i) std::getline(file, line);
      } else {
        std::size_t stride = 0;
        for (const auto& prop : element.props) stride += detail::ply_type_size(prop.type);
        file.seekg(static_cast<std::streamoff>(stride * element.count), std::ios::cur);
      }
      continue;
    }

    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
    std::vector<std::size_t> offsets;
    std::size_t stride = 0;
    for (std::size_t k = 0; k < element.props.size(); ++k) {
      const auto& prop = element.props[k];
      require(!prop.is_list, ErrorCode::Parse, "list property in PLY vertex element");
      offsets.push_back(stride);
      stride += detail::ply_type_size(prop.type);
      const int idx = static_cast<int>(k);
      if (prop.name == "x") ix = idx;
      if (prop.name == "y") iy = idx;
      if (prop.name == "z") iz = idx;
      if (prop.name == "nx") inx = idx;
      if (prop.name == "ny") iny = idx;
      if (prop.name == "nz") inz = idx;
    }
    require(ix >= 0 && iy >= 0 && iz >= 0, ErrorCode::Parse, "PLY vertex element lacks x, y, z");
    const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
    cloud.reserve(element.count, normals);

    std::vector<double> values(element.props.size());
    std::vector<char> raw(stride);
    for (std::size_t i = 0; i < element.count; ++i) {
      if (ascii) {
        require(static_cast<bool>(std::getline(file, line)), ErrorCode::Parse, "truncated PLY body");
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (auto& v : values) {
          while (p < end && (*p == ' ' || *p == '\t')) ++p;
          const auto res = std::from_chars(p, end, v);
          require(res.ec == std::errc(), ErrorCode::Parse, "bad number in PLY body");
          p = res.ptr;
        }
      } else {
        file.read(raw.data(), static_cast<std::streamsize>(stride));
        require(static_cast<bool>(file), ErrorCode::Parse, "truncated PLY body");
        for (std::size_t k = 0; k < values.size(); ++k)
          values[k] = detail::ply_read_binary(raw.data() + offsets[k], element.props[k].type);
      }
      const Vec3 p(values[ix], values[iy], values[iz]);
      if (normals) {
        Vec3 n(values[inx], values[iny], values[inz]);
        const double len = n.norm();
        cloud.push_back(p, len > 0 ? Vec3(n / len) : Vec3::UnitZ());
      } else {
        cloud.push_back(p);
      }
    }
    break;
  }
  return cloud;
}

}  // namespace tactile
