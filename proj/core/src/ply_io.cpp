#include "splatinit/ply_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace splatinit {

namespace {

int scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

bool is_float32(const std::string& type) { return type == "float" || type == "float32"; }
bool is_uint8(const std::string& type) { return type == "uchar" || type == "uint8"; }

struct Property {
  std::string type;
  std::string name;
};

[[noreturn]] void header_error(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error("read_ply: " + path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::string& path, bool binary) {
  const size_t n = cloud.positions.size();
  if (n < 1) throw std::invalid_argument("write_ply: empty point cloud");
  if (cloud.colors.size() != n) {
    throw std::invalid_argument("write_ply: positions/colors size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ply: cannot open " + path);

  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << n << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";

  for (size_t i = 0; i < n; ++i) {
    float p[3];
    std::uint8_t c[3];
    for (int k = 0; k < 3; ++k) {
      p[k] = static_cast<float>(cloud.positions[i][k]);
      c[k] = static_cast<std::uint8_t>(
          std::lround(std::clamp(cloud.colors[i][k], 0.0, 1.0) * 255.0));
    }
    if (binary) {
      out.write(reinterpret_cast<const char*>(p), sizeof(p));
      out.write(reinterpret_cast<const char*>(c), sizeof(c));
    } else {
      char line[128];
      std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %d %d %d\n", p[0], p[1], p[2],
                    static_cast<int>(c[0]), static_cast<int>(c[1]), static_cast<int>(c[2]));
      out << line;
    }
  }
  if (!out) throw std::runtime_error("write_ply: write failed for " + path);
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ply: cannot open " + path);

  int line_no = 0;
  auto next_line = [&](std::string& line) {
    if (!std::getline(in, line)) header_error(path, line_no, "unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
  };

  std::string line;
  next_line(line);
  if (line != "ply") header_error(path, line_no, "missing 'ply' magic");

  bool binary = false;
  bool have_format = false;
  std::size_t vertex_count = 0;
  bool in_vertex_element = false;
  bool seen_vertex_element = false;
  std::vector<Property> props;

  for (;;) {
    next_line(line);
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "comment" || word.empty()) continue;
    if (word == "format") {
      std::string fmt, version;
      ss >> fmt >> version;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        header_error(path, line_no, "unsupported format '" + fmt + "'");
      }
      have_format = true;
    } else if (word == "element") {
      std::string name;
      long long count = -1;
      ss >> name >> count;
      if (count < 0) header_error(path, line_no, "bad element count");
      in_vertex_element = name == "vertex";
      if (in_vertex_element) {
        vertex_count = static_cast<std::size_t>(count);
        seen_vertex_element = true;
      } else if (count != 0) {
        header_error(path, line_no, "unsupported element '" + name + "'");
      }
    } else if (word == "property") {
      if (!in_vertex_element) continue;
      Property p;
      ss >> p.type >> p.name;
      if (p.type == "list") header_error(path, line_no, "list properties are not supported");
      if (scalar_size(p.type) == 0) {
        header_error(path, line_no, "unknown property type '" + p.type + "'");
      }
      props.push_back(p);
    } else if (word == "end_header") {
      break;
    } else {
      header_error(path, line_no, "unknown header keyword '" + word + "'");
    }
  }
  if (!have_format) header_error(path, line_no, "missing format line");
  if (!seen_vertex_element) header_error(path, line_no, "missing vertex element");
  if (vertex_count == 0) header_error(path, line_no, "vertex element is empty");

  int idx_pos[3] = {-1, -1, -1};
  int idx_col[3] = {-1, -1, -1};
  const char* pos_names[3] = {"x", "y", "z"};
  const char* col_names[3] = {"red", "green", "blue"};
  for (size_t i = 0; i < props.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (props[i].name == pos_names[k]) {
        if (!is_float32(props[i].type)) {
          header_error(path, line_no, std::string("property ") + pos_names[k] +
                                          " must be float32, is " + props[i].type);
        }
        idx_pos[k] = static_cast<int>(i);
      }
      if (props[i].name == col_names[k]) {
        if (!is_uint8(props[i].type)) {
          header_error(path, line_no, std::string("property ") + col_names[k] +
                                          " must be uchar, is " + props[i].type);
        }
        idx_col[k] = static_cast<int>(i);
      }
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (idx_pos[k] < 0) {
      header_error(path, line_no, std::string("missing position property ") + pos_names[k]);
    }
    if (idx_col[k] < 0) {
      header_error(path, line_no, std::string("missing color property ") + col_names[k]);
    }
  }

  PointCloud cloud;
  cloud.positions.resize(vertex_count);
  cloud.colors.resize(vertex_count);

  auto vertex_error = [&](std::size_t v) {
    throw std::runtime_error("read_ply: " + path + ": unexpected end of data at vertex " +
                             std::to_string(v) + " of " + std::to_string(vertex_count));
  };

  if (binary) {
    size_t record = 0;
    std::vector<size_t> offsets(props.size());
    for (size_t i = 0; i < props.size(); ++i) {
      offsets[i] = record;
      record += static_cast<size_t>(scalar_size(props[i].type));
    }
    std::vector<char> buf(record);
    for (std::size_t v = 0; v < vertex_count; ++v) {
      in.read(buf.data(), static_cast<std::streamsize>(record));
      if (static_cast<size_t>(in.gcount()) != record) vertex_error(v);
      for (int k = 0; k < 3; ++k) {
        float f;
        std::memcpy(&f, buf.data() + offsets[static_cast<size_t>(idx_pos[k])], 4);
        cloud.positions[v][k] = static_cast<double>(f);
        std::uint8_t c;
        std::memcpy(&c, buf.data() + offsets[static_cast<size_t>(idx_col[k])], 1);
        cloud.colors[v][k] = c / 255.0;
      }
    }
  } else {
    std::vector<double> values(props.size());
    for (std::size_t v = 0; v < vertex_count; ++v) {
      if (!std::getline(in, line)) vertex_error(v);
      std::istringstream ss(line);
      for (size_t i = 0; i < props.size(); ++i) {
        if (!(ss >> values[i])) vertex_error(v);
      }
      for (int k = 0; k < 3; ++k) {
        cloud.positions[v][k] =
            static_cast<double>(static_cast<float>(values[static_cast<size_t>(idx_pos[k])]));
        const double c = values[static_cast<size_t>(idx_col[k])];
        if (c < 0.0 || c > 255.0) {
          throw std::runtime_error("read_ply: " + path + ": color out of range at vertex " +
                                   std::to_string(v));
        }
        cloud.colors[v][k] = c / 255.0;
      }
    }
  }
  return cloud;
}

}  // namespace splatinit
