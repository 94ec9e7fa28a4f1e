#include "splatinit/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace splatinit {

namespace {

// On-disk scalars are little-endian; this implementation assumes a
// little-endian host (checked nowhere cheaper than here).
static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const std::string& path,
                const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw std::runtime_error("checkpoint: " + path + ": truncated while reading " + what);
  }
}

void write_f32s(std::ofstream& out, const double* values, size_t n) {
  std::vector<float> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(values[i]);
  write_bytes(out, buf.data(), n * sizeof(float));
}

void read_f32s(std::ifstream& in, double* values, size_t n, const std::string& path,
               const char* what) {
  std::vector<float> buf(n);
  read_bytes(in, buf.data(), n * sizeof(float), path, what);
  for (size_t i = 0; i < n; ++i) values[i] = static_cast<double>(buf[i]);
}

void check_magic(std::ifstream& in, const char expect[4], const std::string& path) {
  char magic[4];
  read_bytes(in, magic, 4, path, "magic");
  if (std::memcmp(magic, expect, 4) != 0) {
    throw std::runtime_error("checkpoint: " + path + ": bad magic, expected " +
                             std::string(expect, 4));
  }
}

constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_field(const VoxelField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  write_bytes(out, "VFLD", 4);
  write_bytes(out, &kVersion, 4);
  for (int k = 0; k < 3; ++k) {
    const std::uint32_t r = static_cast<std::uint32_t>(field.resolution[k]);
    write_bytes(out, &r, 4);
  }
  double bounds[6] = {field.bounds.min[0], field.bounds.min[1], field.bounds.min[2],
                      field.bounds.max[0], field.bounds.max[1], field.bounds.max[2]};
  write_bytes(out, bounds, sizeof(bounds));
  write_f32s(out, field.density.data(), field.density.size());
  write_f32s(out, field.color.data(), field.color.size());
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

VoxelField load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  check_magic(in, "VFLD", path);
  std::uint32_t version = 0;
  read_bytes(in, &version, 4, path, "version");
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: " + path + ": unsupported VFLD version " +
                             std::to_string(version));
  }
  Eigen::Vector3i res;
  for (int k = 0; k < 3; ++k) {
    std::uint32_t r = 0;
    read_bytes(in, &r, 4, path, "resolution");
    res[k] = static_cast<int>(r);
  }
  double bounds[6];
  read_bytes(in, bounds, sizeof(bounds), path, "bounds");
  Aabb box;
  box.min = Vec3(bounds[0], bounds[1], bounds[2]);
  box.max = Vec3(bounds[3], bounds[4], bounds[5]);
  VoxelField field(res, box);
  read_f32s(in, field.density.data(), field.density.size(), path, "density");
  read_f32s(in, field.color.data(), field.color.size(), path, "color");
  return field;
}

void save_scene(const GaussianScene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  write_bytes(out, "GSPL", 4);
  write_bytes(out, &kVersion, 4);
  const std::uint32_t count = static_cast<std::uint32_t>(scene.primitives.size());
  const std::uint32_t degree = static_cast<std::uint32_t>(scene.sh_degree);
  write_bytes(out, &count, 4);
  write_bytes(out, &degree, 4);
  const int coeffs = scene.sh_coeff_count();
  for (const GaussianPrimitive& g : scene.primitives) {
    if (static_cast<int>(g.sh.size()) < coeffs) {
      throw std::runtime_error("checkpoint: primitive SH size below scene degree");
    }
    write_f32s(out, g.mean.data(), 3);
    write_f32s(out, g.log_scale.data(), 3);
    write_f32s(out, g.rotation.data(), 4);
    write_f32s(out, &g.opacity_logit, 1);
    write_f32s(out, g.sh.data(), static_cast<size_t>(coeffs));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

GaussianScene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  check_magic(in, "GSPL", path);
  std::uint32_t version = 0;
  read_bytes(in, &version, 4, path, "version");
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: " + path + ": unsupported GSPL version " +
                             std::to_string(version));
  }
  std::uint32_t count = 0, degree = 0;
  read_bytes(in, &count, 4, path, "primitive count");
  read_bytes(in, &degree, 4, path, "sh degree");
  if (degree > 1) {
    throw std::runtime_error("checkpoint: " + path + ": unsupported sh degree " +
                             std::to_string(degree));
  }
  GaussianScene scene;
  scene.sh_degree = static_cast<int>(degree);
  const size_t coeffs = static_cast<size_t>(scene.sh_coeff_count());
  scene.primitives.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    GaussianPrimitive& g = scene.primitives[i];
    read_f32s(in, g.mean.data(), 3, path, "mean");
    read_f32s(in, g.log_scale.data(), 3, path, "log scale");
    read_f32s(in, g.rotation.data(), 4, path, "rotation");
    read_f32s(in, &g.opacity_logit, 1, path, "opacity");
    g.sh.assign(coeffs, 0.0);
    read_f32s(in, g.sh.data(), coeffs, path, "sh coefficients");
  }
  return scene;
}

}  // namespace splatinit
