// SPDX-License-Identifier: Apache-2.0
// Image quality metrics (PSNR, windowed structural similarity with analytic
// gradients) and every on-disk format: PNG images, PLY point clouds, the
// binary field/scene checkpoints, and dataset directories.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "splatinit/checkpoint.hpp"
#include "splatinit/dataset.hpp"
#include "splatinit/field.hpp"
#include "splatinit/geometry.hpp"
#include "splatinit/image_io.hpp"
#include "splatinit/metrics.hpp"
#include "splatinit/ply_io.hpp"
#include "splatinit/rng.hpp"
#include "splatinit/splat.hpp"

using namespace splatinit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "splatinit_io_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Image random_image(int w, int h, int c, std::uint64_t seed) {
  Image img(w, h, c);
  Rng rng(seed);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

// Independent reimplementation of the windowed similarity index: explicit 2D
// Gaussian windows, renormalized by the in-bounds mass at image borders.
double brute_force_ssim(const Image& a, const Image& b) {
  constexpr int kHalf = 5;
  double taps[11];
  double tap_sum = 0.0;
  for (int k = 0; k < 11; ++k) {
    const double d = k - kHalf;
    taps[k] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    tap_sum += taps[k];
  }
  for (double& t : taps) t /= tap_sum;

  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      for (int c = 0; c < a.channels; ++c) {
        double w_sum = 0.0, ma = 0.0, mb = 0.0, eaa = 0.0, ebb = 0.0, eab = 0.0;
        for (int dy = -kHalf; dy <= kHalf; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= a.height) continue;
          for (int dx = -kHalf; dx <= kHalf; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= a.width) continue;
            const double w = taps[dy + kHalf] * taps[dx + kHalf];
            const double va = a.at(xx, yy, c), vb = b.at(xx, yy, c);
            w_sum += w;
            ma += w * va;
            mb += w * vb;
            eaa += w * va * va;
            ebb += w * vb * vb;
            eab += w * va * vb;
          }
        }
        ma /= w_sum;
        mb /= w_sum;
        eaa /= w_sum;
        ebb /= w_sum;
        eab /= w_sum;
        const double var_a = eaa - ma * ma;
        const double var_b = ebb - mb * mb;
        const double cov = eab - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      }
    }
  }
  return total / (static_cast<double>(a.width) * a.height * a.channels);
}

VoxelField random_field(std::uint64_t seed) {
  Aabb box;
  box.min = Vec3(-1.2, 0.3, -2.0);
  box.max = Vec3(1.5, 2.2, 0.5);
  VoxelField field(Eigen::Vector3i(5, 4, 6), box);
  Rng rng(seed);
  for (double& d : field.density) d = rng.uniform(0.0, 30.0);
  for (double& c : field.color) c = rng.uniform();
  return field;
}

GaussianScene random_scene(int n, int sh_degree, std::uint64_t seed) {
  Rng rng(seed);
  GaussianScene scene;
  scene.sh_degree = sh_degree;
  scene.background = Vec3(0.3, 0.5, 0.7);
  for (int i = 0; i < n; ++i) {
    GaussianPrimitive g;
    g.mean = Vec3(rng.normal(), rng.normal(), rng.normal());
    g.log_scale = Vec3(rng.uniform(-3, 1), rng.uniform(-3, 1), rng.uniform(-3, 1));
    g.rotation = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    g.opacity_logit = rng.uniform(-4, 4);
    g.sh.resize(sh_degree == 0 ? 3 : 12);
    for (double& v : g.sh) v = rng.uniform(-2, 2);
    scene.primitives.push_back(std::move(g));
  }
  return scene;
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("psnr of identical images caps at 99") {
  const Image img = random_image(12, 9, 3, 1);
  CHECK(psnr(img, img) == 99.0);
}

TEST_CASE("psnr of a uniform offset matches the closed form") {
  Image a(16, 16, 3);
  Image b = a;
  for (double& v : b.data) v = 0.1;
  // MSE = 0.01, so 10 * log10(1 / 0.01) = 20.
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr matches a direct recomputation on random images") {
  const Image a = random_image(13, 7, 3, 2);
  const Image b = random_image(13, 7, 3, 3);
  double sse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    sse += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  }
  const double expected = 10.0 * std::log10(static_cast<double>(a.data.size()) / sse);
  CHECK(psnr(a, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("metrics reject mismatched image shapes") {
  const Image a(8, 8, 3);
  const Image b(8, 7, 3);
  const Image c(8, 8, 1);
  CHECK_THROWS_AS(psnr(a, b), std::domain_error);
  CHECK_THROWS_AS(ssim(a, c), std::domain_error);
  CHECK_THROWS_AS(ssim_with_gradient(a, b), std::domain_error);
}

TEST_CASE("structural similarity of identical images is 1") {
  const Image img = random_image(20, 14, 3, 4);
  CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("structural similarity of inverted structure is near the floor") {
  Image a(24, 24, 1);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 24; ++x) a.at(x, y, 0) = ((x / 4 + y / 4) % 2) ? 0.9 : 0.1;
  }
  Image b = a;
  for (double& v : b.data) v = 1.0 - v;
  CHECK(ssim(a, b) < 0.1);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("structural similarity matches an explicit 2D-window oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int channels = seed % 2 == 0 ? 3 : 1;
    const Image a = random_image(16, 12, channels, 100 + seed);
    // Correlated pair: the interesting regime is partial similarity.
    Image b = a;
    Rng rng(200 + seed);
    for (double& v : b.data) v = std::clamp(v + 0.2 * rng.normal(), 0.0, 1.0);
    const double expected = brute_force_ssim(a, b);
    CHECK(ssim(a, b) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("the gradient variant reports the same value as the plain metric") {
  const Image a = random_image(15, 11, 3, 5);
  const Image b = random_image(15, 11, 3, 6);
  const SsimGradResult r = ssim_with_gradient(a, b);
  CHECK(r.value == doctest::Approx(ssim(a, b)).epsilon(1e-12));
  CHECK(r.d_a.same_shape(a));
}

TEST_CASE("a precomputed reference reproduces the direct gradient bitwise") {
  const Image a = random_image(10, 10, 3, 7);
  const Image b = random_image(10, 10, 3, 8);
  const SsimReference ref = make_ssim_reference(b);
  const SsimGradResult direct = ssim_with_gradient(a, b);
  const SsimGradResult cached = ssim_with_gradient(a, ref);
  CHECK(direct.value == cached.value);
  CHECK(direct.d_a.data == cached.d_a.data);
}

TEST_CASE("similarity gradients match central finite differences") {
  Image a = random_image(8, 8, 3, 9);
  const Image b = random_image(8, 8, 3, 10);
  const SsimGradResult r = ssim_with_gradient(a, b);
  const double step = 1e-6;
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t i = rng.uniform_index(a.data.size());
    const double saved = a.data[i];
    a.data[i] = saved + step;
    const double up = ssim(a, b);
    a.data[i] = saved - step;
    const double dn = ssim(a, b);
    a.data[i] = saved;
    const double fd = (up - dn) / (2.0 * step);
    CHECK(std::abs(fd - r.d_a.data[i]) < 1e-7 + 1e-5 * std::abs(r.d_a.data[i]));
  }
}

TEST_CASE("image storage is row-major and interleaved") {
  Image img(4, 3, 3);
  img.data[(2 * 4 + 1) * 3 + 2] = 0.75;  // y = 2, x = 1, c = 2
  CHECK(img.at(1, 2, 2) == 0.75);
  CHECK(img.same_shape(Image(4, 3, 3)));
  CHECK_FALSE(img.same_shape(Image(3, 4, 3)));
  CHECK_FALSE(img.same_shape(Image(4, 3, 1)));
}

TEST_CASE("png roundtrips are exact at 8-bit quantization") {
  for (int channels : {1, 3}) {
    const fs::path path = temp_dir() / ("round" + std::to_string(channels) + ".png");
    Image img = random_image(9, 7, channels, 12);
    img.data[0] = -0.5;  // out-of-range values clamp on write
    img.data[1] = 1.5;
    write_png(img, path.string());
    const Image back = read_png(path.string());
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    REQUIRE(back.channels == img.channels);
    for (size_t i = 0; i < img.data.size(); ++i) {
      const double quantized =
          std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0) / 255.0;
      CHECK(back.data[i] == doctest::Approx(quantized).epsilon(1e-12));
    }
  }
}

TEST_CASE("png io reports failures by path") {
  CHECK_THROWS_WITH_AS(read_png((temp_dir() / "missing.png").string()),
                       doctest::Contains("read_png: cannot open"), std::runtime_error);
  CHECK_THROWS_WITH_AS(write_png(Image(4, 4, 2), (temp_dir() / "bad.png").string()),
                       doctest::Contains("only 1- or 3-channel"), std::runtime_error);
  CHECK_THROWS_WITH_AS(write_png(Image(4, 4, 3), "/nonexistent_dir/x.png"),
                       doctest::Contains("write_png: cannot open"), std::runtime_error);
  // A PNG that is not a PNG.
  const fs::path junk = temp_dir() / "junk.png";
  std::ofstream(junk) << "this is not an image";
  CHECK_THROWS_AS(read_png(junk.string()), std::runtime_error);
}

TEST_CASE("ply roundtrips keep float32 positions exactly") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const bool binary = trial % 2 == 0;
    const int n = 1 + static_cast<int>(rng.uniform_index(200));
    PointCloud cloud;
    for (int i = 0; i < n; ++i) {
      cloud.positions.push_back(Vec3(rng.uniform(-50, 50) * std::pow(10.0, rng.uniform(-3, 2)),
                                     rng.uniform(-50, 50), rng.uniform(-50, 50)));
      cloud.colors.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    }
    const fs::path path = temp_dir() / ("cloud" + std::to_string(trial) + ".ply");
    write_ply(cloud, path.string(), binary);
    const PointCloud back = read_ply(path.string());
    REQUIRE(back.size() == cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        CHECK(back.positions[i][k] == f32(cloud.positions[i][k]));
        CHECK(std::abs(back.colors[i][k] - cloud.colors[i][k]) <= 0.5 / 255.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("ascii and binary ply encode the same cloud identically") {
  Rng rng(14);
  PointCloud cloud;
  for (int i = 0; i < 64; ++i) {
    cloud.positions.push_back(Vec3(rng.normal() * 10, rng.normal() * 10, rng.normal() * 10));
    cloud.colors.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
  }
  const fs::path pa = temp_dir() / "same_a.ply";
  const fs::path pb = temp_dir() / "same_b.ply";
  write_ply(cloud, pa.string(), false);
  write_ply(cloud, pb.string(), true);
  const PointCloud a = read_ply(pa.string());
  const PointCloud b = read_ply(pb.string());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.positions[i] == b.positions[i]);
    CHECK(a.colors[i] == b.colors[i]);
  }
}

TEST_CASE("ply write clamps colors into the byte range") {
  PointCloud cloud;
  cloud.positions = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  cloud.colors = {Vec3(-0.2, 0.5, 1.7), Vec3(0.0, 1.0, 0.25)};
  const fs::path path = temp_dir() / "clamp.ply";
  write_ply(cloud, path.string(), true);
  const PointCloud back = read_ply(path.string());
  CHECK(back.colors[0][0] == 0.0);
  CHECK(back.colors[0][2] == 1.0);
  CHECK(back.colors[1][1] == 1.0);
}

TEST_CASE("ply reader skips properties it does not use") {
  const fs::path path = temp_dir() / "extra_props.ply";
  std::ofstream(path) << "ply\n"
                         "format ascii 1.0\n"
                         "comment written by hand\n"
                         "element vertex 2\n"
                         "property float intensity\n"
                         "property float x\n"
                         "property float y\n"
                         "property float z\n"
                         "property uchar red\n"
                         "property uchar green\n"
                         "property uchar blue\n"
                         "property uchar alpha\n"
                         "end_header\n"
                         "9.5 1 2 3 255 0 0 7\n"
                         "-3 4 5 6 0 255 0 9\n";
  const PointCloud cloud = read_ply(path.string());
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.positions[0] == Vec3(1, 2, 3));
  CHECK(cloud.positions[1] == Vec3(4, 5, 6));
  CHECK(cloud.colors[0] == Vec3(1, 0, 0));
  CHECK(cloud.colors[1] == Vec3(0, 1, 0));
}

TEST_CASE("ply reader rejects malformed input with located errors") {
  const fs::path dir = temp_dir();
  auto write_text = [&](const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  };

  CHECK_THROWS_WITH_AS(read_ply(write_text("no_magic.ply", "nope\n")),
                       doctest::Contains(":1: missing 'ply' magic"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      read_ply(write_text("big_endian.ply", "ply\nformat binary_big_endian 1.0\n")),
      doctest::Contains("unsupported format"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      read_ply(write_text("list.ply", "ply\nformat ascii 1.0\nelement vertex 1\n"
                                      "property list uchar int vertex_indices\n")),
      doctest::Contains("list properties are not supported"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      read_ply(write_text("keyword.ply", "ply\nformat ascii 1.0\nobj_info whatever\n")),
      doctest::Contains("unknown header keyword"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      read_ply(write_text("double_x.ply",
                          "ply\nformat ascii 1.0\nelement vertex 1\n"
                          "property double x\nproperty float y\nproperty float z\n"
                          "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                          "end_header\n1 2 3 0 0 0\n")),
      doctest::Contains("property x must be float32"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      read_ply(write_text("no_blue.ply", "ply\nformat ascii 1.0\nelement vertex 1\n"
                                         "property float x\nproperty float y\n"
                                         "property float z\nproperty uchar red\n"
                                         "property uchar green\nend_header\n1 2 3 0 0\n")),
      doctest::Contains("missing color property blue"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      read_ply(write_text("bad_color.ply",
                          "ply\nformat ascii 1.0\nelement vertex 1\n"
                          "property float x\nproperty float y\nproperty float z\n"
                          "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                          "end_header\n1 2 3 300 0 0\n")),
      doctest::Contains("color out of range at vertex 0"), std::runtime_error);
  CHECK_THROWS_WITH_AS(read_ply((dir / "missing.ply").string()),
                       doctest::Contains("read_ply: cannot open"), std::runtime_error);
}

TEST_CASE("ply reader reports truncated payloads by vertex") {
  PointCloud cloud;
  Rng rng(15);
  for (int i = 0; i < 10; ++i) {
    cloud.positions.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()));
    cloud.colors.push_back(Vec3(0.5, 0.5, 0.5));
  }
  const fs::path path = temp_dir() / "trunc.ply";
  write_ply(cloud, path.string(), true);
  const std::vector<char> bytes = slurp(path);
  // Cut the file in the middle of the payload (each vertex is 15 bytes).
  const fs::path cut = temp_dir() / "trunc_cut.ply";
  const size_t keep = bytes.size() - 15 * 4 - 7;
  std::ofstream(cut, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(keep));
  CHECK_THROWS_WITH_AS(read_ply(cut.string()),
                       doctest::Contains("unexpected end of data at vertex 5 of 10"),
                       std::runtime_error);
}

TEST_CASE("ply writer validates its input") {
  CHECK_THROWS_AS(write_ply(PointCloud{}, (temp_dir() / "empty.ply").string(), true),
                  std::invalid_argument);
  PointCloud mismatched;
  mismatched.positions = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  mismatched.colors = {Vec3(0.5, 0.5, 0.5)};
  CHECK_THROWS_AS(write_ply(mismatched, (temp_dir() / "mm.ply").string(), true),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_ply(mismatched, "/nonexistent_dir/x.ply", true),
                  std::invalid_argument);  // size check precedes the open
}

TEST_CASE("field checkpoints roundtrip at float32 precision") {
  const VoxelField field = random_field(16);
  const fs::path path = temp_dir() / "field.vfld";
  save_field(field, path.string());
  const VoxelField back = load_field(path.string());
  CHECK(back.resolution == field.resolution);
  CHECK(back.bounds.min == field.bounds.min);  // bounds are stored as f64
  CHECK(back.bounds.max == field.bounds.max);
  REQUIRE(back.density.size() == field.density.size());
  REQUIRE(back.color.size() == field.color.size());
  for (size_t i = 0; i < field.density.size(); ++i) {
    CHECK(back.density[i] == f32(field.density[i]));
  }
  for (size_t i = 0; i < field.color.size(); ++i) {
    CHECK(back.color[i] == f32(field.color[i]));
  }
  // Saving the same field twice produces identical bytes.
  const fs::path path2 = temp_dir() / "field2.vfld";
  save_field(field, path2.string());
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("scene checkpoints roundtrip both SH degrees at float32 precision") {
  for (int degree : {0, 1}) {
    const GaussianScene scene = random_scene(7, degree, 17 + static_cast<std::uint64_t>(degree));
    const fs::path path = temp_dir() / ("scene" + std::to_string(degree) + ".gspl");
    save_scene(scene, path.string());
    const GaussianScene back = load_scene(path.string());
    CHECK(back.sh_degree == degree);
    REQUIRE(back.primitives.size() == scene.primitives.size());
    for (size_t i = 0; i < scene.primitives.size(); ++i) {
      const GaussianPrimitive& g = scene.primitives[i];
      const GaussianPrimitive& h = back.primitives[i];
      for (int k = 0; k < 3; ++k) CHECK(h.mean[k] == f32(g.mean[k]));
      for (int k = 0; k < 3; ++k) CHECK(h.log_scale[k] == f32(g.log_scale[k]));
      for (int k = 0; k < 4; ++k) CHECK(h.rotation[k] == f32(g.rotation[k]));
      CHECK(h.opacity_logit == f32(g.opacity_logit));
      REQUIRE(h.sh.size() == g.sh.size());
      for (size_t k = 0; k < g.sh.size(); ++k) CHECK(h.sh[k] == f32(g.sh[k]));
    }
    // The format stores geometry and appearance only; the background is a
    // render-time setting and resets to default on load.
    CHECK(back.background == Vec3(0, 0, 0));
  }
}

TEST_CASE("scene checkpoints reject SH arrays below the declared degree") {
  GaussianScene scene = random_scene(3, 1, 19);
  scene.primitives[1].sh.resize(6);
  CHECK_THROWS_WITH_AS(save_scene(scene, (temp_dir() / "bad_sh.gspl").string()),
                       doctest::Contains("primitive SH size below scene degree"),
                       std::runtime_error);
}

TEST_CASE("checkpoint readers reject foreign and damaged files") {
  const fs::path dir = temp_dir();
  const fs::path field_path = dir / "magic.vfld";
  save_field(random_field(20), field_path.string());
  const fs::path scene_path = dir / "magic.gspl";
  save_scene(random_scene(4, 0, 21), scene_path.string());

  // Swapped formats fail on the magic check.
  CHECK_THROWS_WITH_AS(load_field(scene_path.string()),
                       doctest::Contains("bad magic, expected VFLD"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_scene(field_path.string()),
                       doctest::Contains("bad magic, expected GSPL"), std::runtime_error);

  // Unsupported version.
  std::vector<char> bytes = slurp(field_path);
  bytes[4] = 2;  // little-endian version field directly after the magic
  const fs::path versioned = dir / "v2.vfld";
  std::ofstream(versioned, std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHECK_THROWS_WITH_AS(load_field(versioned.string()),
                       doctest::Contains("unsupported VFLD version 2"), std::runtime_error);

  // Truncation inside the payload.
  const std::vector<char> scene_bytes = slurp(scene_path);
  const fs::path cut = dir / "cut.gspl";
  std::ofstream(cut, std::ios::binary)
      .write(scene_bytes.data(), static_cast<std::streamsize>(scene_bytes.size() / 2));
  CHECK_THROWS_WITH_AS(load_scene(cut.string()), doctest::Contains("truncated while reading"),
                       std::runtime_error);

  CHECK_THROWS_WITH_AS(load_field((dir / "nope.vfld").string()),
                       doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("datasets roundtrip through a directory") {
  Dataset dataset;
  dataset.name = "tiny";
  dataset.bounds.min = Vec3(-2.5, -2.0, -0.5);
  dataset.bounds.max = Vec3(2.5, 2.0, 3.5);
  Rng rng(22);
  for (int i = 0; i < 3; ++i) {
    Camera cam;
    cam.fx = 21.0 + i;
    cam.fy = 20.5 + i;
    cam.cx = 7.5;
    cam.cy = 5.5;
    cam.width = 16;
    cam.height = 12;
    cam.R = Eigen::AngleAxisd(0.3 * i + 0.1, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    cam.t = Vec3(rng.normal(), rng.normal(), rng.normal() + 4.0);
    cam.near = 0.05;
    cam.far = 50.0;
    dataset.cameras.push_back(cam);
    dataset.images.push_back(random_image(16, 12, 3, 30 + static_cast<std::uint64_t>(i)));
  }
  dataset.train_indices = {0, 2};
  dataset.test_indices = {1};

  const fs::path dir = temp_dir() / "dataset";
  save_dataset(dataset, dir);
  const Dataset back = load_dataset(dir);

  CHECK(back.name == "tiny");
  CHECK(back.bounds.min == dataset.bounds.min);
  CHECK(back.bounds.max == dataset.bounds.max);
  CHECK(back.train_indices == dataset.train_indices);
  CHECK(back.test_indices == dataset.test_indices);
  REQUIRE(back.cameras.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    const Camera& a = dataset.cameras[i];
    const Camera& b = back.cameras[i];
    CHECK(b.fx == a.fx);
    CHECK(b.fy == a.fy);
    CHECK(b.cx == a.cx);
    CHECK(b.cy == a.cy);
    CHECK(b.width == a.width);
    CHECK(b.height == a.height);
    CHECK(b.R == a.R);  // JSON stores doubles losslessly
    CHECK(b.t == a.t);
    CHECK(b.near == a.near);
    CHECK(b.far == a.far);
    for (size_t j = 0; j < dataset.images[i].data.size(); ++j) {
      const double quantized =
          std::lround(std::clamp(dataset.images[i].data[j], 0.0, 1.0) * 255.0) / 255.0;
      CHECK(back.images[i].data[j] == doctest::Approx(quantized).epsilon(1e-12));
    }
  }

  // Saving the loaded dataset again is byte-stable.
  const fs::path dir2 = temp_dir() / "dataset2";
  save_dataset(back, dir2);
  CHECK(slurp(dir / "cameras.json") == slurp(dir2 / "cameras.json"));
  for (const char* name : {"000.png", "001.png", "002.png"}) {
    CHECK(slurp(dir / "images" / name) == slurp(dir2 / "images" / name));
  }
}

TEST_CASE("dataset loading reports missing and malformed inputs") {
  CHECK_THROWS_WITH_AS(load_dataset(temp_dir() / "no_such_dataset"),
                       doctest::Contains("load_dataset: cannot open"), std::runtime_error);
  const fs::path dir = temp_dir() / "bad_dataset";
  fs::create_directories(dir);
  std::ofstream(dir / "cameras.json") << "{ not json";
  CHECK_THROWS_AS(load_dataset(dir), std::runtime_error);
}

TEST_CASE("dataset validation rejects inconsistent splits") {
  Dataset dataset;
  Camera cam;
  cam.fx = cam.fy = 10.0;
  cam.cx = cam.cy = 3.5;
  cam.width = cam.height = 8;
  dataset.cameras = {cam, cam};
  dataset.images = {Image(8, 8, 3), Image(8, 8, 3)};
  dataset.bounds = Aabb::cube(Vec3::Zero(), 2.0);

  dataset.train_indices = {0};  // camera 1 unassigned
  CHECK_THROWS_AS(dataset.validate(), std::invalid_argument);
  dataset.train_indices = {0, 1};
  dataset.test_indices = {1};  // camera 1 in both splits
  CHECK_THROWS_AS(dataset.validate(), std::invalid_argument);
  dataset.test_indices = {};
  CHECK_NOTHROW(dataset.validate());  // empty test split is allowed
  dataset.images[1] = Image(4, 4, 3);  // image/camera size mismatch
  CHECK_THROWS_AS(dataset.validate(), std::invalid_argument);
}
