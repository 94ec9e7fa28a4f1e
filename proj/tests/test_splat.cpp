// SPDX-License-Identifier: Apache-2.0
// Gaussian primitives and the rasterizer: per-ray depth formula, EWA
// projection, alpha compositing of color/depth/opacity, numerical guards,
// and the analytic backward pass.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "splatinit/geometry.hpp"
#include "splatinit/rng.hpp"
#include "splatinit/splat.hpp"

using namespace splatinit;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// Degree-0 coefficients whose clamped color head reproduces `color`.
std::vector<double> sh_for_color(const Vec3& color) {
  return {(color[0] - 0.5) / kSh0, (color[1] - 0.5) / kSh0, (color[2] - 0.5) / kSh0};
}

GaussianPrimitive make_primitive(const Vec3& mean, double scale, double opacity,
                                 const Vec3& color) {
  GaussianPrimitive g;
  g.mean = mean;
  g.log_scale = Vec3::Constant(std::log(scale));
  g.opacity_logit = logit(opacity);
  g.sh = sh_for_color(color);
  return g;
}

// 16x16 camera at the origin looking along +z whose principal point is the
// center of pixel (7, 7), so a primitive on the optical axis is evaluated
// with G = 1 exactly at that pixel.
Camera test_camera() {
  Camera cam;
  cam.fx = cam.fy = 20.0;
  cam.cx = cam.cy = 7.5;
  cam.width = cam.height = 16;
  return cam;
}

double gaussian_value(const GaussianPrimitive& g, const Vec3& x) {
  const Mat3 cov = covariance_matrix(g);
  const Vec3 r = x - g.mean;
  return std::exp(-0.5 * r.dot(cov.inverse() * r));
}

// Wide-footprint overlapping scene for finite-difference checks: every
// pixel of the 8x8 image receives a contribution comfortably above the
// skip threshold, opacities stay far from the clamp, and transmittance
// stays far above the early-exit floor, so the loss is smooth in every
// parameter at the 1e-5 step size.
GaussianScene smooth_fd_scene(int n_primitives, int sh_degree = 0) {
  Rng rng(314);
  GaussianScene scene;
  scene.sh_degree = sh_degree;
  scene.background = Vec3(0.15, 0.1, 0.2);
  for (int i = 0; i < n_primitives; ++i) {
    GaussianPrimitive g;
    g.mean = Vec3(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 4.0 + 0.8 * i);
    g.log_scale = Vec3(std::log(rng.uniform(2.0, 2.6)), std::log(rng.uniform(2.2, 2.8)),
                       std::log(rng.uniform(1.8, 2.4)));
    g.rotation = Vec4(1.0, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                      rng.uniform(-0.3, 0.3));
    g.rotation.normalize();
    g.opacity_logit = logit(rng.uniform(0.35, 0.6));
    g.sh = sh_for_color(Vec3(rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75),
                             rng.uniform(0.25, 0.75)));
    if (sh_degree == 1) {
      g.sh.resize(12);
      for (int k = 3; k < 12; ++k) g.sh[k] = rng.uniform(-0.1, 0.1);
    }
    scene.primitives.push_back(std::move(g));
  }
  return scene;
}

Camera fd_camera() {
  Camera cam;
  cam.fx = cam.fy = 20.0;
  cam.cx = cam.cy = 4.0;
  cam.width = cam.height = 8;
  return cam;
}

struct FdImages {
  Image d_color;
  Image d_depth;
};

FdImages random_upstream(int w, int h, std::uint64_t seed) {
  FdImages u{Image(w, h, 3), Image(w, h, 1)};
  Rng rng(seed);
  for (auto& v : u.d_color.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : u.d_depth.data) v = rng.uniform(-0.5, 0.5);
  return u;
}

double weighted_loss(const GaussianScene& scene, const Camera& cam, const FdImages& u,
                     const RenderConfig& config) {
  const RenderOutput out = render(scene, cam, config);
  double l = 0.0;
  for (std::size_t i = 0; i < out.color.data.size(); ++i) {
    l += out.color.data[i] * u.d_color.data[i];
  }
  for (std::size_t i = 0; i < out.depth.data.size(); ++i) {
    l += out.depth.data[i] * u.d_depth.data[i];
  }
  return l;
}

// Central finite differences over every parameter of every primitive,
// compared against render_backward. Returns the largest relative error.
double max_fd_error(GaussianScene scene, const Camera& cam, const FdImages& u,
                    const RenderConfig& config, double step = 1e-5) {
  const SceneGrads grads = render_backward(scene, cam, u.d_color, u.d_depth, config);
  double max_rel = 0.0;
  auto probe = [&](double* param, double analytic) {
    const double saved = *param;
    *param = saved + step;
    const double up = weighted_loss(scene, cam, u, config);
    *param = saved - step;
    const double dn = weighted_loss(scene, cam, u, config);
    *param = saved;
    const double fd = (up - dn) / (2.0 * step);
    const double rel =
        std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
    max_rel = std::max(max_rel, rel);
  };
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    GaussianPrimitive& g = scene.primitives[i];
    const PrimitiveGrads& pg = grads.primitives[i];
    for (int k = 0; k < 3; ++k) probe(&g.mean[k], pg.d_mean[k]);
    for (int k = 0; k < 3; ++k) probe(&g.log_scale[k], pg.d_log_scale[k]);
    for (int k = 0; k < 4; ++k) probe(&g.rotation[k], pg.d_rotation[k]);
    probe(&g.opacity_logit, pg.d_opacity_logit);
    for (std::size_t k = 0; k < g.sh.size(); ++k) probe(&g.sh[k], pg.d_sh[k]);
  }
  return max_rel;
}

}  // namespace

TEST_CASE("quaternion rotation matrices are orthonormal and normalized") {
  CHECK(rotation_matrix(Vec4(1, 0, 0, 0)).isApprox(Mat3::Identity(), 1e-15));
  // Half-turn about z: (w, x, y, z) = (cos 45, 0, 0, sin 45) rotates x to y.
  const double s = std::sqrt(0.5);
  const Mat3 r90 = rotation_matrix(Vec4(s, 0.0, 0.0, s));
  CHECK((r90 * Vec3::UnitX()).isApprox(Vec3::UnitY(), 1e-12));
  // Unnormalized quaternions are normalized internally.
  const Mat3 scaled = rotation_matrix(Vec4(2.0 * s, 0.0, 0.0, 2.0 * s));
  CHECK(scaled.isApprox(r90, 1e-12));
  CHECK_THROWS_AS(rotation_matrix(Vec4::Zero()), std::invalid_argument);
}

TEST_CASE("covariance matrices are symmetric positive definite") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    GaussianPrimitive g;
    g.log_scale = Vec3(rng.uniform(-2.0, 1.0), rng.uniform(-2.0, 1.0), rng.uniform(-2.0, 1.0));
    g.rotation = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    if (g.rotation.norm() < 1e-6) g.rotation = Vec4(1, 0, 0, 0);
    const Mat3 cov = covariance_matrix(g);
    CHECK((cov - cov.transpose()).norm() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    // Eigenvalues are the squared scales.
    Vec3 expected = (2.0 * g.log_scale).array().exp();
    std::sort(expected.data(), expected.data() + 3);
    CHECK(eig.eigenvalues().isApprox(expected, 1e-9));
  }
}

TEST_CASE("ray depth of an isotropic Gaussian is the ray-center distance") {
  GaussianPrimitive g = make_primitive(Vec3(0, 0, 5), 1.0, 0.5, Vec3(1, 0, 0));
  Ray ray;
  ray.origin = Vec3::Zero();
  ray.dir = Vec3(0, 0, 1);
  CHECK(gaussian_depth_along_ray(g, ray) == doctest::Approx(5.0).epsilon(1e-12));

  // Displacement orthogonal to the ray does not move the optimum.
  g.mean = Vec3(1, 0, 5);
  CHECK(gaussian_depth_along_ray(g, ray) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("ray depth of a rotated anisotropic Gaussian matches a grid search") {
  // Brute-force oracle: scan G(o + t d) over t in [0, 10] at step 1e-4.
  GaussianPrimitive g;
  g.mean = Vec3(0, 0, 5);
  g.log_scale = Vec3(std::log(2.0), 0.0, 0.0);  // covariance diag(4, 1, 1) pre-rotation
  const double half = std::numbers::pi / 12.0;   // 30 degrees about y
  g.rotation = Vec4(std::cos(half), 0.0, std::sin(half), 0.0);
  Ray ray;
  ray.origin = Vec3(0.5, 0.0, 0.0);
  ray.dir = Vec3(0, 0, 1);

  double best_t = 0.0;
  double best_v = -1.0;
  for (int i = 0; i <= 100000; ++i) {
    const double t = i * 1e-4;
    const double v = gaussian_value(g, ray.at(t));
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  const double d = gaussian_depth_along_ray(g, ray);
  CHECK(std::abs(d - best_t) < 2e-4);
}

TEST_CASE("ray depth satisfies stationarity and is a local maximum") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    GaussianPrimitive g;
    g.mean = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    g.log_scale = Vec3(rng.uniform(-1.5, 0.5), rng.uniform(-1.5, 0.5), rng.uniform(-1.5, 0.5));
    g.rotation = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    if (g.rotation.norm() < 1e-6) g.rotation = Vec4(1, 0, 0, 0);
    Ray ray;
    ray.origin = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    ray.dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();

    const double t = gaussian_depth_along_ray(g, ray);
    const Mat3 inv_cov = covariance_matrix(g).inverse();
    const double residual = ray.dir.dot(inv_cov * (ray.at(t) - g.mean));
    CHECK(std::abs(residual) < 1e-9);
    const double center = gaussian_value(g, ray.at(t));
    CHECK(center >= gaussian_value(g, ray.at(t + 1e-3)));
    CHECK(center >= gaussian_value(g, ray.at(t - 1e-3)));
  }
}

TEST_CASE("on-axis projection reduces to focal scaling plus blur") {
  const double f = 50.0, z = 4.0, s = 0.3, blur = 0.3;
  Camera cam;
  cam.fx = cam.fy = f;
  cam.cx = 31.5;
  cam.cy = 23.5;
  cam.width = 64;
  cam.height = 48;
  const GaussianPrimitive g = make_primitive(Vec3(0, 0, z), s, 0.5, Vec3(1, 1, 1));
  const auto proj = project_gaussian(g, cam, blur);
  REQUIRE(proj.has_value());
  CHECK(proj->mean2d.isApprox(Vec2(31.5, 23.5), 1e-12));
  CHECK(proj->depth_center == doctest::Approx(z).epsilon(1e-12));
  const double expected = (f * s / z) * (f * s / z);
  CHECK(proj->cov2d(0, 0) == doctest::Approx(expected + blur).epsilon(1e-9));
  CHECK(proj->cov2d(1, 1) == doctest::Approx(expected + blur).epsilon(1e-9));
  CHECK(std::abs(proj->cov2d(0, 1)) < 1e-9);
}

TEST_CASE("projection culls primitives at or behind the near plane") {
  const Camera cam = test_camera();
  GaussianPrimitive g = make_primitive(Vec3(0, 0, -3), 1.0, 0.5, Vec3(1, 0, 0));
  CHECK_FALSE(project_gaussian(g, cam).has_value());
  g.mean = Vec3(0, 0, 0.005);  // in front of the camera but inside `near`
  CHECK_FALSE(project_gaussian(g, cam).has_value());
  g.mean = Vec3(0, 0, 2.0);
  CHECK(project_gaussian(g, cam).has_value());
}

TEST_CASE("pixels without contributions show the background") {
  const Camera cam = test_camera();
  GaussianScene scene;
  scene.background = Vec3(0.3, 0.6, 0.9);
  // A tight primitive in the image corner leaves the far corner untouched.
  scene.primitives.push_back(make_primitive(Vec3(-0.55, -0.55, 2.0), 0.02, 0.8, Vec3(1, 0, 0)));
  const RenderOutput out = render(scene, cam);
  const int x = 15, y = 15;
  CHECK(out.color.at(x, y, 0) == 0.3);
  CHECK(out.color.at(x, y, 1) == 0.6);
  CHECK(out.color.at(x, y, 2) == 0.9);
  CHECK(out.depth.at(x, y, 0) == 0.0);
  CHECK(out.alpha.at(x, y, 0) == 0.0);
}

TEST_CASE("a single primitive composites half its color at half opacity") {
  const Camera cam = test_camera();
  GaussianScene scene;
  scene.primitives.push_back(make_primitive(Vec3(0, 0, 2), 0.4, 0.5, Vec3(1, 0, 0)));
  const RenderOutput out = render(scene, cam);
  // At the central pixel G = 1, so alpha * G = 0.5 exactly.
  CHECK(out.color.at(7, 7, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.color.at(7, 7, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.color.at(7, 7, 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.alpha.at(7, 7, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.depth.at(7, 7, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two half-opacity primitives composite color and depth front to back") {
  const Camera cam = test_camera();
  GaussianScene scene;
  scene.primitives.push_back(make_primitive(Vec3(0, 0, 1), 0.3, 0.5, Vec3(1, 0, 0)));
  scene.primitives.push_back(make_primitive(Vec3(0, 0, 2), 0.5, 0.5, Vec3(0, 1, 0)));
  const RenderOutput out = render(scene, cam);
  // Both contribute alpha * G = 0.5 on the center ray with depths 1 and 2:
  // D = 1 * 0.5 + 2 * 0.5 * 0.5 = 1.0, A = 0.75.
  CHECK(out.depth.at(7, 7, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.alpha.at(7, 7, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(out.color.at(7, 7, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.color.at(7, 7, 1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("a saturating primitive hides everything behind it") {
  const Camera cam = test_camera();
  GaussianScene scene;
  scene.background = Vec3(0.2, 0.2, 0.2);
  GaussianPrimitive front = make_primitive(Vec3(0, 0, 2), 0.4, 0.5, Vec3(0.9, 0.1, 0.3));
  front.opacity_logit = logit(1.0 - 1e-6);
  scene.primitives.push_back(front);
  scene.primitives.push_back(make_primitive(Vec3(0, 0, 4), 0.8, 0.9, Vec3(0, 1, 0)));
  // Relax the contribution clamp so the first primitive can actually reach
  // alpha * G = 1 - 1e-6 (the default guard caps it at 0.999).
  RenderConfig config;
  config.max_contribution = 1.0;
  const RenderOutput out = render(scene, cam, config);
  CHECK(std::abs(out.color.at(7, 7, 0) - 0.9) < 1e-4);
  CHECK(std::abs(out.color.at(7, 7, 1) - 0.1) < 1e-4);
  CHECK(std::abs(out.color.at(7, 7, 2) - 0.3) < 1e-4);
  CHECK(std::abs(out.depth.at(7, 7, 0) - 2.0) < 1e-4);
  CHECK(out.alpha.at(7, 7, 0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("contributions below the skip threshold are dropped entirely") {
  const Camera cam = test_camera();
  GaussianScene scene;
  scene.background = Vec3(0.25, 0.25, 0.25);
  // Opacity far below 1/255: even G = 1 stays under the skip threshold.
  GaussianPrimitive g = make_primitive(Vec3(0, 0, 2), 0.4, 0.5, Vec3(1, 1, 1));
  g.opacity_logit = logit(1.0 / 1024.0);
  scene.primitives.push_back(g);
  const RenderOutput out = render(scene, cam);
  CHECK(out.color.at(7, 7, 0) == 0.25);
  CHECK(out.alpha.at(7, 7, 0) == 0.0);
  CHECK(out.depth.at(7, 7, 0) == 0.0);
}

TEST_CASE("accumulated alpha stays within bounds and depth is never negative") {
  Rng rng(5150);
  const Camera cam = test_camera();
  GaussianScene scene;
  for (int i = 0; i < 40; ++i) {
    GaussianPrimitive g;
    g.mean = Vec3(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(0.5, 6.0));
    g.log_scale = Vec3(rng.uniform(-3.0, 0.5), rng.uniform(-3.0, 0.5), rng.uniform(-3.0, 0.5));
    g.rotation = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    if (g.rotation.norm() < 1e-6) g.rotation = Vec4(1, 0, 0, 0);
    g.opacity_logit = logit(rng.uniform(0.05, 0.95));
    g.sh = sh_for_color(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    scene.primitives.push_back(std::move(g));
  }
  const RenderOutput out = render(scene, cam);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double a = out.alpha.at(x, y, 0);
      CHECK(a >= 0.0);
      CHECK(a <= 1.0 + 1e-9);
      CHECK(std::isfinite(out.depth.at(x, y, 0)));
      if (a > 0.0) CHECK(out.depth.at(x, y, 0) >= 0.0);
      for (int c = 0; c < 3; ++c) CHECK(std::isfinite(out.color.at(x, y, c)));
    }
  }
}

TEST_CASE("equal center depths fall back to primitive order") {
  const Camera cam = test_camera();
  GaussianScene scene;
  // Identical depth_center: the earlier primitive composites first.
  scene.primitives.push_back(make_primitive(Vec3(0, 0, 2), 0.4, 0.5, Vec3(1, 0, 0)));
  scene.primitives.push_back(make_primitive(Vec3(0, 0, 2), 0.4, 0.5, Vec3(0, 1, 0)));
  const RenderOutput out = render(scene, cam);
  CHECK(out.color.at(7, 7, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.color.at(7, 7, 1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("rendering the same scene twice is bitwise identical") {
  Rng rng(8);
  const Camera cam = test_camera();
  GaussianScene scene;
  for (int i = 0; i < 12; ++i) {
    scene.primitives.push_back(make_primitive(
        Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1.0, 5.0)),
        rng.uniform(0.1, 0.6), rng.uniform(0.2, 0.8),
        Vec3(rng.uniform(), rng.uniform(), rng.uniform())));
  }
  const RenderOutput a = render(scene, cam);
  const RenderOutput b = render(scene, cam);
  CHECK(a.color.data == b.color.data);
  CHECK(a.depth.data == b.depth.data);
  CHECK(a.alpha.data == b.alpha.data);
}

TEST_CASE("rendering validates the SH configuration") {
  const Camera cam = test_camera();
  GaussianScene scene;
  scene.primitives.push_back(make_primitive(Vec3(0, 0, 2), 0.4, 0.5, Vec3(1, 0, 0)));
  scene.sh_degree = 2;
  CHECK_THROWS_AS(render(scene, cam), std::invalid_argument);
  scene.sh_degree = 1;  // primitives only carry 3 coefficients
  CHECK_THROWS_AS(render(scene, cam), std::invalid_argument);
}

TEST_CASE("degree-1 color with zero linear coefficients matches degree 0") {
  const Camera cam = test_camera();
  GaussianScene d0;
  d0.primitives.push_back(make_primitive(Vec3(0.2, -0.1, 2), 0.4, 0.5, Vec3(0.7, 0.4, 0.2)));
  GaussianScene d1 = d0;
  d1.sh_degree = 1;
  d1.primitives[0].sh.resize(12, 0.0);
  const RenderOutput a = render(d0, cam);
  const RenderOutput b = render(d1, cam);
  CHECK(a.color.data == b.color.data);
}

TEST_CASE("zero upstream gradients produce zero parameter gradients") {
  const Camera cam = fd_camera();
  const GaussianScene scene = smooth_fd_scene(3);
  const Image zero_c(cam.width, cam.height, 3);
  const Image zero_d(cam.width, cam.height, 1);
  const SceneGrads grads = render_backward(scene, cam, zero_c, zero_d);
  REQUIRE(grads.primitives.size() == scene.primitives.size());
  for (const PrimitiveGrads& pg : grads.primitives) {
    CHECK(pg.d_mean.isZero(0.0));
    CHECK(pg.d_log_scale.isZero(0.0));
    CHECK(pg.d_rotation.isZero(0.0));
    CHECK(pg.d_opacity_logit == 0.0);
    for (double v : pg.d_sh) CHECK(v == 0.0);
  }
  // Footprint statistics are still reported for visible primitives.
  for (double r : grads.radius_px) CHECK(r > 0.0);
}

TEST_CASE("single-primitive color gradients match finite differences") {
  const Camera cam = fd_camera();
  FdImages u = random_upstream(cam.width, cam.height, 21);
  std::fill(u.d_depth.data.begin(), u.d_depth.data.end(), 0.0);
  CHECK(max_fd_error(smooth_fd_scene(1), cam, u, RenderConfig{}) < 1e-4);
}

TEST_CASE("single-primitive depth gradients match finite differences") {
  const Camera cam = fd_camera();
  FdImages u = random_upstream(cam.width, cam.height, 22);
  std::fill(u.d_color.data.begin(), u.d_color.data.end(), 0.0);
  CHECK(max_fd_error(smooth_fd_scene(1), cam, u, RenderConfig{}) < 1e-4);
}

TEST_CASE("overlapping-scene gradients match finite differences") {
  const Camera cam = fd_camera();
  const FdImages u = random_upstream(cam.width, cam.height, 23);
  CHECK(max_fd_error(smooth_fd_scene(3), cam, u, RenderConfig{}) < 1e-4);
}

TEST_CASE("degree-1 SH gradients match finite differences") {
  const Camera cam = fd_camera();
  const FdImages u = random_upstream(cam.width, cam.height, 24);
  CHECK(max_fd_error(smooth_fd_scene(2, 1), cam, u, RenderConfig{}) < 1e-4);
}

TEST_CASE("backward pass reports footprints only for visible primitives") {
  const Camera cam = fd_camera();
  GaussianScene scene = smooth_fd_scene(2);
  scene.primitives[1].mean = Vec3(0, 0, -5);  // culled: behind the camera
  const FdImages u = random_upstream(cam.width, cam.height, 25);
  const SceneGrads grads = render_backward(scene, cam, u.d_color, u.d_depth);
  CHECK(grads.radius_px[0] > 0.0);
  CHECK(grads.radius_px[1] == 0.0);
  CHECK(grads.mean2d_grad_norm[1] == 0.0);
  CHECK(grads.primitives[1].d_mean.isZero(0.0));
  CHECK(grads.primitives[1].d_opacity_logit == 0.0);
}

TEST_CASE("backward rejects mismatched upstream shapes") {
  const Camera cam = fd_camera();
  const GaussianScene scene = smooth_fd_scene(1);
  const Image bad_c(4, 4, 3);
  const Image good_d(cam.width, cam.height, 1);
  CHECK_THROWS_AS(render_backward(scene, cam, bad_c, good_d), std::invalid_argument);
  const Image good_c(cam.width, cam.height, 3);
  const Image bad_d(4, 4, 1);
  CHECK_THROWS_AS(render_backward(scene, cam, good_c, bad_d), std::invalid_argument);
}
