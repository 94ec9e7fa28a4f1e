// SPDX-License-Identifier: Apache-2.0
#include "splatinit/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <utility>

#include "splatinit/image_io.hpp"
#include "splatinit/metrics.hpp"
#include "splatinit/ply_io.hpp"
#include "splatinit/scenes.hpp"

namespace splatinit {

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Keeps the CSV single-token: no separators or line breaks in status text.
std::string sanitize_csv_field(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') {
      c = ';';
    }
  }
  return text;
}

}  // namespace

void validate_spec(const ExperimentSpec& spec) {
  if (spec.scene.empty()) {
    throw std::invalid_argument("experiment spec: scene name is empty");
  }
  if (spec.field_iters != 0 && spec.field_iters != 1000 && spec.field_iters != 2000 &&
      spec.field_iters != 5000) {
    throw std::invalid_argument("experiment spec: field_iters must be 0, 1000, 2000 or 5000");
  }
  if (spec.depth_loss && spec.field_iters == 0) {
    throw std::invalid_argument("experiment spec: depth loss requires a trained field");
  }
  if (spec.init.strategy == InitStrategy::point_cloud && spec.field_iters == 0) {
    throw std::invalid_argument("experiment spec: point-cloud init requires a trained field");
  }
  if (spec.splat_iters <= 0) {
    throw std::invalid_argument("experiment spec: splat_iters must be positive");
  }
  if (spec.init.n_points < 4) {
    throw std::invalid_argument("experiment spec: n_points must be at least 4");
  }
}

std::string init_label(const InitConfig& init) {
  switch (init.strategy) {
    case InitStrategy::bbox_multiple:
      return "bbox" + format_number(init.multiplier) + "x";
    case InitStrategy::constant_box:
      return "box" + format_number(init.extent);
    case InitStrategy::point_cloud:
      return "field";
  }
  throw std::logic_error("init_label: unknown strategy");
}

std::string spec_label(const ExperimentSpec& spec) {
  return spec.scene + "_" + init_label(spec.init) + "_f" + std::to_string(spec.field_iters) +
         (spec.depth_loss ? "_depth" : "_plain") + "_s" + std::to_string(spec.seed);
}

namespace {

struct SceneCache {
  std::map<std::string, ToyScene> scenes;
  // One trained field per (scene, field_iters), shared across seeds.
  std::map<std::pair<std::string, int>, VoxelField> fields;
};

const ToyScene& get_scene(SceneCache& cache, const std::string& name,
                          const MatrixConfig& config) {
  auto it = cache.scenes.find(name);
  if (it == cache.scenes.end()) {
    it = cache.scenes
             .emplace(name, make_toy_scene(name, config.resolution, config.n_views,
                                           config.scene_seed))
             .first;
  }
  return it->second;
}

const VoxelField& get_field(SceneCache& cache, const std::string& name, int field_iters,
                            const MatrixConfig& config) {
  const auto key = std::make_pair(name, field_iters);
  auto it = cache.fields.find(key);
  if (it == cache.fields.end()) {
    const ToyScene& scene = get_scene(cache, name, config);
    VoxelField blank(Eigen::Vector3i::Constant(config.field_resolution),
                     scene.dataset.bounds);
    FieldTrainConfig ft = config.field_train;
    ft.iters = field_iters;
    ft.seed = config.scene_seed;
    it = cache.fields.emplace(key, train_field(blank, scene.dataset, ft)).first;
  }
  return it->second;
}

PointCloud draw_init_cloud(const ExperimentSpec& spec, const Dataset& dataset,
                           const VoxelField* field) {
  const std::vector<Camera> train_cams = dataset.train_cameras();
  switch (spec.init.strategy) {
    case InitStrategy::bbox_multiple:
      return bbox_random_init(train_cams, spec.init.multiplier, spec.init.n_points, spec.seed);
    case InitStrategy::constant_box:
      return constant_box_init(spec.init.extent, spec.init.n_points, spec.seed);
    case InitStrategy::point_cloud:
      return sample_point_cloud(*field, train_cams, spec.init.n_points, spec.seed);
  }
  throw std::logic_error("draw_init_cloud: unknown strategy");
}

}  // namespace

std::vector<ExperimentRow> run_experiments(const std::vector<ExperimentSpec>& specs,
                                           const std::filesystem::path& out_dir,
                                           const MatrixConfig& config) {
  if (specs.empty()) {
    throw std::invalid_argument("run_experiments: no specs");
  }
  std::filesystem::create_directories(out_dir);
  if (config.save_logs) {
    std::filesystem::create_directories(out_dir / "logs");
  }
  if (config.save_plys) {
    std::filesystem::create_directories(out_dir / "inits");
  }
  if (config.save_renders) {
    std::filesystem::create_directories(out_dir / "renders");
  }

  SceneCache cache;
  std::vector<ExperimentRow> rows;
  rows.reserve(specs.size());

  for (const ExperimentSpec& spec : specs) {
    ExperimentRow row;
    row.spec = spec;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      validate_spec(spec);
      const std::string label = spec_label(spec);
      const ToyScene& toy = get_scene(cache, spec.scene, config);
      const VoxelField* field = nullptr;
      if (spec.field_iters > 0) {
        field = &get_field(cache, spec.scene, spec.field_iters, config);
      }

      const PointCloud cloud = draw_init_cloud(spec, toy.dataset, field);
      if (config.save_plys) {
        write_ply(cloud, (out_dir / "inits" / (label + ".ply")).string());
      }
      const GaussianScene init_scene = scene_from_point_cloud(cloud);

      DistillConfig dc = config.distill;
      dc.total_iters = spec.splat_iters;
      dc.seed = spec.seed;
      if (!spec.depth_loss) {
        dc.lambda_init = 0.0;
      }
      const TrainSplatResult trained =
          train_splat(init_scene, toy.dataset, spec.depth_loss ? field : nullptr, dc);
      if (config.save_logs) {
        write_metrics_csv(trained.log, (out_dir / "logs" / (label + ".csv")).string());
      }

      double psnr_sum = 0.0;
      double ssim_sum = 0.0;
      for (std::size_t k = 0; k < toy.dataset.test_indices.size(); ++k) {
        const int view = toy.dataset.test_indices[k];
        const Camera& camera = toy.dataset.cameras[static_cast<std::size_t>(view)];
        const Image& gt = toy.dataset.images[static_cast<std::size_t>(view)];
        const RenderOutput render_out = render(trained.scene, camera, dc.render);
        psnr_sum += psnr(render_out.color, gt);
        ssim_sum += ssim(render_out.color, gt);
        if (config.save_renders) {
          const auto dir = out_dir / "renders" / label;
          std::filesystem::create_directories(dir);
          char name[32];
          std::snprintf(name, sizeof(name), "test_%02zu.png", k);
          write_png(render_out.color, (dir / name).string());
        }
      }
      const double n_test = static_cast<double>(toy.dataset.test_indices.size());
      row.test_psnr = n_test > 0 ? psnr_sum / n_test : 0.0;
      row.test_ssim = n_test > 0 ? ssim_sum / n_test : 0.0;
      row.n_primitives = static_cast<int>(trained.scene.primitives.size());
    } catch (const std::exception& e) {
      row.status = sanitize_csv_field(e.what());
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }

  const auto csv_path = out_dir / "results.csv";
  std::FILE* f = std::fopen(csv_path.string().c_str(), "wb");
  if (f == nullptr) {
    throw std::runtime_error("run_experiments: cannot open " + csv_path.string());
  }
  std::fputs(
      "scene,init,field_iters,depth_loss,seed,test_psnr,test_ssim,n_primitives,"
      "wall_seconds,status\n",
      f);
  for (const ExperimentRow& row : rows) {
    std::fprintf(f, "%s,%s,%d,%d,%llu,%.17g,%.17g,%d,%.3f,%s\n",
                 sanitize_csv_field(row.spec.scene).c_str(),
                 init_label(row.spec.init).c_str(), row.spec.field_iters,
                 row.spec.depth_loss ? 1 : 0,
                 static_cast<unsigned long long>(row.spec.seed), row.test_psnr, row.test_ssim,
                 row.n_primitives, row.wall_seconds, row.status.c_str());
  }
  if (std::fclose(f) != 0) {
    throw std::runtime_error("run_experiments: write failed for " + csv_path.string());
  }
  return rows;
}

std::vector<ExperimentSpec> default_matrix(const std::vector<std::string>& scenes,
                                           std::uint64_t seed) {
  std::vector<ExperimentSpec> specs;
  for (const std::string& scene : scenes) {
    std::vector<InitConfig> inits(4);
    inits[0].strategy = InitStrategy::bbox_multiple;
    inits[0].multiplier = 1.5;
    inits[1].strategy = InitStrategy::bbox_multiple;
    inits[1].multiplier = 3.0;
    inits[2].strategy = InitStrategy::constant_box;
    inits[2].extent = 50.0;  // scene-agnostic large box, far wider than any camera rig
    inits[3].strategy = InitStrategy::point_cloud;
    for (const InitConfig& init : inits) {
      for (const bool depth : {false, true}) {
        ExperimentSpec spec;
        spec.scene = scene;
        spec.init = init;
        spec.depth_loss = depth;
        const bool needs_field = depth || init.strategy == InitStrategy::point_cloud;
        spec.field_iters = needs_field ? 2000 : 0;
        spec.seed = seed;
        specs.push_back(std::move(spec));
      }
    }
  }
  return specs;
}

}  // namespace splatinit
