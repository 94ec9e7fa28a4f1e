// SPDX-License-Identifier: Apache-2.0
// Command-line front end: scene generation, field training, init sampling,
// splat training, evaluation, and the full experiment matrix.
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "splatinit/checkpoint.hpp"
#include "splatinit/dataset.hpp"
#include "splatinit/distill.hpp"
#include "splatinit/experiments.hpp"
#include "splatinit/field.hpp"
#include "splatinit/image_io.hpp"
#include "splatinit/init.hpp"
#include "splatinit/metrics.hpp"
#include "splatinit/parallel.hpp"
#include "splatinit/ply_io.hpp"
#include "splatinit/scenes.hpp"
#include "splatinit/splat.hpp"

namespace {

using namespace splatinit;

struct GlobalOptions {
  int threads = 0;          // 0 = auto
  bool deterministic = true;
};

// Deterministic mode pins the worker count so output does not depend on the
// machine: an explicit --threads wins, then SPLATINIT_THREADS, then 1.
void apply_thread_options(const GlobalOptions& opts) {
  if (opts.threads > 0) {
    set_thread_count(opts.threads);
  } else if (opts.deterministic && std::getenv("SPLATINIT_THREADS") == nullptr) {
    set_thread_count(1);
  }
}

int cmd_make_scene(const std::string& scene, int resolution, int views, std::uint64_t seed,
                   const std::string& out) {
  const ToyScene toy = make_toy_scene(scene, resolution, views, seed);
  save_dataset(toy.dataset, out);
  save_field(toy.field, (std::filesystem::path(out) / "field_gt.vfld").string());
  std::printf("wrote %s: %zu views (%zu train / %zu test), %dx%d, ground-truth field %dx%dx%d\n",
              out.c_str(), toy.dataset.cameras.size(), toy.dataset.train_indices.size(),
              toy.dataset.test_indices.size(), resolution, resolution,
              toy.field.resolution.x(), toy.field.resolution.y(), toy.field.resolution.z());
  return 0;
}

int cmd_train_field(const std::string& data, int resolution, int iters, std::uint64_t seed,
                    double lr, const std::string& out) {
  const Dataset dataset = load_dataset(data);
  VoxelField field(Eigen::Vector3i::Constant(resolution), dataset.bounds);
  FieldTrainConfig config;
  config.iters = iters;
  config.seed = seed;
  config.lr = lr;
  config.log_every = iters >= 10 ? iters / 10 : 0;
  field = train_field(field, dataset, config);
  save_field(field, out);
  std::printf("wrote %s: %dx%dx%d field trained for %d iterations\n", out.c_str(),
              field.resolution.x(), field.resolution.y(), field.resolution.z(), iters);
  return 0;
}

int cmd_sample_init(const std::string& init, const std::string& field_path,
                    const std::string& data, double multiplier, double extent, int n_points,
                    std::uint64_t seed, const std::string& out) {
  PointCloud cloud;
  if (init == "field") {
    if (field_path.empty()) {
      throw CLI::ValidationError("--field is required for --init field");
    }
    const VoxelField field = load_field(field_path);
    const Dataset dataset = load_dataset(data);
    cloud = sample_point_cloud(field, dataset.train_cameras(), n_points, seed);
  } else if (init == "bbox") {
    const Dataset dataset = load_dataset(data);
    cloud = bbox_random_init(dataset.train_cameras(), multiplier, n_points, seed);
  } else if (init == "box") {
    cloud = constant_box_init(extent, n_points, seed);
  } else {
    throw CLI::ValidationError("--init must be field, bbox, or box");
  }
  write_ply(cloud, out);
  std::printf("wrote %s: %zu points (%s init)\n", out.c_str(), cloud.size(), init.c_str());
  return 0;
}

int cmd_train_splat(const std::string& data, const std::string& init_ply,
                    const std::string& field_path, bool depth_loss, double lambda_init,
                    double decay, int decay_step, int iters, std::uint64_t seed,
                    const std::string& out) {
  const Dataset dataset = load_dataset(data);
  const PointCloud cloud = read_ply(init_ply);
  const GaussianScene init_scene = scene_from_point_cloud(cloud);

  VoxelField field;
  const VoxelField* field_ptr = nullptr;
  if (depth_loss) {
    if (field_path.empty()) {
      throw CLI::ValidationError("--depth-loss requires --field");
    }
    field = load_field(field_path);
    field_ptr = &field;
  }

  DistillConfig config;
  config.total_iters = iters;
  config.seed = seed;
  config.lambda_init = depth_loss ? lambda_init : 0.0;
  config.decay = decay;
  config.decay_step = decay_step;
  config.checkpoint_dir = out;

  std::filesystem::create_directories(out);
  const TrainSplatResult result = train_splat(init_scene, dataset, field_ptr, config);
  const auto scene_path = std::filesystem::path(out) / "scene.gspl";
  save_scene(result.scene, scene_path.string());
  write_metrics_csv(result.log, (std::filesystem::path(out) / "metrics.csv").string());
  std::printf("wrote %s: %zu primitives after %d iterations", scene_path.string().c_str(),
              result.scene.primitives.size(), iters);
  if (!result.log.empty()) {
    std::printf(" (final loss %.6f, train PSNR %.2f dB)", result.log.back().loss_total,
                result.log.back().train_psnr);
  }
  std::printf("\n");
  if (result.depth_warning_count > 0) {
    std::fprintf(stderr, "warning: depth mask was empty in %d iterations\n",
                 result.depth_warning_count);
  }
  return 0;
}

int cmd_eval(const std::string& data, const std::string& splats, const std::string& split,
             const std::string& out) {
  const Dataset dataset = load_dataset(data);
  const GaussianScene scene = load_scene(splats);
  std::vector<int> views;
  if (split == "test") {
    views = dataset.test_indices;
  } else if (split == "train") {
    views = dataset.train_indices;
  } else if (split == "all") {
    views.resize(dataset.cameras.size());
    for (std::size_t i = 0; i < views.size(); ++i) views[i] = static_cast<int>(i);
  } else {
    throw CLI::ValidationError("--split must be test, train, or all");
  }
  if (views.empty()) {
    throw CLI::ValidationError("selected split has no views");
  }
  if (!out.empty()) {
    std::filesystem::create_directories(out);
  }
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  for (std::size_t k = 0; k < views.size(); ++k) {
    const int view = views[k];
    const RenderOutput r = render(scene, dataset.cameras[static_cast<std::size_t>(view)]);
    const Image& gt = dataset.images[static_cast<std::size_t>(view)];
    const double p = psnr(r.color, gt);
    const double s = ssim(r.color, gt);
    psnr_sum += p;
    ssim_sum += s;
    std::printf("view %03d: PSNR %.3f dB, SSIM %.4f\n", view, p, s);
    if (!out.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "render_%03d.png", view);
      write_png(r.color, (std::filesystem::path(out) / name).string());
    }
  }
  const double n = static_cast<double>(views.size());
  std::printf("mean over %zu %s views: PSNR %.3f dB, SSIM %.4f\n", views.size(), split.c_str(),
              psnr_sum / n, ssim_sum / n);
  return 0;
}

int cmd_run_matrix(const std::vector<std::string>& scenes, std::uint64_t seed, int n_seeds,
                   int resolution, int views, int iters, int n_points,
                   const std::string& out) {
  std::vector<ExperimentSpec> specs;
  for (int k = 0; k < n_seeds; ++k) {
    for (ExperimentSpec spec : default_matrix(scenes, seed + static_cast<std::uint64_t>(k))) {
      spec.splat_iters = iters;
      spec.init.n_points = n_points;
      specs.push_back(std::move(spec));
    }
  }
  MatrixConfig config;
  config.resolution = resolution;
  config.n_views = views;
  const std::vector<ExperimentRow> rows = run_experiments(specs, out, config);
  std::printf("%-24s %-10s %6s %6s %6s %9s %8s %7s %s\n", "scene", "init", "field", "depth",
              "seed", "psnr", "ssim", "prims", "status");
  for (const ExperimentRow& row : rows) {
    std::printf("%-24s %-10s %6d %6d %6llu %9.3f %8.4f %7d %s\n", row.spec.scene.c_str(),
                init_label(row.spec.init).c_str(), row.spec.field_iters,
                row.spec.depth_loss ? 1 : 0, static_cast<unsigned long long>(row.spec.seed),
                row.test_psnr, row.test_ssim, row.n_primitives, row.status.c_str());
  }
  std::printf("results written to %s\n",
              (std::filesystem::path(out) / "results.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-splat initialization pipeline: voxel-field training, "
               "termination-distribution point sampling, splat training with optional "
               "depth distillation, and baseline comparisons"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--threads", global.threads,
                 "Worker thread count (0 = SPLATINIT_THREADS or hardware)");
  app.add_flag("--deterministic,!--no-deterministic", global.deterministic,
               "Pin the worker count for machine-independent output (default on)");

  // make-scene
  auto* make_scene = app.add_subcommand("make-scene", "Generate a toy dataset + ground truth");
  std::string ms_scene = "spheres";
  int ms_resolution = 128, ms_views = 20;
  std::uint64_t ms_seed = 7;
  std::string ms_out;
  make_scene->add_option("--scene", ms_scene, "spheres | boxes | reflective_floor_analog");
  make_scene->add_option("--resolution", ms_resolution, "Image side length");
  make_scene->add_option("--views", ms_views, "Ring cameras (every 5th is a test view)");
  make_scene->add_option("--seed", ms_seed, "Scene jitter seed");
  make_scene->add_option("--out", ms_out, "Output dataset directory")->required();

  // train-field
  auto* train_field_cmd = app.add_subcommand("train-field", "Train a voxel field on a dataset");
  std::string tf_data, tf_out;
  int tf_resolution = 48, tf_iters = 2000;
  std::uint64_t tf_seed = 0;
  double tf_lr = 0.05;
  train_field_cmd->add_option("--data", tf_data, "Dataset directory")->required();
  train_field_cmd->add_option("--resolution", tf_resolution, "Grid nodes per axis");
  train_field_cmd->add_option("--field-iters,--iters", tf_iters, "Training iterations");
  train_field_cmd->add_option("--seed", tf_seed, "Ray sampling seed");
  train_field_cmd->add_option("--lr", tf_lr, "Adam learning rate");
  train_field_cmd->add_option("--out", tf_out, "Output .vfld path")->required();

  // sample-init
  auto* sample_init = app.add_subcommand("sample-init", "Draw an initialization point cloud");
  std::string si_init = "field", si_field, si_data, si_out;
  double si_multiplier = 3.0, si_extent = 50.0;
  int si_points = 1000;
  std::uint64_t si_seed = 0;
  sample_init->add_option("--init", si_init, "field | bbox | box");
  sample_init->add_option("--field", si_field, "Trained field (.vfld) for --init field");
  sample_init->add_option("--data", si_data, "Dataset directory (cameras)");
  sample_init->add_option("--multiplier", si_multiplier, "Camera-bbox multiplier for bbox init");
  sample_init->add_option("--extent", si_extent, "Cube side for box init");
  sample_init->add_option("--n-points", si_points, "Points to draw");
  sample_init->add_option("--seed", si_seed, "Sampling seed");
  sample_init->add_option("--out", si_out, "Output .ply path")->required();

  // train-splat
  auto* train_splat_cmd = app.add_subcommand("train-splat", "Train the splat renderer");
  std::string ts_data, ts_init, ts_field, ts_out;
  bool ts_depth = false;
  double ts_lambda = 0.9, ts_decay = 0.9;
  int ts_decay_step = 100, ts_iters = 3000;
  std::uint64_t ts_seed = 0;
  train_splat_cmd->add_option("--data", ts_data, "Dataset directory")->required();
  train_splat_cmd->add_option("--init", ts_init, "Initialization point cloud (.ply)")->required();
  train_splat_cmd->add_option("--field", ts_field, "Field (.vfld) for depth supervision");
  train_splat_cmd->add_flag("--depth-loss", ts_depth, "Distill field depth into the splats");
  train_splat_cmd->add_option("--lambda-init", ts_lambda, "Initial depth-loss weight");
  train_splat_cmd->add_option("--decay", ts_decay, "Depth-weight decay rate");
  train_splat_cmd->add_option("--decay-step", ts_decay_step, "Iterations per decay step");
  train_splat_cmd->add_option("--iters", ts_iters, "Training iterations");
  train_splat_cmd->add_option("--seed", ts_seed, "Training seed");
  train_splat_cmd->add_option("--out", ts_out, "Output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained scene on a dataset split");
  std::string ev_data, ev_splats, ev_split = "test", ev_out;
  eval_cmd->add_option("--data", ev_data, "Dataset directory")->required();
  eval_cmd->add_option("--splats", ev_splats, "Trained scene (.gspl)")->required();
  eval_cmd->add_option("--split", ev_split, "test | train | all");
  eval_cmd->add_option("--out", ev_out, "Directory for rendered views (optional)");

  // run-matrix
  auto* run_matrix = app.add_subcommand("run-matrix", "Run the init-comparison experiment grid");
  std::vector<std::string> rm_scenes;
  std::uint64_t rm_seed = 1;
  int rm_seeds = 1, rm_resolution = 128, rm_views = 20, rm_iters = 3000, rm_points = 1000;
  std::string rm_out;
  run_matrix->add_option("--scene", rm_scenes, "Scene(s); repeatable");
  run_matrix->add_option("--seed", rm_seed, "Base seed");
  run_matrix->add_option("--seeds", rm_seeds, "Number of consecutive seeds per spec");
  run_matrix->add_option("--resolution", rm_resolution, "Image side length");
  run_matrix->add_option("--views", rm_views, "Ring cameras per scene");
  run_matrix->add_option("--iters", rm_iters, "Splat iterations per run");
  run_matrix->add_option("--n-points", rm_points, "Init cloud size");
  run_matrix->add_option("--out", rm_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    apply_thread_options(global);
    if (*make_scene) {
      return cmd_make_scene(ms_scene, ms_resolution, ms_views, ms_seed, ms_out);
    }
    if (*train_field_cmd) {
      return cmd_train_field(tf_data, tf_resolution, tf_iters, tf_seed, tf_lr, tf_out);
    }
    if (*sample_init) {
      return cmd_sample_init(si_init, si_field, si_data, si_multiplier, si_extent, si_points,
                             si_seed, si_out);
    }
    if (*train_splat_cmd) {
      return cmd_train_splat(ts_data, ts_init, ts_field, ts_depth, ts_lambda, ts_decay,
                             ts_decay_step, ts_iters, ts_seed, ts_out);
    }
    if (*eval_cmd) {
      return cmd_eval(ev_data, ev_splats, ev_split, ev_out);
    }
    if (*run_matrix) {
      if (rm_scenes.empty()) {
        rm_scenes = {"spheres", "reflective_floor_analog"};
      }
      return cmd_run_matrix(rm_scenes, rm_seed, rm_seeds, rm_resolution, rm_views, rm_iters,
                            rm_points, rm_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
