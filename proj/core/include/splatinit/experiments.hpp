// SPDX-License-Identifier: Apache-2.0
// Experiment matrix: trains fields and splat models end-to-end for a list of
// (scene, initialization, supervision) configurations and writes a results
// CSV plus per-run logs, renders, and initialization point clouds.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splatinit/distill.hpp"
#include "splatinit/field.hpp"
#include "splatinit/init.hpp"

namespace splatinit {

struct ExperimentSpec {
  std::string scene;  // toy scene name ("spheres", "boxes", "reflective_floor_analog")
  InitConfig init;    // strategy and parameters; the draw uses `seed` below
  int field_iters = 0;      // 0 = no field; point-cloud init and depth loss need > 0
  bool depth_loss = false;  // supervise rendered depth with the trained field
  int splat_iters = 3000;
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument when the spec is inconsistent: depth loss or
// point-cloud init without a field, or field_iters outside {0, 1000, 2000,
// 5000}, or non-positive splat_iters / n_points.
void validate_spec(const ExperimentSpec& spec);

// Short deterministic identifiers used in file names and the results CSV.
std::string init_label(const InitConfig& init);
std::string spec_label(const ExperimentSpec& spec);

struct ExperimentRow {
  ExperimentSpec spec;
  std::string status = "ok";  // "ok" or the failure message
  double test_psnr = 0.0;
  double test_ssim = 0.0;
  int n_primitives = 0;
  double wall_seconds = 0.0;
};

struct MatrixConfig {
  int resolution = 128;  // image side for generated toy datasets
  int n_views = 20;      // ring cameras; every 5th is a test view
  std::uint64_t scene_seed = 7;  // dataset + field training seed (not per-spec)
  int field_resolution = 48;     // trained-field grid side
  FieldTrainConfig field_train;  // base config; iters overridden per spec
  DistillConfig distill;         // base config; iters/seed/lambda overridden per spec
  bool save_renders = true;
  bool save_plys = true;
  bool save_logs = true;
};

// Runs every spec end-to-end: builds (and caches) the scene dataset, trains
// (and caches) one field per (scene, field_iters) pair shared across seeds,
// draws the init cloud with the spec seed, trains the splat model, and
// evaluates mean PSNR/SSIM over the test views. Writes out_dir/results.csv
// with header scene,init,field_iters,depth_loss,seed,test_psnr,test_ssim,
// n_primitives,wall_seconds,status (one row per spec, in order), plus
// logs/<label>.csv, renders/<label>/test_NN.png, and inits/<label>.ply.
// A failing spec records its error in the status column and the matrix
// continues. Throws std::invalid_argument("run_experiments: no specs") on an
// empty list. Returns the rows. Everything except wall_seconds is
// deterministic for fixed seeds and thread count.
std::vector<ExperimentRow> run_experiments(const std::vector<ExperimentSpec>& specs,
                                           const std::filesystem::path& out_dir,
                                           const MatrixConfig& config = {});

// The default comparison grid: per scene, {1.5x bbox, 3x bbox, constant box,
// field-sampled} x {depth off, on} = 8 rows. Rows that need a field (depth
// supervision or field sampling) train it for 2000 iterations. The constant
// box uses a desk-scale extent of 4 (the generated scenes span about 4.4
// world units), and every spec uses `seed`.
std::vector<ExperimentSpec> default_matrix(const std::vector<std::string>& scenes,
                                           std::uint64_t seed);

}  // namespace splatinit
