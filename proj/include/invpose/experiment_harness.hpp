// Benchmark protocol: synthetic RGB-D orbit datasets, fixed-length
// perturbation trials across magnitudes and ablation variants with matched
// seeds, convergence summaries and pairwise rank tests.

#ifndef INVPOSE_EXPERIMENT_HARNESS_HPP
#define INVPOSE_EXPERIMENT_HARNESS_HPP

#include "invpose/pose_optimizer.hpp"
#include "invpose/rank_stats.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace invpose {

/// Camera-to-world pose at `eye` with local +z aimed at `target` and local
/// +y opposed to `up`. Throws when the view direction is parallel to up.
Pose camera_look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// Poses on a horizontal circle of the given radius, all facing the origin,
/// consecutive frames step_deg apart. The last frame sits at angle 0.
std::vector<Pose> orbit_poses(double radius, int n_frames, double step_deg);

/// Renders ground-truth RGB-D frames at the given world poses (midpoint
/// quadrature). Depth validity is opacity >= 0.5; rel_pose is taken against
/// the last frame (exact identity for the last frame itself).
std::vector<RgbdFrame> render_frames_at(const RadianceField& field, const Camera& camera,
                                        const std::vector<Pose>& poses, int samples_per_ray = 192,
                                        int n_threads = 1);

/// render_frames_at over orbit_poses().
std::vector<RgbdFrame> generate_orbit_frames(const RadianceField& field, const Camera& camera,
                                             double radius, int n_frames, double step_deg,
                                             int samples_per_ray = 192, int n_threads = 1);

/// Decoupled application of a perturbation tangent: rotation composed on
/// the right, translation offset by R * rho. Both error components of the
/// perturbed pose against `pose` equal the tangent norms exactly.
Pose perturb_pose(const Pose& pose, const Tangent& tangent);

struct WindowSpec {
  int n_frames = 8;
  double orbit_step_deg = 15.0;
};

struct VariantSpec {
  std::string name;
  bool depth = true;    ///< include the depth loss term
  bool lowpass = false; ///< optimize against the low-pass wrapped field
  bool wide = false;    ///< widened ray sampling interval
  bool multi = false;   ///< use the full frame window instead of the last frame
};

struct TrialPlan {
  std::vector<SceneSpec> scenes;
  std::vector<double> trans_lengths{0.5, 0.8, 1.2};
  double rot_length_min = 0.2;  ///< rad
  double rot_length_max = 1.4;  ///< rad
  int trials_per_cell = 5;
  WindowSpec window;
  std::vector<VariantSpec> variants;
  std::uint64_t master_seed = 0;
  OptimizerConfig opt;
  Camera camera;
  double orbit_radius = 4.0;
  int gt_samples_per_ray = 192;

  void validate() const;
};

struct TrialRecord {
  std::string variant;
  std::string scene;
  double magnitude = 0.0;  ///< translational perturbation length, m
  int trial = 0;
  std::uint64_t seed = 0;
  double initial_trans_err = 0.0;
  double initial_rot_err = 0.0;
  bool converged = false;
  std::optional<int> convergence_step;
  int steps_run = 0;
  double final_loss = 0.0;
  double final_trans_err = 0.0;
  double final_rot_err = 0.0;
  std::string error_tag;  ///< nonempty when the optimizer aborted
  TrialResult result;
};

/// Runs every (scene, magnitude, trial, variant) cell of the plan. Seeds
/// are derived from (master_seed, scene, magnitude, trial) only, so all
/// variants see identical perturbations per trial index. Records come back
/// in canonical order regardless of `jobs`.
std::vector<TrialRecord> run_plan(const TrialPlan& plan, int jobs = 1);

struct CellSummary {
  std::string variant;
  std::optional<double> magnitude;  ///< empty = combined across magnitudes
  int n_trials = 0;
  int n_converged = 0;
  double convergence_pct = 0.0;  ///< in [0, 100]
  // quartiles of steps-to-converge over converged trials only
  std::optional<double> steps_min, steps_q1, steps_median, steps_q3, steps_max;
};

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);

struct PairwiseStat {
  std::string variant_a, variant_b;
  std::optional<double> magnitude;  ///< empty = pooled over magnitudes
  int n_a = 0, n_b = 0;             ///< converged trial counts entering the test
  std::optional<double> u, p;
};

/// Mann-Whitney tests on steps-to-converge for every unordered variant
/// pair, per magnitude and pooled.
std::vector<PairwiseStat> pairwise_stats(const std::vector<TrialRecord>& records);

}  // namespace invpose

#endif  // INVPOSE_EXPERIMENT_HARNESS_HPP
