// Gradient-based pose estimation loop: Adam over the 6-DoF tangent delta
// with per-iteration pixel resampling, an optional loss-plateau stop rule
// and full per-step tracing. The tangent is kept in a single chart around
// pose_init for the whole run (delta is never folded back mid-run).

#ifndef INVPOSE_POSE_OPTIMIZER_HPP
#define INVPOSE_POSE_OPTIMIZER_HPP

#include "invpose/objective.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace invpose {

struct OptimizerConfig {
  int max_steps = 1000;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int rays_per_step = 2048;
  int samples_per_ray = 128;
  int stop_window = 50;
  double stop_loss_threshold = 0.0;  ///< <= 0 disables the plateau stop rule
  double lambda_depth = 0.5;
  double huber_color = 0.1;
  double huber_depth = 0.1;
  double depth_mask_fade = 0.5;
  double depth_miss_residual = 1.0;
  bool wide = false;
  bool use_lowpass = false;
  double lowpass_sigma = 0.10;  ///< m
  int lowpass_taps = 16;
  std::uint64_t lowpass_seed = 0;
  int n_threads = 1;

  ObjectiveConfig objective() const {
    ObjectiveConfig c;
    c.lambda_depth = lambda_depth;
    c.huber_color = huber_color;
    c.huber_depth = huber_depth;
    c.depth_mask_fade = depth_mask_fade;
    c.depth_miss_residual = depth_miss_residual;
    c.rays_per_step = rays_per_step;
    c.samples_per_ray = samples_per_ray;
    c.wide = wide;
    c.n_threads = n_threads;
    return c;
  }
};

struct StepRecord {
  double loss_total = 0.0;
  double loss_rgb = 0.0;
  double loss_depth = 0.0;
  double trans_err = std::numeric_limits<double>::quiet_NaN();  ///< m, when ground truth known
  double rot_err = std::numeric_limits<double>::quiet_NaN();    ///< rad
};

struct TrialResult {
  std::vector<StepRecord> steps;   ///< state before each update
  std::vector<Vec6> delta_trace;   ///< tangent before each update (diagnostics)
  bool converged = false;
  std::optional<int> convergence_step;
  Pose final_pose;
  bool stopped_by_heuristic = false;
};

/// Thrown when the loss or gradient turns non-finite; carries the last
/// finite state for diagnosis.
class NumericAbortError : public std::runtime_error {
 public:
  NumericAbortError(std::string message, int step, Pose last_pose)
      : std::runtime_error(std::move(message)), step(step), last_pose(last_pose) {}

  int step;
  Pose last_pose;
};

/// Plateau stop rule over the per-step total losses: fires when the mean of
/// the last `stop_window` losses improves on the mean of the window before
/// it by less than 1% AND is below stop_loss_threshold. Never fires before
/// 2*stop_window steps, nor when the threshold is disabled (<= 0).
bool convergence_heuristic(std::span<const double> loss_trace, const OptimizerConfig& config);

/// Runs the optimization from pose_init. When ground_truth is given,
/// per-step pose errors are recorded and the 10%-of-initial-error
/// convergence bookkeeping is filled in (initial errors below 1e-6 m count
/// as converged at step 0). Deterministic for a given seed.
TrialResult run(const RadianceField& field, std::span<const RgbdFrame> frames,
                const Pose& pose_init, const std::optional<Pose>& ground_truth,
                const OptimizerConfig& config, std::uint64_t seed);

/// Trace CSV, one row per step:
/// step,loss_total,loss_rgb,loss_depth,trans_err_m,rot_err_rad
void write_trace_csv(const TrialResult& result, const std::string& path);

}  // namespace invpose

#endif  // INVPOSE_POSE_OPTIMIZER_HPP
