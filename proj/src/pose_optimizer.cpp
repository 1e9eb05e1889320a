#include "invpose/pose_optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace invpose {

namespace {

double mean(std::span<const double> xs, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += xs[i];
  return s / static_cast<double>(hi - lo);
}

void fill_convergence(TrialResult& result) {
  if (result.steps.empty() || std::isnan(result.steps.front().trans_err)) return;
  const double initial = result.steps.front().trans_err;
  if (initial <= 1e-6) {
    result.converged = true;
    result.convergence_step = 0;
    return;
  }
  const double threshold = 0.1 * initial;
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    if (result.steps[i].trans_err <= threshold) {
      result.converged = true;
      result.convergence_step = static_cast<int>(i);
      return;
    }
  }
}

}  // namespace

bool convergence_heuristic(std::span<const double> loss_trace, const OptimizerConfig& config) {
  if (config.stop_loss_threshold <= 0.0) return false;
  const auto w = static_cast<std::size_t>(config.stop_window);
  if (w == 0 || loss_trace.size() < 2 * w) return false;

  const std::size_t n = loss_trace.size();
  const double last = mean(loss_trace, n - w, n);
  const double prev = mean(loss_trace, n - 2 * w, n - w);
  const double improvement = (prev - last) / std::max(prev, 1e-300);
  return improvement < 0.01 && last < config.stop_loss_threshold;
}

TrialResult run(const RadianceField& field, std::span<const RgbdFrame> frames,
                const Pose& pose_init, const std::optional<Pose>& ground_truth,
                const OptimizerConfig& config, std::uint64_t seed) {
  if (config.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(config.lr >= 0.0)) throw std::invalid_argument("lr must be >= 0");

  std::unique_ptr<LowpassField> lowpass;
  const RadianceField* render_field = &field;
  if (config.use_lowpass && config.lowpass_sigma > 0.0) {
    lowpass = std::make_unique<LowpassField>(field, config.lowpass_sigma, config.lowpass_taps,
                                             config.lowpass_seed);
    render_field = lowpass.get();
  }

  const ObjectiveConfig obj_config = config.objective();

  TrialResult result;
  result.final_pose = pose_init;
  std::vector<double> loss_trace;

  Vec6 delta = Vec6::Zero();
  Vec6 m = Vec6::Zero();
  Vec6 v = Vec6::Zero();

  const bool trivial_start =
      ground_truth && pose_errors(pose_init, *ground_truth).trans <= 1e-6;

  for (int step = 0; step < config.max_steps; ++step) {
    const Tangent tangent = Tangent::from_vec6(delta);
    const Pose pose_now = oplus(pose_init, tangent);

    const LossReport report =
        evaluate(*render_field, frames, pose_init, tangent, obj_config,
                 derive_seed(seed, {static_cast<std::uint64_t>(step)}));
    if (!std::isfinite(report.total) || !report.grad.allFinite()) {
      throw NumericAbortError("non-finite loss or gradient at step " + std::to_string(step),
                              step, result.final_pose);
    }

    StepRecord rec;
    rec.loss_total = report.total;
    rec.loss_rgb = report.rgb_term;
    rec.loss_depth = report.depth_term;
    if (ground_truth) {
      const PoseErrors e = pose_errors(pose_now, *ground_truth);
      rec.trans_err = e.trans;
      rec.rot_err = e.rot;
    }
    result.steps.push_back(rec);
    result.delta_trace.push_back(delta);
    loss_trace.push_back(report.total);
    result.final_pose = pose_now;

    if (trivial_start) break;
    if (convergence_heuristic(loss_trace, config)) {
      result.stopped_by_heuristic = true;
      break;
    }

    // Bias-corrected Adam on the 6 tangent coordinates.
    const double t = static_cast<double>(step + 1);
    m = config.beta1 * m + (1.0 - config.beta1) * report.grad;
    v = config.beta2 * v + (1.0 - config.beta2) * report.grad.cwiseProduct(report.grad);
    const double m_corr = 1.0 - std::pow(config.beta1, t);
    const double v_corr = 1.0 - std::pow(config.beta2, t);
    for (int k = 0; k < 6; ++k) {
      const double m_hat = m[k] / m_corr;
      const double v_hat = v[k] / v_corr;
      delta[k] -= config.lr * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
    result.final_pose = oplus(pose_init, Tangent::from_vec6(delta));
  }

  fill_convergence(result);
  return result;
}

void write_trace_csv(const TrialResult& result, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "step,loss_total,loss_rgb,loss_depth,trans_err_m,rot_err_rad\n";
  char line[256];
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const StepRecord& r = result.steps[i];
    std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g,%.12g,%.12g,%.12g\n", i, r.loss_total,
                  r.loss_rgb, r.loss_depth, r.trans_err, r.rot_err);
    os << line;
  }
}

}  // namespace invpose
