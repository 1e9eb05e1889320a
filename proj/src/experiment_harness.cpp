#include "invpose/experiment_harness.hpp"

#include "invpose/parallel.hpp"

#include <algorithm>
#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <stdexcept>

namespace invpose {

Pose camera_look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up.normalized());
  const double len = right.norm();
  if (len < 1e-9) throw std::invalid_argument("look_at: view direction parallel to up");
  right /= len;
  const Vec3 down = forward.cross(right);

  Pose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = eye;
  return pose;
}

std::vector<Pose> orbit_poses(double radius, int n_frames, double step_deg) {
  if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(n_frames));
  for (int i = 0; i < n_frames; ++i) {
    const double angle = static_cast<double>(i - (n_frames - 1)) * step_deg * M_PI / 180.0;
    const Vec3 eye(radius * std::cos(angle), radius * std::sin(angle), 0.0);
    poses.push_back(camera_look_at(eye, Vec3::Zero()));
  }
  return poses;
}

std::vector<RgbdFrame> render_frames_at(const RadianceField& field, const Camera& camera,
                                        const std::vector<Pose>& poses, int samples_per_ray,
                                        int n_threads) {
  camera.validate();
  if (poses.empty()) throw std::invalid_argument("render_frames_at: no poses");
  const Pose last_inv = inverse(poses.back());

  std::vector<RgbdFrame> frames(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    RgbdFrame& frame = frames[i];
    frame.camera = camera;
    frame.world_pose = poses[i];
    frame.rel_pose = i + 1 == poses.size() ? Pose::identity() : compose(last_inv, poses[i]);
    const auto n_px = static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height);
    frame.color.resize(n_px);
    frame.depth.assign(n_px, 0.0);
    frame.depth_valid.assign(n_px, 0);

    parallel_for(camera.height, n_threads, [&](int v) {
      std::vector<RaySample> samples;
      sample_midpoint(camera.near, camera.far, samples_per_ray, false, samples);
      for (int u = 0; u < camera.width; ++u) {
        Ray ray;
        ray.origin = poses[i].translation;
        ray.direction = poses[i].rotation * pixel_direction(camera, u, v);
        ray.u = u;
        ray.v = v;
        const RayRadiance out = render_ray(field, ray, samples, field.background());
        const std::size_t px = frame.index(u, v);
        frame.color[px] = out.color;
        if (out.opacity >= 0.5) {
          frame.depth[px] = out.depth;
          frame.depth_valid[px] = 1;
        }
      }
    });
  }
  return frames;
}

std::vector<RgbdFrame> generate_orbit_frames(const RadianceField& field, const Camera& camera,
                                             double radius, int n_frames, double step_deg,
                                             int samples_per_ray, int n_threads) {
  return render_frames_at(field, camera, orbit_poses(radius, n_frames, step_deg),
                          samples_per_ray, n_threads);
}

Pose perturb_pose(const Pose& pose, const Tangent& tangent) {
  Pose out;
  out.rotation = pose.rotation * se3_exp(Tangent{Vec3::Zero(), tangent.phi}).rotation;
  out.translation = pose.translation + pose.rotation * tangent.rho;
  return out;
}

void TrialPlan::validate() const {
  if (scenes.empty()) throw std::invalid_argument("plan: no scenes");
  if (variants.empty()) throw std::invalid_argument("plan: no variants");
  for (double m : trans_lengths) {
    if (!(m > 0.0)) throw std::invalid_argument("plan: trans lengths must be > 0");
  }
  if (!(rot_length_min > 0.0 && rot_length_max < M_PI && rot_length_min <= rot_length_max))
    throw std::invalid_argument("plan: rot length range must lie in (0, pi)");
  if (trials_per_cell < 0) throw std::invalid_argument("plan: negative trials_per_cell");
  if (window.n_frames < 1) throw std::invalid_argument("plan: window needs >= 1 frame");
  camera.validate();
  for (const SceneSpec& s : scenes) s.validate();
}

namespace {

struct TrialTask {
  int scene_idx, mag_idx, trial_idx, variant_idx;
};

OptimizerConfig variant_config(const TrialPlan& plan, const VariantSpec& variant) {
  OptimizerConfig cfg = plan.opt;
  cfg.lambda_depth = variant.depth ? plan.opt.lambda_depth : 0.0;
  cfg.use_lowpass = variant.lowpass;
  cfg.wide = variant.wide;
  cfg.n_threads = 1;  // trials are the parallel unit
  return cfg;
}

}  // namespace

std::vector<TrialRecord> run_plan(const TrialPlan& plan, int jobs) {
  plan.validate();
  jobs = std::max(1, jobs);

  // One field and one orbit per scene, shared by all trials.
  std::vector<SceneField> fields;
  fields.reserve(plan.scenes.size());
  for (const SceneSpec& spec : plan.scenes) fields.emplace_back(spec);

  std::vector<std::vector<RgbdFrame>> orbits(fields.size());
  for (std::size_t s = 0; s < fields.size(); ++s) {
    orbits[s] = generate_orbit_frames(fields[s], plan.camera, plan.orbit_radius,
                                      plan.window.n_frames, plan.window.orbit_step_deg,
                                      plan.gt_samples_per_ray, jobs);
  }

  std::vector<TrialTask> tasks;
  for (int s = 0; s < static_cast<int>(plan.scenes.size()); ++s)
    for (int m = 0; m < static_cast<int>(plan.trans_lengths.size()); ++m)
      for (int t = 0; t < plan.trials_per_cell; ++t)
        for (int v = 0; v < static_cast<int>(plan.variants.size()); ++v)
          tasks.push_back(TrialTask{s, m, t, v});

  std::vector<TrialRecord> records(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), jobs, [&](int task_idx) {
    const TrialTask& task = tasks[static_cast<std::size_t>(task_idx)];
    const VariantSpec& variant = plan.variants[static_cast<std::size_t>(task.variant_idx)];
    const std::vector<RgbdFrame>& orbit = orbits[static_cast<std::size_t>(task.scene_idx)];
    const double magnitude = plan.trans_lengths[static_cast<std::size_t>(task.mag_idx)];

    // Seed depends on (scene, magnitude, trial) only: variants share the
    // perturbation and optimizer randomness, enabling paired comparisons.
    const std::uint64_t trial_seed =
        derive_seed(plan.master_seed,
                    {static_cast<std::uint64_t>(task.scene_idx),
                     static_cast<std::uint64_t>(task.mag_idx),
                     static_cast<std::uint64_t>(task.trial_idx)});
    Rng rot_rng(derive_seed(trial_seed, {10}));
    const double rot_len = rot_rng.uniform(plan.rot_length_min, plan.rot_length_max);
    const Tangent perturbation =
        sample_perturbation(magnitude, rot_len, derive_seed(trial_seed, {11}));

    const Pose truth = *orbit.back().world_pose;
    const Pose pose_init = perturb_pose(truth, perturbation);

    TrialRecord& rec = records[static_cast<std::size_t>(task_idx)];
    rec.variant = variant.name;
    rec.scene = plan.scenes[static_cast<std::size_t>(task.scene_idx)].name;
    rec.magnitude = magnitude;
    rec.trial = task.trial_idx;
    rec.seed = trial_seed;
    const PoseErrors initial = pose_errors(pose_init, truth);
    rec.initial_trans_err = initial.trans;
    rec.initial_rot_err = initial.rot;

    const std::span<const RgbdFrame> frames =
        variant.multi ? std::span<const RgbdFrame>(orbit)
                      : std::span<const RgbdFrame>(&orbit.back(), 1);
    const OptimizerConfig cfg = variant_config(plan, variant);
    try {
      rec.result = run(fields[static_cast<std::size_t>(task.scene_idx)], frames, pose_init,
                       truth, cfg, derive_seed(trial_seed, {12}));
      rec.converged = rec.result.converged;
      rec.convergence_step = rec.result.convergence_step;
      rec.steps_run = static_cast<int>(rec.result.steps.size());
      if (!rec.result.steps.empty()) rec.final_loss = rec.result.steps.back().loss_total;
      const PoseErrors fin = pose_errors(rec.result.final_pose, truth);
      rec.final_trans_err = fin.trans;
      rec.final_rot_err = fin.rot;
    } catch (const NumericAbortError& e) {
      rec.error_tag = e.what();
      rec.converged = false;
      rec.steps_run = e.step;
      rec.final_trans_err = initial.trans;
      rec.final_rot_err = initial.rot;
    }
  });
  return records;
}

namespace {

struct CellAccumulator {
  int n = 0;
  int n_converged = 0;
  std::vector<double> steps;
};

CellSummary finish_cell(const std::string& variant, std::optional<double> magnitude,
                        const CellAccumulator& acc) {
  CellSummary cell;
  cell.variant = variant;
  cell.magnitude = magnitude;
  cell.n_trials = acc.n;
  cell.n_converged = acc.n_converged;
  cell.convergence_pct =
      acc.n > 0 ? 100.0 * static_cast<double>(acc.n_converged) / static_cast<double>(acc.n) : 0.0;
  if (!acc.steps.empty()) {
    cell.steps_min = quantile(acc.steps, 0.0);
    cell.steps_q1 = quantile(acc.steps, 0.25);
    cell.steps_median = quantile(acc.steps, 0.5);
    cell.steps_q3 = quantile(acc.steps, 0.75);
    cell.steps_max = quantile(acc.steps, 1.0);
  }
  return cell;
}

std::vector<std::string> variant_order(const std::vector<TrialRecord>& records) {
  std::vector<std::string> order;
  for (const TrialRecord& r : records) {
    if (std::find(order.begin(), order.end(), r.variant) == order.end())
      order.push_back(r.variant);
  }
  return order;
}

std::vector<double> magnitude_order(const std::vector<TrialRecord>& records) {
  std::vector<double> mags;
  for (const TrialRecord& r : records) {
    if (std::find(mags.begin(), mags.end(), r.magnitude) == mags.end())
      mags.push_back(r.magnitude);
  }
  std::sort(mags.begin(), mags.end());
  return mags;
}

}  // namespace

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no results");
  const std::vector<std::string> variants = variant_order(records);
  const std::vector<double> magnitudes = magnitude_order(records);

  std::vector<CellSummary> cells;
  for (const std::string& variant : variants) {
    CellAccumulator combined;
    for (double magnitude : magnitudes) {
      CellAccumulator acc;
      for (const TrialRecord& r : records) {
        if (r.variant != variant || r.magnitude != magnitude) continue;
        ++acc.n;
        ++combined.n;
        if (r.converged) {
          ++acc.n_converged;
          ++combined.n_converged;
          const double steps = static_cast<double>(r.convergence_step.value_or(0));
          acc.steps.push_back(steps);
          combined.steps.push_back(steps);
        }
      }
      if (acc.n > 0) cells.push_back(finish_cell(variant, magnitude, acc));
    }
    cells.push_back(finish_cell(variant, std::nullopt, combined));
  }
  return cells;
}

std::vector<PairwiseStat> pairwise_stats(const std::vector<TrialRecord>& records) {
  const std::vector<std::string> variants = variant_order(records);
  const std::vector<double> magnitudes = magnitude_order(records);

  auto collect = [&records](const std::string& variant,
                            std::optional<double> magnitude) {
    std::vector<double> steps;
    for (const TrialRecord& r : records) {
      if (r.variant != variant || !r.converged) continue;
      if (magnitude && r.magnitude != *magnitude) continue;
      steps.push_back(static_cast<double>(r.convergence_step.value_or(0)));
    }
    return steps;
  };

  std::vector<PairwiseStat> stats;
  for (std::size_t a = 0; a < variants.size(); ++a) {
    for (std::size_t b = a + 1; b < variants.size(); ++b) {
      std::vector<std::optional<double>> groups;
      for (double m : magnitudes) groups.emplace_back(m);
      groups.emplace_back(std::nullopt);  // pooled
      for (const auto& magnitude : groups) {
        PairwiseStat st;
        st.variant_a = variants[a];
        st.variant_b = variants[b];
        st.magnitude = magnitude;
        const std::vector<double> sa = collect(variants[a], magnitude);
        const std::vector<double> sb = collect(variants[b], magnitude);
        st.n_a = static_cast<int>(sa.size());
        st.n_b = static_cast<int>(sb.size());
        if (!sa.empty() && !sb.empty()) {
          const MannWhitneyResult mw = mann_whitney_u(sa, sb);
          st.u = mw.u;
          st.p = mw.p;
        }
        stats.push_back(st);
      }
    }
  }
  return stats;
}

}  // namespace invpose
