// invpose command-line tool: render synthetic RGB-D frames from analytic
// scenes, localize a camera against a scene from an initial pose guess, and
// run full benchmark plans with summary statistics.
//
// Exit codes: 0 success, 2 usage/config error, 3 numerical abort.

#include "invpose/experiment_harness.hpp"
#include "invpose/io.hpp"
#include "invpose/log.hpp"
#include "invpose/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace invpose;

namespace {

struct RenderArgs {
  std::string scene_path, out_dir;
  std::string pose_path, camera_path;
  int orbit = 1;
  double orbit_step_deg = 15.0;
  double radius = 4.0;
  int samples = 192;
  int jobs = hardware_threads();
};

int cmd_render(const RenderArgs& args) {
  const SceneSpec spec = load_scene(args.scene_path);
  const SceneField field(spec);
  Camera camera;
  if (!args.camera_path.empty()) camera = camera_from_json(load_json(args.camera_path));
  fs::create_directories(args.out_dir);

  std::vector<RgbdFrame> frames;
  if (!args.pose_path.empty()) {
    frames = render_frames_at(field, camera, {load_pose(args.pose_path)}, args.samples,
                              args.jobs);
  } else {
    frames = generate_orbit_frames(field, camera, args.radius, args.orbit, args.orbit_step_deg,
                                   args.samples, args.jobs);
  }
  save_frames(frames, args.out_dir);
  save_pose(*frames.back().world_pose, (fs::path(args.out_dir) / "pose.json").string());
  log_info("wrote " + std::to_string(frames.size()) + " frame(s) to " + args.out_dir);
  return 0;
}

struct LocalizeArgs {
  std::string frames_dir, out_dir;
  std::string init_path, truth_path, config_path;
  double perturb_trans = -1.0, perturb_rot = 0.0;
  std::uint64_t seed = 0;
  int jobs = hardware_threads();
};

int cmd_localize(const LocalizeArgs& args) {
  std::vector<RgbdFrame> frames = load_frames(args.frames_dir);

  // The scene to localize against comes from the optimizer config.
  OptimizerConfig config;
  std::string scene_path;
  if (!args.config_path.empty()) {
    const auto j = load_json(args.config_path);
    config = optimizer_config_from_json(j);
    scene_path = j.value("scene", std::string());
  }
  if (scene_path.empty())
    throw std::invalid_argument("localize: config must name a \"scene\" to render against");
  if (fs::path(scene_path).is_relative() && !args.config_path.empty())
    scene_path = (fs::path(args.config_path).parent_path() / scene_path).string();
  config.n_threads = args.jobs;

  const SceneField field(load_scene(scene_path));

  std::optional<Pose> truth;
  if (!args.truth_path.empty()) {
    truth = load_pose(args.truth_path);
  } else if (frames.back().world_pose) {
    truth = frames.back().world_pose;
  }

  Pose init;
  if (!args.init_path.empty()) {
    init = load_pose(args.init_path);
  } else if (args.perturb_trans >= 0.0) {
    if (!truth)
      throw std::invalid_argument("localize: --perturb-trans needs a ground-truth pose");
    const Tangent t = sample_perturbation(args.perturb_trans, args.perturb_rot, args.seed);
    init = perturb_pose(*truth, t);
  } else if (truth) {
    init = *truth;
  } else {
    throw std::invalid_argument("localize: provide --init or frames with a world_pose");
  }

  fs::create_directories(args.out_dir);
  TrialResult result = run(field, frames, init, truth, config, args.seed);
  write_trace_csv(result, (fs::path(args.out_dir) / "trace.csv").string());
  save_pose(result.final_pose, (fs::path(args.out_dir) / "final_pose.json").string());

  nlohmann::json summary{{"converged", result.converged},
                         {"steps_run", result.steps.size()},
                         {"stopped_by_heuristic", result.stopped_by_heuristic}};
  if (result.convergence_step) summary["convergence_step"] = *result.convergence_step;
  if (truth) {
    const PoseErrors e = pose_errors(result.final_pose, *truth);
    summary["final_trans_err_m"] = e.trans;
    summary["final_rot_err_rad"] = e.rot;
  }
  save_json(summary, (fs::path(args.out_dir) / "result.json").string());
  log_info(std::string("localize finished, converged=") + (result.converged ? "yes" : "no"));
  return 0;
}

struct BenchArgs {
  std::string plan_path, out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = hardware_threads();
  bool traces = false;
};

int cmd_bench(const BenchArgs& args) {
  TrialPlan plan = load_plan(args.plan_path);
  if (args.seed) plan.master_seed = *args.seed;
  fs::create_directories(args.out_dir);

  const std::vector<TrialRecord> records = run_plan(plan, args.jobs);
  write_results_csv(records, (fs::path(args.out_dir) / "results.csv").string());
  write_summary_csv(summarize(records), (fs::path(args.out_dir) / "summary.csv").string());
  write_stats_json(pairwise_stats(records), (fs::path(args.out_dir) / "stats.json").string());

  if (args.traces) {
    for (const TrialRecord& r : records) {
      char name[256];
      std::snprintf(name, sizeof(name), "trace_%s_%s_%g_%d.csv", r.variant.c_str(),
                    r.scene.c_str(), r.magnitude, r.trial);
      write_trace_csv(r.result, (fs::path(args.out_dir) / name).string());
    }
  }

  int aborted = 0;
  for (const TrialRecord& r : records) {
    if (!r.error_tag.empty()) ++aborted;
  }
  log_info("bench finished: " + std::to_string(records.size()) + " trials, " +
           std::to_string(aborted) + " aborted");
  if (!records.empty() && aborted == static_cast<int>(records.size())) {
    std::cerr << "all trials aborted\n";
    return 3;
  }
  return 0;
}

struct StatsArgs {
  std::string results_path, out_dir;
};

int cmd_stats(const StatsArgs& args) {
  const std::vector<TrialRecord> records = read_results_csv(args.results_path);
  if (records.empty()) throw std::invalid_argument("stats: empty results file");
  fs::create_directories(args.out_dir);
  write_summary_csv(summarize(records), (fs::path(args.out_dir) / "summary.csv").string());
  write_stats_json(pairwise_stats(records), (fs::path(args.out_dir) / "stats.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invpose: camera pose estimation against differentiable radiance fields"};
  app.require_subcommand(1);

  RenderArgs render_args;
  CLI::App* render = app.add_subcommand("render", "render RGB-D frames from a scene");
  render->add_option("--scene", render_args.scene_path, "scene JSON")->required();
  render->add_option("--out", render_args.out_dir, "output directory")->required();
  render->add_option("--pose", render_args.pose_path, "camera pose JSON (default: orbit)");
  render->add_option("--camera", render_args.camera_path, "camera intrinsics JSON");
  render->add_option("--orbit", render_args.orbit, "number of orbit frames");
  render->add_option("--orbit-step", render_args.orbit_step_deg, "orbit step, degrees");
  render->add_option("--radius", render_args.radius, "orbit radius, m");
  render->add_option("--samples", render_args.samples, "samples per ray");
  render->add_option("--jobs", render_args.jobs, "worker threads");

  LocalizeArgs localize_args;
  CLI::App* localize = app.add_subcommand("localize", "estimate the last frame's pose");
  localize->add_option("--frames", localize_args.frames_dir, "frames directory")->required();
  localize->add_option("--out", localize_args.out_dir, "output directory")->required();
  localize->add_option("--config", localize_args.config_path,
                       "optimizer config JSON (must name the scene)")->required();
  localize->add_option("--init", localize_args.init_path, "initial pose JSON");
  localize->add_option("--truth", localize_args.truth_path, "ground-truth pose JSON");
  localize->add_option("--perturb-trans", localize_args.perturb_trans,
                       "perturb the ground truth by this translation length, m");
  localize->add_option("--perturb-rot", localize_args.perturb_rot,
                       "rotational perturbation length, rad");
  localize->add_option("--seed", localize_args.seed, "random seed");
  localize->add_option("--jobs", localize_args.jobs, "worker threads");

  BenchArgs bench_args;
  std::uint64_t bench_seed = 0;
  CLI::App* bench = app.add_subcommand("bench", "run a benchmark plan");
  bench->add_option("--plan", bench_args.plan_path, "plan JSON")->required();
  bench->add_option("--out", bench_args.out_dir, "output directory")->required();
  CLI::Option* seed_opt = bench->add_option("--seed", bench_seed, "master seed override");
  bench->add_option("--jobs", bench_args.jobs, "worker threads");
  bench->add_flag("--traces", bench_args.traces, "export per-trial trace CSVs");

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand("stats", "recompute summary/stats from results.csv");
  stats->add_option("--results", stats_args.results_path, "results.csv from bench")->required();
  stats->add_option("--out", stats_args.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (*render) return cmd_render(render_args);
    if (*localize) return cmd_localize(localize_args);
    if (*bench) {
      if (seed_opt->count() > 0) bench_args.seed = bench_seed;
      return cmd_bench(bench_args);
    }
    if (*stats) return cmd_stats(stats_args);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const NumericAbortError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
