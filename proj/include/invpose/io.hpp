// File formats:
//   Pose JSON        {"rotation": [9 row-major], "translation": [3]}
//   Tangent JSON     [rho_x, rho_y, rho_z, phi_x, phi_y, phi_z]
//   Scene JSON       {"name", "background_color", "primitives": [...]}
//   Plan JSON        benchmark plan (scenes referenced by path or inline)
//   Color images     binary PPM (P6, 8-bit)
//   Depth images     binary PGM (P5, 16-bit big-endian, millimeters, 0 = invalid)
//   Frame sidecar    {"camera", "rel_pose", optional "world_pose"}
//   results/summary  CSV, one row per trial / per cell
//   stats JSON       pairwise Mann-Whitney results

#ifndef INVPOSE_IO_HPP
#define INVPOSE_IO_HPP

#include "invpose/experiment_harness.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace invpose {

nlohmann::json load_json(const std::string& path);
void save_json(const nlohmann::json& j, const std::string& path);

nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
void save_pose(const Pose& pose, const std::string& path);
Pose load_pose(const std::string& path);

nlohmann::json tangent_to_json(const Tangent& v);
Tangent tangent_from_json(const nlohmann::json& j);

nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& j);
SceneSpec load_scene(const std::string& path);
void save_scene(const SceneSpec& scene, const std::string& path);

OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);

/// Plan JSON. "scene" (single path) or "scenes" (list of paths) are
/// resolved relative to the plan file's directory; inline scene objects are
/// accepted too.
TrialPlan load_plan(const std::string& path);

void write_ppm(const std::vector<Vec3>& pixels, int width, int height, const std::string& path);
std::vector<Vec3> read_ppm(const std::string& path, int& width, int& height);

void write_depth_pgm(const std::vector<double>& depth_m, const std::vector<std::uint8_t>& valid,
                     int width, int height, const std::string& path);
void read_depth_pgm(const std::string& path, std::vector<double>& depth_m,
                    std::vector<std::uint8_t>& valid, int& width, int& height);

/// Writes frame_NNNN.{ppm,pgm,json} into `dir`.
void save_frames(const std::vector<RgbdFrame>& frames, const std::string& dir);

/// Loads every frame_NNNN.json sidecar found in `dir`, in index order.
/// A missing depth image downgrades that frame to RGB-only (all depth
/// invalid) with a warning on stderr.
std::vector<RgbdFrame> load_frames(const std::string& dir);

void write_results_csv(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> read_results_csv(const std::string& path);

void write_summary_csv(const std::vector<CellSummary>& cells, const std::string& path);
void write_stats_json(const std::vector<PairwiseStat>& stats, const std::string& path);

}  // namespace invpose

#endif  // INVPOSE_IO_HPP
