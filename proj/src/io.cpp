#include "invpose/io.hpp"

#include "invpose/log.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace invpose {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument(field + ": expected an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void save_json(const json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

json pose_to_json(const Pose& pose) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  return json{{"rotation", rot}, {"translation", vec3_to_json(pose.translation)}};
}

Pose pose_from_json(const json& j) {
  const auto& rot = j.at("rotation");
  if (!rot.is_array() || rot.size() != 9)
    throw std::invalid_argument("pose.rotation: expected 9 row-major numbers");
  Pose pose;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      pose.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)].get<double>();
  pose.translation = vec3_from_json(j.at("translation"), "pose.translation");
  if (pose.orthonormality_defect() > 1e-6)
    throw std::invalid_argument("pose.rotation: not orthonormal");
  return pose;
}

void save_pose(const Pose& pose, const std::string& path) {
  save_json(pose_to_json(pose), path);
}

Pose load_pose(const std::string& path) { return pose_from_json(load_json(path)); }

json tangent_to_json(const Tangent& v) {
  return json::array({v.rho.x(), v.rho.y(), v.rho.z(), v.phi.x(), v.phi.y(), v.phi.z()});
}

Tangent tangent_from_json(const json& j) {
  if (!j.is_array() || j.size() != 6)
    throw std::invalid_argument("tangent: expected an array of 6 numbers");
  Tangent v;
  for (int k = 0; k < 3; ++k) {
    v.rho[k] = j[static_cast<std::size_t>(k)].get<double>();
    v.phi[k] = j[static_cast<std::size_t>(k + 3)].get<double>();
  }
  return v;
}

json camera_to_json(const Camera& camera) {
  return json{{"fx", camera.fx},       {"fy", camera.fy},     {"cx", camera.cx},
              {"cy", camera.cy},       {"width", camera.width}, {"height", camera.height},
              {"near", camera.near},   {"far", camera.far}};
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.near = j.at("near").get<double>();
  c.far = j.at("far").get<double>();
  c.validate();
  return c;
}

json scene_to_json(const SceneSpec& scene) {
  json prims = json::array();
  for (const Primitive& p : scene.primitives) {
    json jp;
    jp["shape"] = p.shape == Primitive::Shape::Sphere ? "sphere" : "box";
    jp["center"] = vec3_to_json(p.center);
    if (p.shape == Primitive::Shape::Sphere) {
      jp["size"] = p.size.x();
    } else {
      jp["size"] = vec3_to_json(p.size);
    }
    jp["sigma_max"] = p.sigma_max;
    jp["edge_softness"] = p.edge_softness;
    jp["color"] = vec3_to_json(p.color);
    prims.push_back(jp);
  }
  return json{{"name", scene.name},
              {"background_color", vec3_to_json(scene.background_color)},
              {"primitives", prims}};
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec scene;
  scene.name = j.value("name", "");
  if (j.contains("background_color"))
    scene.background_color = vec3_from_json(j.at("background_color"), "background_color");
  if (!j.contains("primitives") || !j.at("primitives").is_array())
    throw std::invalid_argument("scene: missing \"primitives\" array");
  std::size_t idx = 0;
  for (const json& jp : j.at("primitives")) {
    const std::string where = "primitives[" + std::to_string(idx++) + "]";
    Primitive p;
    const std::string shape = jp.at("shape").get<std::string>();
    if (shape == "sphere") {
      p.shape = Primitive::Shape::Sphere;
    } else if (shape == "box") {
      p.shape = Primitive::Shape::Box;
    } else {
      throw std::invalid_argument(where + ".shape: expected \"sphere\" or \"box\"");
    }
    p.center = vec3_from_json(jp.at("center"), where + ".center");
    const json& size = jp.at("size");
    if (size.is_number()) {
      p.size = Vec3::Constant(size.get<double>());
    } else {
      p.size = vec3_from_json(size, where + ".size");
    }
    if (jp.contains("sigma_max")) p.sigma_max = jp.at("sigma_max").get<double>();
    if (jp.contains("edge_softness")) p.edge_softness = jp.at("edge_softness").get<double>();
    if (jp.contains("color")) p.color = vec3_from_json(jp.at("color"), where + ".color");
    scene.primitives.push_back(p);
  }
  scene.validate();
  return scene;
}

SceneSpec load_scene(const std::string& path) {
  SceneSpec scene = scene_from_json(load_json(path));
  if (scene.name.empty()) scene.name = fs::path(path).stem().string();
  return scene;
}

void save_scene(const SceneSpec& scene, const std::string& path) {
  save_json(scene_to_json(scene), path);
}

OptimizerConfig optimizer_config_from_json(const json& j) {
  OptimizerConfig c;
  c.max_steps = j.value("max_steps", c.max_steps);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.rays_per_step = j.value("rays_per_step", c.rays_per_step);
  c.samples_per_ray = j.value("samples_per_ray", c.samples_per_ray);
  c.stop_window = j.value("stop_window", c.stop_window);
  c.stop_loss_threshold = j.value("stop_loss_threshold", c.stop_loss_threshold);
  c.lambda_depth = j.value("lambda_depth", c.lambda_depth);
  c.huber_color = j.value("huber_color", c.huber_color);
  c.huber_depth = j.value("huber_depth", c.huber_depth);
  c.depth_mask_fade = j.value("depth_mask_fade", c.depth_mask_fade);
  c.depth_miss_residual = j.value("depth_miss_residual", c.depth_miss_residual);
  c.wide = j.value("wide", c.wide);
  c.use_lowpass = j.value("use_lowpass", c.use_lowpass);
  c.lowpass_sigma = j.value("lowpass_sigma", c.lowpass_sigma);
  c.lowpass_taps = j.value("lowpass_taps", c.lowpass_taps);
  c.lowpass_seed = j.value("lowpass_seed", c.lowpass_seed);
  return c;
}

TrialPlan load_plan(const std::string& path) {
  const json j = load_json(path);
  const fs::path base = fs::path(path).parent_path();

  TrialPlan plan;
  auto add_scene = [&plan, &base](const json& entry) {
    if (entry.is_string()) {
      fs::path sp(entry.get<std::string>());
      if (sp.is_relative()) sp = base / sp;
      plan.scenes.push_back(load_scene(sp.string()));
    } else {
      plan.scenes.push_back(scene_from_json(entry));
    }
  };
  if (j.contains("scenes")) {
    for (const json& entry : j.at("scenes")) add_scene(entry);
  } else if (j.contains("scene")) {
    add_scene(j.at("scene"));
  } else {
    throw std::invalid_argument("plan: missing \"scene\" or \"scenes\"");
  }
  for (std::size_t i = 0; i < plan.scenes.size(); ++i) {
    if (plan.scenes[i].name.empty()) plan.scenes[i].name = "scene_" + std::to_string(i);
  }

  if (j.contains("trans_lengths"))
    plan.trans_lengths = j.at("trans_lengths").get<std::vector<double>>();
  if (j.contains("rot_length_range")) {
    const auto& r = j.at("rot_length_range");
    if (!r.is_array() || r.size() != 2)
      throw std::invalid_argument("plan.rot_length_range: expected [min, max]");
    plan.rot_length_min = r[0].get<double>();
    plan.rot_length_max = r[1].get<double>();
  }
  plan.trials_per_cell = j.value("trials_per_cell", plan.trials_per_cell);
  if (j.contains("window")) {
    plan.window.n_frames = j.at("window").value("n_frames", plan.window.n_frames);
    plan.window.orbit_step_deg =
        j.at("window").value("orbit_step_deg", plan.window.orbit_step_deg);
  }
  if (j.contains("variants")) {
    for (const json& jv : j.at("variants")) {
      VariantSpec v;
      v.name = jv.at("name").get<std::string>();
      v.depth = jv.value("depth", v.depth);
      v.lowpass = jv.value("lowpass", v.lowpass);
      v.wide = jv.value("wide", v.wide);
      v.multi = jv.value("multi", v.multi);
      plan.variants.push_back(v);
    }
  } else {
    plan.variants.push_back(VariantSpec{"default", true, false, false, false});
  }
  plan.master_seed = j.value("master_seed", plan.master_seed);
  if (j.contains("optimizer")) plan.opt = optimizer_config_from_json(j.at("optimizer"));
  if (j.contains("camera")) plan.camera = camera_from_json(j.at("camera"));
  plan.orbit_radius = j.value("orbit_radius", plan.orbit_radius);
  plan.gt_samples_per_ray = j.value("gt_samples_per_ray", plan.gt_samples_per_ray);
  plan.validate();
  return plan;
}

void write_ppm(const std::vector<Vec3>& pixels, int width, int height, const std::string& path) {
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw std::invalid_argument("write_ppm: pixel count mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "P6\n" << width << " " << height << "\n255\n";
  for (const Vec3& c : pixels) {
    for (int k = 0; k < 3; ++k) {
      const double v = std::clamp(c[k], 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

namespace {

void read_pnm_header(std::istream& is, const std::string& magic, int& width, int& height,
                     int& maxval) {
  std::string m;
  is >> m;
  if (m != magic) throw std::invalid_argument("unexpected image magic: " + m);
  auto next_token = [&is]() {
    std::string token;
    while (is >> token) {
      if (token[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return token;
    }
    throw std::invalid_argument("truncated image header");
  };
  width = std::stoi(next_token());
  height = std::stoi(next_token());
  maxval = std::stoi(next_token());
  is.get();  // single whitespace before binary data
}

}  // namespace

std::vector<Vec3> read_ppm(const std::string& path, int& width, int& height) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  int maxval = 0;
  read_pnm_header(is, "P6", width, height, maxval);
  if (maxval != 255) throw std::invalid_argument(path + ": expected 8-bit PPM");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<Vec3> pixels(n);
  std::vector<unsigned char> raw(n * 3);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw std::runtime_error(path + ": truncated pixel data");
  for (std::size_t i = 0; i < n; ++i) {
    pixels[i] = Vec3(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]) / 255.0;
  }
  return pixels;
}

void write_depth_pgm(const std::vector<double>& depth_m, const std::vector<std::uint8_t>& valid,
                     int width, int height, const std::string& path) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (depth_m.size() != n || valid.size() != n)
    throw std::invalid_argument("write_depth_pgm: size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "P5\n" << width << " " << height << "\n65535\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::uint16_t mm = 0;
    if (valid[i]) {
      const long v = std::lround(std::clamp(depth_m[i], 0.0, 65.535) * 1000.0);
      mm = static_cast<std::uint16_t>(std::max(1L, v));  // 0 is reserved for invalid
    }
    os.put(static_cast<char>(mm >> 8));
    os.put(static_cast<char>(mm & 0xff));
  }
}

void read_depth_pgm(const std::string& path, std::vector<double>& depth_m,
                    std::vector<std::uint8_t>& valid, int& width, int& height) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  int maxval = 0;
  read_pnm_header(is, "P5", width, height, maxval);
  if (maxval != 65535) throw std::invalid_argument(path + ": expected 16-bit PGM");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  depth_m.assign(n, 0.0);
  valid.assign(n, 0);
  std::vector<unsigned char> raw(n * 2);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw std::runtime_error(path + ": truncated pixel data");
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t mm = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    if (mm != 0) {
      depth_m[i] = static_cast<double>(mm) / 1000.0;
      valid[i] = 1;
    }
  }
}

namespace {

std::string frame_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu", index);
  return buf;
}

}  // namespace

void save_frames(const std::vector<RgbdFrame>& frames, const std::string& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const RgbdFrame& f = frames[i];
    const std::string stem = (fs::path(dir) / frame_stem(i)).string();
    write_ppm(f.color, f.camera.width, f.camera.height, stem + ".ppm");
    write_depth_pgm(f.depth, f.depth_valid, f.camera.width, f.camera.height, stem + ".pgm");
    json side{{"camera", camera_to_json(f.camera)}, {"rel_pose", pose_to_json(f.rel_pose)}};
    if (f.world_pose) side["world_pose"] = pose_to_json(*f.world_pose);
    save_json(side, stem + ".json");
  }
}

std::vector<RgbdFrame> load_frames(const std::string& dir) {
  std::vector<RgbdFrame> frames;
  for (std::size_t i = 0;; ++i) {
    const std::string stem = (fs::path(dir) / frame_stem(i)).string();
    if (!fs::exists(stem + ".json")) break;
    const json side = load_json(stem + ".json");
    RgbdFrame f;
    f.camera = camera_from_json(side.at("camera"));
    f.rel_pose = pose_from_json(side.at("rel_pose"));
    if (side.contains("world_pose")) f.world_pose = pose_from_json(side.at("world_pose"));

    int w = 0, h = 0;
    f.color = read_ppm(stem + ".ppm", w, h);
    if (w != f.camera.width || h != f.camera.height)
      throw std::invalid_argument(stem + ".ppm: size disagrees with sidecar camera");
    if (fs::exists(stem + ".pgm")) {
      read_depth_pgm(stem + ".pgm", f.depth, f.depth_valid, w, h);
      if (w != f.camera.width || h != f.camera.height)
        throw std::invalid_argument(stem + ".pgm: size disagrees with sidecar camera");
    } else {
      log_info("missing depth image " + stem + ".pgm, frame downgraded to RGB-only");
      const std::size_t n =
          static_cast<std::size_t>(f.camera.width) * static_cast<std::size_t>(f.camera.height);
      f.depth.assign(n, 0.0);
      f.depth_valid.assign(n, 0);
    }
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw std::runtime_error(dir + ": no frame_0000.json found");
  return frames;
}

void write_results_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "variant,scene,magnitude_m,trial,seed,initial_trans_err_m,initial_rot_err_rad,"
        "converged,convergence_step,steps_run,final_loss,final_trans_err_m,final_rot_err_rad,"
        "error\n";
  for (const TrialRecord& r : records) {
    os << r.variant << ',' << r.scene << ',' << format_double(r.magnitude) << ',' << r.trial
       << ',' << r.seed << ',' << format_double(r.initial_trans_err) << ','
       << format_double(r.initial_rot_err) << ',' << (r.converged ? 1 : 0) << ','
       << (r.convergence_step ? std::to_string(*r.convergence_step) : std::string()) << ','
       << r.steps_run << ',' << format_double(r.final_loss) << ','
       << format_double(r.final_trans_err) << ',' << format_double(r.final_rot_err) << ','
       << r.error_tag << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<TrialRecord> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument(path + ": empty results file");

  std::vector<TrialRecord> records;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() < 13) throw std::invalid_argument(path + ": malformed row: " + line);
    TrialRecord r;
    r.variant = f[0];
    r.scene = f[1];
    r.magnitude = std::stod(f[2]);
    r.trial = std::stoi(f[3]);
    r.seed = std::stoull(f[4]);
    r.initial_trans_err = std::stod(f[5]);
    r.initial_rot_err = std::stod(f[6]);
    r.converged = f[7] == "1";
    if (!f[8].empty()) r.convergence_step = std::stoi(f[8]);
    r.steps_run = std::stoi(f[9]);
    r.final_loss = std::stod(f[10]);
    r.final_trans_err = std::stod(f[11]);
    r.final_rot_err = std::stod(f[12]);
    if (f.size() > 13) r.error_tag = f[13];
    records.push_back(std::move(r));
  }
  return records;
}

void write_summary_csv(const std::vector<CellSummary>& cells, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "variant,magnitude_m,n_trials,n_converged,convergence_pct,steps_min,steps_q1,"
        "steps_median,steps_q3,steps_max\n";
  auto opt_field = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  char pct[32];
  for (const CellSummary& c : cells) {
    std::snprintf(pct, sizeof(pct), "%.4f", c.convergence_pct);
    os << c.variant << ',' << (c.magnitude ? format_double(*c.magnitude) : "combined") << ','
       << c.n_trials << ',' << c.n_converged << ',' << pct << ',' << opt_field(c.steps_min)
       << ',' << opt_field(c.steps_q1) << ',' << opt_field(c.steps_median) << ','
       << opt_field(c.steps_q3) << ',' << opt_field(c.steps_max) << '\n';
  }
}

void write_stats_json(const std::vector<PairwiseStat>& stats, const std::string& path) {
  json pairs = json::array();
  for (const PairwiseStat& s : stats) {
    json entry{{"variant_a", s.variant_a}, {"variant_b", s.variant_b},
               {"n_a", s.n_a},             {"n_b", s.n_b}};
    entry["magnitude"] = s.magnitude ? json(*s.magnitude) : json("pooled");
    entry["u"] = s.u ? json(*s.u) : json(nullptr);
    entry["p"] = s.p ? json(*s.p) : json(nullptr);
    pairs.push_back(entry);
  }
  save_json(json{{"pairs", pairs}}, path);
}

}  // namespace invpose
