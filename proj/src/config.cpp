#include "supcal/config.hpp"

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "supcal/errors.hpp"
#include "supcal/io.hpp"

namespace supcal {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

const json& field(const json& obj, const char* key, const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    fail("missing field " + ctx + key);
  }
  return *it;
}

void check_object(const json& obj, const std::string& ctx) {
  if (!obj.is_object()) {
    fail(ctx + " must be an object");
  }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail("unknown field " + ctx + key);
    }
  }
}

double number(const json& v, const std::string& ctx) {
  if (!v.is_number()) {
    fail(ctx + " must be a number");
  }
  return v.get<double>();
}

int integer(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) {
    fail(ctx + " must be an integer");
  }
  return v.get<int>();
}

bool boolean(const json& v, const std::string& ctx) {
  if (!v.is_boolean()) {
    fail(ctx + " must be a boolean");
  }
  return v.get<bool>();
}

Eigen::Vector3d vector3(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 3) {
    fail(ctx + " must be an array of 3 numbers");
  }
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    out[i] = number(v[static_cast<std::size_t>(i)], ctx);
  }
  return out;
}

CameraIntrinsics parse_intrinsics(const json& v) {
  check_object(v, "intrinsics");
  check_keys(v, {"fx", "fy", "cx", "cy", "width", "height"}, "intrinsics.");
  CameraIntrinsics intr;
  intr.fx = number(field(v, "fx", "intrinsics."), "intrinsics.fx");
  intr.fy = number(field(v, "fy", "intrinsics."), "intrinsics.fy");
  intr.cx = number(field(v, "cx", "intrinsics."), "intrinsics.cx");
  intr.cy = number(field(v, "cy", "intrinsics."), "intrinsics.cy");
  intr.width = integer(field(v, "width", "intrinsics."), "intrinsics.width");
  intr.height = integer(field(v, "height", "intrinsics."), "intrinsics.height");
  if (intr.width < 1 || intr.height < 1) {
    fail("intrinsics: image size must be positive");
  }
  if (!(intr.fx > 0.0) || !(intr.fy > 0.0)) {
    fail("intrinsics: focal lengths must be positive");
  }
  if (!(intr.cx >= 0.0) || !(intr.cx < intr.width) || !(intr.cy >= 0.0) ||
      !(intr.cy < intr.height)) {
    fail("intrinsics: principal point must lie inside the image");
  }
  return intr;
}

Pose parse_pose(const json& v) {
  check_object(v, "reference_extrinsics");
  check_keys(v, {"rotation", "translation"}, "reference_extrinsics.");
  const json& rot = field(v, "rotation", "reference_extrinsics.");
  if (!rot.is_array() || rot.size() != 3) {
    fail("reference_extrinsics.rotation must be a 3x3 array");
  }
  Pose pose;
  for (int r = 0; r < 3; ++r) {
    const json& row = rot[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 3) {
      fail("reference_extrinsics.rotation must be a 3x3 array");
    }
    for (int c = 0; c < 3; ++c) {
      pose.rotation(r, c) = number(row[static_cast<std::size_t>(c)],
                                   "reference_extrinsics.rotation");
    }
  }
  pose.translation = vector3(field(v, "translation", "reference_extrinsics."),
                             "reference_extrinsics.translation");
  if (!is_valid_pose(pose)) {
    fail("reference_extrinsics.rotation is not a proper rotation matrix");
  }
  return pose;
}

PointGenerator parse_generator(const json& v, const std::string& ctx) {
  if (!v.is_string()) {
    fail(ctx + " must be a string");
  }
  const std::string s = v.get<std::string>();
  if (s == "box") return PointGenerator::kBox;
  if (s == "plane") return PointGenerator::kPlane;
  if (s == "strips") return PointGenerator::kStrips;
  if (s == "blobs") return PointGenerator::kBlobs;
  fail(ctx + ": unknown generator '" + s +
       "' (expected box, plane, strips, or blobs)");
}

ClassLayout parse_class(const json& v, std::size_t index) {
  const std::string ctx = "classes[" + std::to_string(index) + "].";
  check_object(v, "classes[" + std::to_string(index) + "]");
  check_keys(v,
             {"id", "name", "residual_sigma", "outlier_rate", "outlier_sigma",
              "count", "generator", "extent_min", "extent_max", "strip_count",
              "strip_radius", "blob_count", "blob_sigma"},
             ctx);
  ClassLayout layout;
  layout.semantic.id = integer(field(v, "id", ctx), ctx + "id");
  const json& name = field(v, "name", ctx);
  if (!name.is_string()) {
    fail(ctx + "name must be a string");
  }
  layout.semantic.name = name.get<std::string>();
  layout.semantic.residual_sigma =
      number(field(v, "residual_sigma", ctx), ctx + "residual_sigma");
  layout.semantic.outlier_rate =
      number(field(v, "outlier_rate", ctx), ctx + "outlier_rate");
  layout.semantic.outlier_sigma =
      number(field(v, "outlier_sigma", ctx), ctx + "outlier_sigma");
  const int count = integer(field(v, "count", ctx), ctx + "count");
  if (count < 1) {
    fail(ctx + "count must be >= 1");
  }
  layout.count = static_cast<std::size_t>(count);
  layout.generator = parse_generator(field(v, "generator", ctx), ctx + "generator");
  layout.extent_min = vector3(field(v, "extent_min", ctx), ctx + "extent_min");
  layout.extent_max = vector3(field(v, "extent_max", ctx), ctx + "extent_max");
  if (v.contains("strip_count")) {
    layout.strip_count = integer(v["strip_count"], ctx + "strip_count");
  }
  if (v.contains("strip_radius")) {
    layout.strip_radius = number(v["strip_radius"], ctx + "strip_radius");
  }
  if (v.contains("blob_count")) {
    layout.blob_count = integer(v["blob_count"], ctx + "blob_count");
  }
  if (v.contains("blob_sigma")) {
    layout.blob_sigma = number(v["blob_sigma"], ctx + "blob_sigma");
  }

  if (!(layout.semantic.residual_sigma >= 0.0)) {
    fail(ctx + "residual_sigma must be >= 0");
  }
  if (!(layout.semantic.outlier_rate >= 0.0) ||
      !(layout.semantic.outlier_rate <= 1.0)) {
    fail(ctx + "outlier_rate must be in [0, 1]");
  }
  if (!(layout.semantic.outlier_sigma >= layout.semantic.residual_sigma)) {
    fail(ctx + "outlier_sigma must be >= residual_sigma");
  }
  for (int axis = 0; axis < 3; ++axis) {
    if (!(layout.extent_min[axis] <= layout.extent_max[axis])) {
      fail(ctx + "extent_min must be <= extent_max per axis");
    }
  }
  if (layout.strip_count < 1 || layout.blob_count < 1) {
    fail(ctx + "strip_count and blob_count must be >= 1");
  }
  if (!(layout.strip_radius >= 0.0) || !(layout.blob_sigma > 0.0)) {
    fail(ctx + "strip_radius must be >= 0 and blob_sigma > 0");
  }
  return layout;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  check_object(doc, "document");
  check_keys(doc,
             {"intrinsics", "reference_extrinsics", "classes", "perturbation",
              "support_map", "sampling", "refine", "n_frames", "n_runs",
              "base_seed"},
             "");

  ExperimentConfig cfg;
  cfg.scene.intrinsics = parse_intrinsics(field(doc, "intrinsics", ""));
  cfg.scene.reference_extrinsics =
      parse_pose(field(doc, "reference_extrinsics", ""));

  const json& classes = field(doc, "classes", "");
  if (!classes.is_array() || classes.empty()) {
    fail("classes must be a nonempty array");
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    cfg.scene.classes.push_back(parse_class(classes[i], i));
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.scene.classes[j].semantic.id ==
          cfg.scene.classes[i].semantic.id) {
        fail("classes: duplicate class id " +
             std::to_string(cfg.scene.classes[i].semantic.id));
      }
    }
  }

  if (doc.contains("perturbation")) {
    const json& v = doc["perturbation"];
    check_object(v, "perturbation");
    check_keys(v, {"translation_magnitude", "rotation_magnitude_deg"},
               "perturbation.");
    cfg.perturbation.translation_magnitude =
        number(field(v, "translation_magnitude", "perturbation."),
               "perturbation.translation_magnitude");
    cfg.perturbation.rotation_magnitude_deg =
        number(field(v, "rotation_magnitude_deg", "perturbation."),
               "perturbation.rotation_magnitude_deg");
    if (!(cfg.perturbation.translation_magnitude >= 0.0) ||
        !(cfg.perturbation.rotation_magnitude_deg >= 0.0)) {
      fail("perturbation magnitudes must be >= 0");
    }
  }

  if (doc.contains("support_map")) {
    const json& v = doc["support_map"];
    check_object(v, "support_map");
    check_keys(v, {"sigma", "tau", "downsample"}, "support_map.");
    if (v.contains("sigma")) {
      cfg.map.sigma = number(v["sigma"], "support_map.sigma");
    }
    if (v.contains("tau")) {
      cfg.map.tau = number(v["tau"], "support_map.tau");
    }
    if (v.contains("downsample")) {
      cfg.map.downsample = integer(v["downsample"], "support_map.downsample");
    }
    if (!(cfg.map.sigma > 0.0) || !(cfg.map.tau > 0.0) ||
        cfg.map.downsample < 1) {
      fail("support_map: sigma and tau must be > 0, downsample >= 1");
    }
  }

  if (doc.contains("sampling")) {
    const json& v = doc["sampling"];
    check_object(v, "sampling");
    check_keys(v, {"k", "with_replacement", "divide_by_probability"},
               "sampling.");
    if (v.contains("k")) {
      cfg.sampling.k = integer(v["k"], "sampling.k");
    }
    if (v.contains("with_replacement")) {
      cfg.sampling.with_replacement =
          boolean(v["with_replacement"], "sampling.with_replacement");
    }
    if (v.contains("divide_by_probability")) {
      cfg.divide_by_probability =
          boolean(v["divide_by_probability"], "sampling.divide_by_probability");
    }
    if (cfg.sampling.k < 1) {
      fail("sampling.k must be >= 1");
    }
  }

  if (doc.contains("refine")) {
    const json& v = doc["refine"];
    check_object(v, "refine");
    check_keys(v,
               {"max_iterations", "cost_tolerance", "step_tolerance",
                "initial_damping", "damping_up", "damping_down", "huber_delta"},
               "refine.");
    RefineOptions& opts = cfg.refine;
    if (v.contains("max_iterations")) {
      opts.max_iterations = integer(v["max_iterations"], "refine.max_iterations");
    }
    if (v.contains("cost_tolerance")) {
      opts.cost_tolerance = number(v["cost_tolerance"], "refine.cost_tolerance");
    }
    if (v.contains("step_tolerance")) {
      opts.step_tolerance = number(v["step_tolerance"], "refine.step_tolerance");
    }
    if (v.contains("initial_damping")) {
      opts.initial_damping = number(v["initial_damping"], "refine.initial_damping");
    }
    if (v.contains("damping_up")) {
      opts.damping_up = number(v["damping_up"], "refine.damping_up");
    }
    if (v.contains("damping_down")) {
      opts.damping_down = number(v["damping_down"], "refine.damping_down");
    }
    if (v.contains("huber_delta")) {
      opts.huber_delta = number(v["huber_delta"], "refine.huber_delta");
    }
    if (opts.max_iterations < 1 || !(opts.cost_tolerance > 0.0) ||
        !(opts.step_tolerance > 0.0) || !(opts.initial_damping > 0.0) ||
        !(opts.damping_up > 1.0) || !(opts.damping_down > 0.0) ||
        !(opts.damping_down < 1.0)) {
      fail("refine: invalid solver options");
    }
  }

  if (doc.contains("n_frames")) {
    cfg.n_frames = integer(doc["n_frames"], "n_frames");
    if (cfg.n_frames < 1) {
      fail("n_frames must be >= 1");
    }
  }
  if (doc.contains("n_runs")) {
    cfg.n_runs = integer(doc["n_runs"], "n_runs");
    if (cfg.n_runs < 1) {
      fail("n_runs must be >= 1");
    }
  }
  if (doc.contains("base_seed")) {
    const json& v = doc["base_seed"];
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      fail("base_seed must be an unsigned integer");
    }
    if (v.is_number_integer() && !v.is_number_unsigned() &&
        v.get<std::int64_t>() < 0) {
      fail("base_seed must be >= 0");
    }
    cfg.base_seed = v.get<std::uint64_t>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

}  // namespace supcal
