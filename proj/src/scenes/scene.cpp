// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/scenes/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "json_lines.hpp"

namespace navloop::scenes {

using json = nlohmann::json;
using sim::Bounds;
using sim::ShapeKind;
using sim::Vec2;

namespace {

constexpr double kPi = std::numbers::pi;
// Clearance added to the robot radius when sampling spawn and goal points.
constexpr double kSpawnMargin = 0.1;
// Free space kept between a new wandering obstacle and the robot.
constexpr double kRobotKeepout = 1.0;

struct Violation {
  std::string pointer;
  std::string message;
};

// Thrown while decoding a document; carries the JSON pointer of the field.
struct FieldError {
  std::string pointer;
  std::string message;
};

bool region_inside(const Bounds& r, const Bounds& outer) {
  return r.xmin >= outer.xmin && r.ymin >= outer.ymin && r.xmax <= outer.xmax &&
         r.ymax <= outer.ymax && r.xmin <= r.xmax && r.ymin <= r.ymax;
}

bool is_convex(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()], c = poly[(i + 2) % poly.size()];
    const double z = sim::cross(b - a, c - b);
    if (std::abs(z) < 1e-12) continue;
    const int s = z > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return sign != 0;
}

sim::World static_world(const SceneSpec& spec, const sim::SimParams& params,
                        std::uint64_t seed = 0) {
  sim::World w(params, spec.bounds, seed);
  if (spec.boundary_walls) {
    const Bounds& b = spec.bounds;
    w.add_wall({{b.xmin, b.ymin}, {b.xmax, b.ymin}});
    w.add_wall({{b.xmax, b.ymin}, {b.xmax, b.ymax}});
    w.add_wall({{b.xmax, b.ymax}, {b.xmin, b.ymax}});
    w.add_wall({{b.xmin, b.ymax}, {b.xmin, b.ymin}});
  }
  for (const auto& s : spec.walls) w.add_wall(s);
  for (const auto& p : spec.obstacles) w.add_polygon(p);
  return w;
}

bool region_has_free_point(const sim::World& w, const Bounds& r, double clearance) {
  constexpr int kGrid = 20;
  for (int i = 0; i <= kGrid; ++i) {
    for (int j = 0; j <= kGrid; ++j) {
      const Vec2 p{r.xmin + r.width() * i / kGrid, r.ymin + r.height() * j / kGrid};
      if (!w.disc_collides(p, clearance)) return true;
    }
  }
  return false;
}

std::optional<Violation> find_violation(const SceneSpec& s) {
  if (s.name.empty()) return Violation{"/name", "name must be non-empty"};
  if (!(s.bounds.xmax > s.bounds.xmin && s.bounds.ymax > s.bounds.ymin)) {
    return Violation{"/bounds", "bounds must have positive extent"};
  }
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    if (!is_convex(s.obstacles[i])) {
      return Violation{"/obstacles/" + std::to_string(i),
                       "obstacle must be a convex polygon with at least 3 vertices"};
    }
  }
  for (std::size_t i = 0; i < s.dynamic.size(); ++i) {
    const auto& d = s.dynamic[i];
    const std::string at = "/dynamic/" + std::to_string(i);
    if (d.count < 0) return Violation{at + "/count", "count must be >= 0"};
    if (!(d.size_min > 0.0 && d.size_min <= d.size_max)) {
      return Violation{at + "/size", "size range must satisfy 0 < min <= max"};
    }
    if (!(d.speed_min >= 0.0 && d.speed_min <= d.speed_max)) {
      return Violation{at + "/speed", "speed range must satisfy 0 <= min <= max"};
    }
    if (!(d.wander_std >= 0.0)) return Violation{at + "/wander_std", "wander_std must be >= 0"};
  }
  if (!(s.obs_noise_std >= 0.0)) return Violation{"/obs_noise_std", "obs_noise_std must be >= 0"};
  if (s.max_steps < 1) return Violation{"/max_steps", "max_steps must be >= 1"};
  if (!region_inside(s.spawn, s.bounds)) return Violation{"/spawn", "spawn region must lie inside bounds"};
  if (!region_inside(s.goal, s.bounds)) return Violation{"/goal", "goal region must lie inside bounds"};
  const sim::SimParams params;
  const sim::World w = static_world(s, params);
  if (!region_has_free_point(w, s.spawn, params.robot_radius + kSpawnMargin)) {
    return Violation{"/spawn", "spawn region has no point clear of static obstacles"};
  }
  if (!region_has_free_point(w, s.goal, params.robot_radius + kSpawnMargin)) {
    return Violation{"/goal", "goal region has no point clear of static obstacles"};
  }
  return std::nullopt;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// --- JSON decoding -------------------------------------------------------

const json& field(const json& obj, const std::string& key, const std::string& at) {
  if (!obj.contains(key)) throw FieldError{at, "missing field '" + key + "'"};
  return obj.at(key);
}

double number(const json& v, const std::string& at) {
  if (!v.is_number()) throw FieldError{at, "expected a number"};
  return v.get<double>();
}

std::vector<double> numbers(const json& v, std::size_t n, const std::string& at) {
  if (!v.is_array() || v.size() != n) {
    throw FieldError{at, "expected an array of " + std::to_string(n) + " numbers"};
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(number(v[i], at + "/" + std::to_string(i)));
  return out;
}

Bounds rect(const json& v, const std::string& at) {
  const auto r = numbers(v, 4, at);
  return {r[0], r[1], r[2], r[3]};
}

json rect_json(const Bounds& b) { return json::array({b.xmin, b.ymin, b.xmax, b.ymax}); }

ShapeKind shape_kind(const json& v, const std::string& at) {
  if (v == "circle") return ShapeKind::kCircle;
  if (v == "rect") return ShapeKind::kRect;
  throw FieldError{at, "shape must be \"circle\" or \"rect\""};
}

SceneSpec decode(const json& doc) {
  if (!doc.is_object()) throw FieldError{"", "scene document must be an object"};
  const json& version = field(doc, "scene_version", "");
  if (!version.is_number_integer() || version.get<int>() != kSceneVersion) {
    throw FieldError{"/scene_version", "unsupported scene_version (expected 1)"};
  }
  SceneSpec s;
  const json& name = field(doc, "name", "");
  if (!name.is_string()) throw FieldError{"/name", "expected a string"};
  s.name = name.get<std::string>();
  s.bounds = rect(field(doc, "bounds", ""), "/bounds");
  if (doc.contains("boundary_walls")) {
    if (!doc["boundary_walls"].is_boolean()) throw FieldError{"/boundary_walls", "expected a boolean"};
    s.boundary_walls = doc["boundary_walls"].get<bool>();
  }
  if (doc.contains("walls")) {
    const json& walls = doc["walls"];
    if (!walls.is_array()) throw FieldError{"/walls", "expected an array"};
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const auto w = numbers(walls[i], 4, "/walls/" + std::to_string(i));
      s.walls.push_back({{w[0], w[1]}, {w[2], w[3]}});
    }
  }
  if (doc.contains("obstacles")) {
    const json& obs = doc["obstacles"];
    if (!obs.is_array()) throw FieldError{"/obstacles", "expected an array"};
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string at = "/obstacles/" + std::to_string(i);
      if (!obs[i].is_array()) throw FieldError{at, "expected an array of [x, y] vertices"};
      std::vector<Vec2> poly;
      for (std::size_t k = 0; k < obs[i].size(); ++k) {
        const auto v = numbers(obs[i][k], 2, at + "/" + std::to_string(k));
        poly.push_back({v[0], v[1]});
      }
      s.obstacles.push_back(std::move(poly));
    }
  }
  if (doc.contains("dynamic")) {
    const json& dyn = doc["dynamic"];
    if (!dyn.is_array()) throw FieldError{"/dynamic", "expected an array"};
    for (std::size_t i = 0; i < dyn.size(); ++i) {
      const std::string at = "/dynamic/" + std::to_string(i);
      const json& d = dyn[i];
      if (!d.is_object()) throw FieldError{at, "expected an object"};
      DynamicTemplate t;
      t.shape = shape_kind(field(d, "shape", at), at + "/shape");
      const auto size = numbers(field(d, "size", at), 2, at + "/size");
      const auto speed = numbers(field(d, "speed", at), 2, at + "/speed");
      t.size_min = size[0];
      t.size_max = size[1];
      t.speed_min = speed[0];
      t.speed_max = speed[1];
      const json& count = field(d, "count", at);
      if (!count.is_number_integer()) throw FieldError{at + "/count", "expected an integer"};
      t.count = count.get<int>();
      if (d.contains("wander_std")) t.wander_std = number(d["wander_std"], at + "/wander_std");
      s.dynamic.push_back(t);
    }
  }
  s.spawn = rect(field(doc, "spawn", ""), "/spawn");
  s.goal = rect(field(doc, "goal", ""), "/goal");
  if (doc.contains("obs_noise_std")) s.obs_noise_std = number(doc["obs_noise_std"], "/obs_noise_std");
  if (doc.contains("max_steps")) {
    if (!doc["max_steps"].is_number_integer()) throw FieldError{"/max_steps", "expected an integer"};
    s.max_steps = doc["max_steps"].get<int>();
  }
  return s;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SceneFileError(path.string(), 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SceneFileError::SceneFileError(const std::string& file, int line, const std::string& msg)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}

int SceneSpec::dynamic_count() const {
  int n = 0;
  for (const auto& d : dynamic) n += d.count;
  return n;
}

void validate(const SceneSpec& spec) {
  if (auto v = find_violation(spec)) {
    throw std::invalid_argument("scene '" + spec.name + "' " + v->pointer + ": " + v->message);
  }
}

sim::World build_scene(const SceneSpec& spec, std::uint64_t seed, const sim::SimParams& base) {
  validate(spec);
  sim::SimParams params = base;
  params.max_steps = spec.max_steps;
  sim::World world = static_world(spec, params, seed);
  world.set_obs_noise(spec.obs_noise_std);

  std::mt19937_64 rng(seed);
  const double clearance = params.robot_radius + kSpawnMargin;
  auto sample_free = [&](const Bounds& region, const char* what) {
    for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
      const Vec2 p{uniform(rng, region.xmin, region.xmax), uniform(rng, region.ymin, region.ymax)};
      if (!world.disc_collides(p, clearance)) return p;
    }
    throw ConstructionError("scene '" + spec.name + "': no free " + what + " point after " +
                            std::to_string(kPlacementTries) + " tries");
  };

  const Vec2 start = sample_free(spec.spawn, "spawn");
  Vec2 goal;
  bool placed = false;
  for (int attempt = 0; attempt < kPlacementTries && !placed; ++attempt) {
    const Vec2 g = sample_free(spec.goal, "goal");
    if (sim::norm(g - start) >= kMinStartGoalDistance) {
      goal = g;
      placed = true;
    }
  }
  if (!placed) {
    throw ConstructionError("scene '" + spec.name + "': no goal at least 3 m from the spawn");
  }
  world.set_robot({start.x, start.y, uniform(rng, -kPi, kPi)});
  world.set_goal(goal);

  for (const auto& t : spec.dynamic) {
    for (int k = 0; k < t.count; ++k) {
      bool ok = false;
      for (int attempt = 0; attempt < kPlacementTries && !ok; ++attempt) {
        sim::DynamicObstacle o;
        o.shape = t.shape;
        o.radius = uniform(rng, t.size_min, t.size_max);
        o.half_length = uniform(rng, t.size_min, t.size_max);
        o.half_width = uniform(rng, t.size_min, t.size_max);
        o.yaw = uniform(rng, -kPi, kPi);
        o.heading = uniform(rng, -kPi, kPi);
        o.speed = uniform(rng, t.speed_min, t.speed_max);
        o.wander_std = t.wander_std;
        const double r = o.bounding_radius();
        o.position = {uniform(rng, spec.bounds.xmin + r, spec.bounds.xmax - r),
                      uniform(rng, spec.bounds.ymin + r, spec.bounds.ymax - r)};
        if (sim::norm(o.position - start) < r + params.robot_radius + kRobotKeepout) continue;
        if (sim::norm(o.position - goal) < r + params.goal_radius) continue;
        bool clash = false;
        for (const auto& w : world.walls()) clash = clash || sim::point_segment_distance(o.position, w) < r;
        for (const auto& p : world.polygons()) clash = clash || sim::point_polygon_distance(o.position, p) < r;
        for (const auto& other : world.dynamic()) {
          clash = clash || sim::norm(o.position - other.position) < r + other.bounding_radius();
        }
        if (clash) continue;
        world.add_dynamic(o);
        ok = true;
      }
      if (!ok) {
        throw ConstructionError("scene '" + spec.name + "': could not place wandering obstacle " +
                                std::to_string(world.dynamic().size() + 1));
      }
    }
  }
  return world;
}

SceneSpec static_variant(const SceneSpec& spec) {
  SceneSpec out = spec;
  for (auto& t : out.dynamic) {
    t.speed_min = t.speed_max = 0.0;
    t.wander_std = 0.0;
  }
  return out;
}

SceneSpec perturb_zero_shot(const SceneSpec& spec, const Perturbation& p) {
  if (!(p.density_scale > 0.0 && p.speed_scale > 0.0)) {
    throw std::invalid_argument("perturbation scales must be positive");
  }
  if (!(p.noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
  SceneSpec out = spec;
  for (auto& t : out.dynamic) {
    t.count = static_cast<int>(std::lround(t.count * p.density_scale));
    t.speed_min *= p.speed_scale;
    t.speed_max *= p.speed_scale;
    if (p.shape_swap) {
      t.shape = t.shape == ShapeKind::kCircle ? ShapeKind::kRect : ShapeKind::kCircle;
    }
  }
  if (p.goal_shift) out.goal = *p.goal_shift;
  out.obs_noise_std = p.noise_std;
  return out;
}

SceneSpec parse_scene(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw SceneFileError(origin, line, std::string("invalid JSON: ") + e.what());
  }
  const detail::JsonLineIndex lines(text);
  SceneSpec spec;
  try {
    spec = decode(doc);
  } catch (const FieldError& e) {
    throw SceneFileError(origin, lines.line_of(e.pointer), e.pointer + ": " + e.message);
  }
  if (auto v = find_violation(spec)) {
    throw SceneFileError(origin, lines.line_of(v->pointer), v->pointer + ": " + v->message);
  }
  return spec;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  return parse_scene(read_text(path), path.string());
}

std::string scene_to_json(const SceneSpec& s) {
  json doc;
  doc["scene_version"] = kSceneVersion;
  doc["name"] = s.name;
  doc["bounds"] = rect_json(s.bounds);
  doc["boundary_walls"] = s.boundary_walls;
  doc["walls"] = json::array();
  for (const auto& w : s.walls) doc["walls"].push_back({w.a.x, w.a.y, w.b.x, w.b.y});
  doc["obstacles"] = json::array();
  for (const auto& p : s.obstacles) {
    json poly = json::array();
    for (const auto& v : p) poly.push_back({v.x, v.y});
    doc["obstacles"].push_back(poly);
  }
  doc["dynamic"] = json::array();
  for (const auto& t : s.dynamic) {
    doc["dynamic"].push_back({{"shape", t.shape == ShapeKind::kCircle ? "circle" : "rect"},
                              {"size", {t.size_min, t.size_max}},
                              {"speed", {t.speed_min, t.speed_max}},
                              {"count", t.count},
                              {"wander_std", t.wander_std}});
  }
  doc["spawn"] = rect_json(s.spawn);
  doc["goal"] = rect_json(s.goal);
  doc["obs_noise_std"] = s.obs_noise_std;
  doc["max_steps"] = s.max_steps;
  return doc.dump(2);
}

Perturbation parse_perturbation(const std::string& json_text) {
  const json d = json::parse(json_text);
  Perturbation p;
  p.density_scale = d.value("density_scale", 1.0);
  p.speed_scale = d.value("speed_scale", 1.0);
  p.shape_swap = d.value("shape_swap", false);
  p.noise_std = d.value("noise_std", kDefaultZeroShotNoise);
  if (d.contains("goal_shift") && !d["goal_shift"].is_null()) {
    try {
      p.goal_shift = rect(d["goal_shift"], "/goal_shift");
    } catch (const FieldError& e) {
      throw std::invalid_argument(e.pointer + ": " + e.message);
    }
  }
  return p;
}

std::vector<std::string> suite_names() { return {"training", "few-shot", "zero-shot", "desk"}; }

std::vector<SceneSpec> load_suite(const std::string& suite, const std::filesystem::path& root) {
  auto load_dir = [&](const std::string& sub) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(root / sub)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<SceneSpec> out;
    for (const auto& f : files) out.push_back(load_scene(f));
    return out;
  };
  if (suite == "training") return load_dir("training");
  if (suite == "few-shot") return load_dir("few_shot");
  if (suite == "desk") return load_dir("desk");
  if (suite == "zero-shot") {
    const auto base = load_dir("few_shot");
    const std::filesystem::path file = root / "zero_shot.json";
    const std::string text = read_text(file);
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw SceneFileError(file.string(), 0, e.what());
    }
    const detail::JsonLineIndex lines(text);
    std::vector<SceneSpec> out;
    const json& entries = doc.at("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string at = "/entries/" + std::to_string(i);
      const std::string base_name = entries[i].at("base").get<std::string>();
      auto it = std::find_if(base.begin(), base.end(),
                             [&](const SceneSpec& s) { return s.name == base_name; });
      if (it == base.end()) {
        throw SceneFileError(file.string(), lines.line_of(at + "/base"),
                             "unknown base scenario '" + base_name + "'");
      }
      SceneSpec s;
      try {
        s = perturb_zero_shot(*it, parse_perturbation(entries[i].at("perturbation").dump()));
      } catch (const std::invalid_argument& e) {
        throw SceneFileError(file.string(), lines.line_of(at + "/perturbation"), e.what());
      }
      s.name = entries[i].at("name").get<std::string>();
      if (auto v = find_violation(s)) {
        throw SceneFileError(file.string(), lines.line_of(at), v->pointer + ": " + v->message);
      }
      out.push_back(std::move(s));
    }
    return out;
  }
  throw std::invalid_argument("unknown suite '" + suite + "'");
}

}  // namespace navloop::scenes
