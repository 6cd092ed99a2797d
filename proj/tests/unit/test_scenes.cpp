// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include <doctest.h>

#include <algorithm>
#include <set>

#include "navloop/scenes/scene.hpp"

using namespace navloop;
using namespace navloop::scenes;
using sim::Vec2;

namespace {

SceneSpec small_room() {
  SceneSpec s;
  s.name = "room";
  s.bounds = {0, 0, 10, 10};
  s.spawn = {1, 1, 9, 9};
  s.goal = {1, 1, 9, 9};
  return s;
}

void check_instance(const SceneSpec& spec, const sim::World& w) {
  const auto& p = w.params();
  REQUIRE(norm(w.goal() - w.robot().position()) >= kMinStartGoalDistance);
  REQUIRE(!w.disc_collides(w.robot().position(), p.robot_radius));
  REQUIRE(!w.disc_collides(w.goal(), p.robot_radius));
  REQUIRE(static_cast<int>(w.dynamic().size()) == spec.dynamic_count());
  const auto& d = w.dynamic();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = d[i].bounding_radius();
    REQUIRE(d[i].position.x >= spec.bounds.xmin + r);
    REQUIRE(d[i].position.x <= spec.bounds.xmax - r);
    REQUIRE(d[i].position.y >= spec.bounds.ymin + r);
    REQUIRE(d[i].position.y <= spec.bounds.ymax - r);
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      REQUIRE(norm(d[i].position - d[j].position) >= r + d[j].bounding_radius());
    }
  }
}

}  // namespace

TEST_CASE("bundled suites load with the expected sizes") {
  CHECK(load_suite("training").size() == 4);
  CHECK(load_suite("few-shot").size() == 8);
  CHECK(load_suite("desk").size() == 1);
  const auto few = load_suite("few-shot");
  const auto zero = load_suite("zero-shot");
  REQUIRE(zero.size() == 8);
  std::set<std::string> names;
  for (const auto& s : zero) names.insert(s.name);
  CHECK(names.size() == 8);
  for (const auto& s : zero) CHECK(s.obs_noise_std == doctest::Approx(kDefaultZeroShotNoise));
  // Each zero-shot scenario keeps the static layout of its own base scenario.
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(zero[i].walls.size() == few[i].walls.size());
    CHECK(zero[i].obstacles == few[i].obstacles);
  }
  CHECK_THROWS_AS(load_suite("nope"), std::invalid_argument);
}

TEST_CASE("every bundled scene builds for 100 consecutive seeds") {
  for (const auto& suite : suite_names()) {
    for (const auto& spec : load_suite(suite)) {
      CAPTURE(spec.name);
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const sim::World w = build_scene(spec, seed);
        check_instance(spec, w);
        check_instance(spec, build_scene(static_variant(spec), seed));
      }
    }
  }
}

TEST_CASE("open scene has walls only") {
  const sim::World w = build_scene(small_room(), 3);
  CHECK(w.walls().size() == 4);
  CHECK(w.polygons().empty());
  CHECK(w.dynamic().empty());
}

TEST_CASE("build_scene is repeatable per seed") {
  SceneSpec s = small_room();
  s.dynamic.push_back({sim::ShapeKind::kRect, 0.2, 0.4, 0.1, 0.3, 5, 0.1});
  const sim::World a = build_scene(s, 42), b = build_scene(s, 42), c = build_scene(s, 43);
  CHECK(a.robot() == b.robot());
  CHECK(a.goal() == b.goal());
  REQUIRE(a.dynamic().size() == b.dynamic().size());
  for (std::size_t i = 0; i < a.dynamic().size(); ++i) {
    CHECK(a.dynamic()[i].position == b.dynamic()[i].position);
    CHECK(a.dynamic()[i].heading == b.dynamic()[i].heading);
  }
  CHECK_FALSE(a.robot() == c.robot());
}

TEST_CASE("dense scene with 20 wandering obstacles") {
  SceneSpec s = small_room();
  s.dynamic.push_back({sim::ShapeKind::kCircle, 0.2, 0.35, 0.1, 0.3, 12, 0.1});
  s.dynamic.push_back({sim::ShapeKind::kRect, 0.15, 0.3, 0.1, 0.3, 8, 0.1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const sim::World w = build_scene(s, seed);
    CHECK(w.dynamic().size() == 20);
    check_instance(s, w);
  }
}

TEST_CASE("infeasible specs raise construction errors") {
  SceneSpec s = small_room();
  s.spawn = {1, 1, 1.5, 1.5};
  s.goal = {1, 1, 1.5, 1.5};
  CHECK_THROWS_AS(build_scene(s, 0), ConstructionError);

  SceneSpec crowded = small_room();
  crowded.dynamic.push_back({sim::ShapeKind::kCircle, 2.0, 2.0, 0.1, 0.1, 30, 0.0});
  CHECK_THROWS_AS(build_scene(crowded, 0), ConstructionError);
}

TEST_CASE("validation rejects broken specs") {
  CHECK_NOTHROW(validate(small_room()));
  SceneSpec s = small_room();
  s.obs_noise_std = -0.1;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = small_room();
  s.spawn = {-1, 1, 2, 2};
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = small_room();
  s.goal = {4, 4, 6, 6};
  s.obstacles.push_back({{3, 3}, {7, 3}, {7, 7}, {3, 7}});
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = small_room();
  s.dynamic.push_back({sim::ShapeKind::kCircle, 0.2, 0.3, 0.1, 0.2, -1, 0.1});
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = small_room();
  s.obstacles.push_back({{1, 1}, {2, 2}, {3, 3}});
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
}

TEST_CASE("zero-shot perturbation examples") {
  SceneSpec s = small_room();
  s.dynamic.push_back({sim::ShapeKind::kCircle, 0.2, 0.3, 0.15, 0.3, 8, 0.1});

  const SceneSpec same = perturb_zero_shot(s, Perturbation{});
  CHECK(same.dynamic == s.dynamic);
  CHECK(same.goal.xmin == s.goal.xmin);
  CHECK(same.obs_noise_std == 0.0);

  Perturbation fast;
  fast.speed_scale = 2.0;
  const SceneSpec f = perturb_zero_shot(s, fast);
  CHECK(f.dynamic[0].speed_min == doctest::Approx(0.3));
  CHECK(f.dynamic[0].speed_max == doctest::Approx(0.6));

  Perturbation dense;
  dense.density_scale = 1.5;
  CHECK(perturb_zero_shot(s, dense).dynamic[0].count == 12);

  Perturbation other;
  other.shape_swap = true;
  other.goal_shift = sim::Bounds{7, 7, 9, 9};
  other.noise_std = 0.02;
  const SceneSpec o = perturb_zero_shot(s, other);
  CHECK(o.dynamic[0].shape == sim::ShapeKind::kRect);
  CHECK(o.goal.xmin == 7.0);
  CHECK(o.obs_noise_std == 0.02);

  Perturbation bad;
  bad.density_scale = 0.0;
  CHECK_THROWS_AS(perturb_zero_shot(s, bad), std::invalid_argument);
}

TEST_CASE("sensor noise never changes ground truth") {
  SceneSpec s = small_room();
  s.dynamic.push_back({sim::ShapeKind::kCircle, 0.2, 0.3, 0.15, 0.3, 4, 0.1});
  SceneSpec noisy = s;
  noisy.obs_noise_std = 0.1;
  sim::World a = build_scene(s, 9), b = build_scene(noisy, 9);
  for (int t = 0; t < 100 && !a.terminal(); ++t) {
    const sim::ActionCmd cmd{0.5, 0.3 * ((t / 10) % 2 ? 1 : -1)};
    const auto oa = sim::step_episode(a, cmd);
    const auto ob = sim::step_episode(b, cmd);
    CHECK(oa.nav_reward == ob.nav_reward);
    CHECK(oa.event == ob.event);
    CHECK(a.robot() == b.robot());
    for (std::size_t i = 0; i < a.dynamic().size(); ++i) {
      CHECK(a.dynamic()[i].position == b.dynamic()[i].position);
    }
    CHECK(std::equal(oa.obs.begin() + sim::kLidarBeams, oa.obs.end(),
                     ob.obs.begin() + sim::kLidarBeams));
  }
}

TEST_CASE("scene documents round-trip") {
  for (const auto& spec : load_suite("training")) {
    const SceneSpec back = parse_scene(scene_to_json(spec));
    CHECK(back.name == spec.name);
    CHECK(back.obstacles == spec.obstacles);
    CHECK(back.dynamic == spec.dynamic);
    CHECK(back.max_steps == spec.max_steps);
    CHECK(scene_to_json(back) == scene_to_json(spec));
  }
}

TEST_CASE("scene file errors name the offending line") {
  const std::string good = R"({
  "scene_version": 1,
  "name": "t",
  "bounds": [0, 0, 10, 10],
  "dynamic": [
    {"shape": "circle", "size": [0.2, 0.3], "speed": [0.1, 0.2], "count": 2}
  ],
  "spawn": [1, 1, 3, 3],
  "goal": [7, 7, 9, 9]
})";
  CHECK_NOTHROW(parse_scene(good));

  auto line_of_error = [](const std::string& text) {
    try {
      parse_scene(text, "x.json");
    } catch (const SceneFileError& e) {
      CHECK(std::string(e.what()).rfind("x.json:", 0) == 0);
      return e.line();
    }
    FAIL("expected a SceneFileError");
    return -1;
  };

  std::string syntax = good;
  syntax.replace(syntax.find("\"goal\""), 6, "goal");
  CHECK(line_of_error(syntax) == 9);

  std::string negative = good;
  negative.replace(negative.find("\"count\": 2"), 10, "\"count\": -2");
  CHECK(line_of_error(negative) == 6);

  std::string shape = good;
  shape.replace(shape.find("circle"), 6, "blob");
  CHECK(line_of_error(shape) == 6);

  std::string version = good;
  version.replace(version.find("1,"), 1, "2");
  CHECK(line_of_error(version) == 2);

  std::string outside = good;
  outside.replace(outside.find("[7, 7, 9, 9]"), 12, "[7, 7, 12, 9]");
  CHECK(line_of_error(outside) == 9);

  std::string missing = good;
  missing.replace(missing.find("\"name\": \"t\","), 12, "");
  CHECK(line_of_error(missing) == 1);
}
