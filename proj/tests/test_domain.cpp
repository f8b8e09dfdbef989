#include <doctest.h>

#include <cmath>
#include <random>

#include "mrta/domain.hpp"

using namespace mrta;

TEST_SUITE("domain") {
  TEST_CASE("distance examples") {
    CHECK(distance(Vec2(0, 0), Vec2(3, 4)) == 5.0);
    CHECK(distance(Vec2(7, 7), Vec2(7, 7)) == 0.0);
    // 64 * sqrt(2) to 15 digits
    CHECK(distance(Vec2(0, 0), Vec2(64, 64)) == doctest::Approx(90.5096679918781).epsilon(1e-14));
  }

  TEST_CASE("distance rejects non-finite input") {
    CHECK_THROWS_AS(distance(Vec2(NAN, 0), Vec2(0, 0)), ValidationError);
    CHECK_THROWS_AS(distance(Vec2(0, 0), Vec2(INFINITY, 1)), ValidationError);
  }

  TEST_CASE("distance is a metric on random triples") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int k = 0; k < 1000; ++k) {
      const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
      CHECK(distance(a, b) == distance(b, a));
      CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
    }
  }

  TEST_CASE("task feature examples") {
    const auto f = task_feature(make_task(1, Vec2(0, 0), Vec2(3, 4), 600)).as_array();
    CHECK(f == std::array<double, 6>{0, 0, 3, 4, 5, 600});
    CHECK(task_feature(make_task(2, Vec2(10, 10), Vec2(10, 10), 0)).length == 0.0);
    CHECK(task_feature(make_task(3, Vec2(1, 2), Vec2(4, 6), 50)).length == 5.0);
  }

  TEST_CASE("task length is translation invariant") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 50);
    for (int k = 0; k < 200; ++k) {
      const Vec2 o(u(rng), u(rng)), d(u(rng), u(rng)), s(u(rng), u(rng));
      const double a = task_feature(make_task(0, o, d, 0)).length;
      const double b = task_feature(make_task(0, o + s, d + s, 0)).length;
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }

  TEST_CASE("robot feature examples") {
    RobotState r;
    r.position = Vec2(5, 5);
    r.charge = 0.8;
    r.free_at = 0;
    CHECK(robot_feature(r, 0.0, 1e9).as_array() == std::array<double, 4>{5, 5, 0, 0.8});

    r.free_at = 120;
    CHECK(robot_feature(r, 100.0, 1e9).remaining == 20.0);
    r.free_at = 90;
    CHECK(robot_feature(r, 100.0, 1e9).remaining == 0.0);

    r.failed = true;
    CHECK(robot_feature(r, 100.0, 1e9).remaining == 1e9);
  }

  TEST_CASE("robot feature reports the end of the itinerary") {
    RobotState r;
    r.position = Vec2(1, 1);
    r.legs.push_back(Leg{LegKind::kToOrigin, Vec2(10, 10), 0});
    r.legs.push_back(Leg{LegKind::kToDestination, Vec2(20, 5), 0});
    const auto f = robot_feature(r, 0.0, 1e9);
    CHECK(f.position == Vec2(20, 5));
  }

  TEST_CASE("config defaults and validation") {
    WorldConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.effective_charge_rate() == doctest::Approx(16 * cfg.discharge_rate));
    const auto docks = cfg.effective_docks();
    REQUIRE(docks.size() == 4);
    for (const auto& d : docks) CHECK(in_rectangle(d, cfg.width, cfg.height));

    auto bad = cfg;
    bad.la_len = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.dt = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.dock_positions = {Vec2(70, 1)};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.failed_robots = {cfg.n_robots};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }

  TEST_CASE("derive_seed separates streams") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  }
}
