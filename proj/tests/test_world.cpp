#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "avic/rng.hpp"
#include "avic/world.hpp"
#include "doctest.h"

using namespace avic;

namespace {

SceneObject obj(int id, std::string label, double x, double y, double r = 0.25) {
    return SceneObject{id, std::move(label), {x, y}, r, 0.0, "red"};
}

Scene scene_of(std::vector<SceneObject> objects) {
    Scene s;
    s.objects = std::move(objects);
    s.vocabulary = default_vocabulary();
    return s;
}

// Visibility oracle written from the definitions with atan2/asin directly.
std::set<int> oracle_visible(const Scene& scene, const Pose& pose, const Sensor& sensor) {
    auto rel = [&](Vec2 p, double& bearing, double& dist) {
        const double dx = p.x - pose.x(), dy = p.y - pose.y();
        dist = std::hypot(dx, dy);
        double b = std::atan2(dy, dx) * 180.0 / std::numbers::pi - pose.heading();
        while (b > 180.0) b -= 360.0;
        while (b <= -180.0) b += 360.0;
        bearing = b;
    };
    std::set<int> out;
    for (const auto& t : scene.objects) {
        double bt, dt;
        rel(t.position, bt, dt);
        if (dt == 0.0 || dt > sensor.range || std::fabs(bt) > sensor.fov / 2.0 + 1e-9) continue;
        bool hidden = false;
        for (const auto& o : scene.objects) {
            if (o.id == t.id) continue;
            double bo, d_o;
            rel(o.position, bo, d_o);
            if (d_o == 0.0 || d_o >= dt) continue;
            const double half = std::asin(std::min(1.0, o.radius / d_o)) * 180.0 / std::numbers::pi;
            double gap = std::fabs(bo - bt);
            if (gap > 180.0) gap = 360.0 - gap;
            if (gap <= half) hidden = true;
        }
        if (sensor.occlusion && hidden) continue;
        out.insert(t.id);
    }
    return out;
}

std::set<int> ids(const Observation& obs) {
    std::set<int> out;
    for (const auto& p : obs.percepts) out.insert(p.source_id);
    return out;
}

}  // namespace

TEST_CASE("field of view and range") {
    const Scene s = scene_of({obj(0, "chair", 2, 0), obj(1, "table", 0, 2), obj(2, "lamp", 6, 0), obj(3, "sofa", 2, 1.9)});
    const Observation o = render(s, Pose(0, 0, 0), Sensor{90, 5, true});
    CHECK(ids(o) == std::set<int>{0, 3});
    CHECK(o.percepts[0].bearing == 0.0);
    CHECK(o.percepts[0].distance == 2.0);
    const Observation wide = render(s, Pose(0, 0, 0), Sensor{360, 10, false});
    CHECK(ids(wide) == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("a nearer disc hides what lies behind it") {
    const Scene s = scene_of({obj(0, "box", 1, 0, 0.3), obj(1, "cup", 3, 0.5, 0.2), obj(2, "pen", 3, 1.5, 0.2)});
    const Sensor sensor{90, 5, true};
    // box covers asin(0.3) = 17.46 degrees either side; cup sits at atan(0.5/3) = 9.46 degrees
    CHECK(ids(render(s, Pose(0, 0, 0), sensor)) == std::set<int>{0, 2});
    CHECK(ids(render(s, Pose(0, 0, 0), Sensor{90, 5, false})) == std::set<int>{0, 1, 2});
    CHECK_FALSE(visible_from(s, 1, Pose(0, 0, 0), sensor));
}

TEST_CASE("objects outside the cone still occlude") {
    // occluder at bearing 46.5 degrees (outside a 90 degree cone) with a wide disc
    const Scene s = scene_of({obj(0, "box", 0.5, 0.527, 0.4), obj(1, "cup", 3, 2.6, 0.2)});
    const Sensor sensor{90, 5, true};
    CHECK(oracle_visible(s, Pose(0, 0, 0), sensor) == ids(render(s, Pose(0, 0, 0), sensor)));
    CHECK(ids(render(s, Pose(0, 0, 0), sensor)).count(1) == 0);
}

TEST_CASE("property: render agrees with the arcsin occlusion oracle") {
    SceneGenConfig cfg;
    Stream rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const Scene s = generate_scene(cfg, 1000 + trial);
        const Pose pose(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 360));
        const Sensor sensor{rng.uniform(30, 180), rng.uniform(2, 8), true};
        CHECK(oracle_visible(s, pose, sensor) == ids(render(s, pose, sensor)));
    }
}

TEST_CASE("percept geometry reconstructs world positions") {
    const Scene s = generate_scene(SceneGenConfig{}, 5);
    const Pose pose(5, 5, 36);
    const Observation o = render(s, pose, Sensor{360, 20, false});
    for (const auto& p : o.percepts) {
        const Vec2 w = percept_position(pose, p);
        const Vec2 truth = s.find(p.source_id)->position;
        CHECK(w.x == doctest::Approx(truth.x).epsilon(1e-12));
        CHECK(w.y == doctest::Approx(truth.y).epsilon(1e-12));
        CHECK(percept_facing(pose, p) == doctest::Approx(s.find(p.source_id)->facing).epsilon(1e-12));
    }
}

TEST_CASE("scene generation invariants") {
    SceneGenConfig cfg;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Scene s = generate_scene(cfg, seed);
        REQUIRE(static_cast<int>(s.objects.size()) == cfg.n_objects);
        std::set<std::string> labels;
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
            const auto& a = s.objects[i];
            CHECK(cfg.bounds.contains(a.position));
            CHECK(a.radius >= cfg.min_radius);
            CHECK(a.radius <= cfg.max_radius);
            CHECK(std::fmod(a.facing, 9.0) == 0.0);
            CHECK(std::fmod(a.position.x * 4.0, 1.0) == 0.0);
            labels.insert(a.label);
            for (std::size_t j = i + 1; j < s.objects.size(); ++j) {
                CHECK(distance(a.position, s.objects[j].position) >= cfg.min_separation);
            }
        }
        CHECK(labels.size() == s.objects.size());
        CHECK(generate_scene(cfg, seed) == s);
    }
    SceneGenConfig bad = cfg;
    bad.vocabulary = {"a", "b"};
    CHECK_THROWS_AS(generate_scene(bad, 1), ValidationError);
    SceneGenConfig crowded = cfg;
    crowded.bounds = {0, 0, 1, 1};
    crowded.max_attempts = 50;
    CHECK_THROWS_AS(generate_scene(crowded, 1), GenerationError);
}

TEST_CASE("zero noise imagination is a plain render") {
    const Scene s = generate_scene(SceneGenConfig{}, 9);
    const ActionPlan plan{{{ActionKind::turn_left, 5}, {ActionKind::move_forward, 4}}};
    const auto t = imagine(s, Pose(5, 5, 0), plan, Sensor{}, NoiseModel{}, 77, {});
    const auto poses = simulate_plan(Pose(5, 5, 0), plan);
    REQUIRE(t.frames.size() == poses.size());
    for (std::size_t k = 0; k < poses.size(); ++k) {
        CHECK(t.frames[k].imagined);
        CHECK(same_view(t.frames[k], render(s, poses[k], Sensor{})));
    }
    CHECK(t.corruption_log.empty());
}

TEST_CASE("drop rate matches p_drop") {
    const Scene s = generate_scene(SceneGenConfig{}, 4);
    NoiseModel noise{0.5, 0.0, 0.0};
    int drops = 0, total = 0;
    for (int frame = 0; frame < 1250; ++frame) {
        std::vector<CorruptionEvent> log;
        imagine_frame(s, Pose(5, 5, 0), Sensor{}, noise, 123, frame, &log);
        drops += static_cast<int>(log.size());
        total += static_cast<int>(s.objects.size());
    }
    const double rate = static_cast<double>(drops) / total;
    CHECK(rate >= 0.48);
    CHECK(rate <= 0.52);
}

TEST_CASE("corruption is deterministic, logged and flagged") {
    const Scene s = generate_scene(SceneGenConfig{}, 12);
    const NoiseModel noise{0.2, 0.3, 0.4};
    const ActionPlan plan{{{ActionKind::turn_left, 10}, {ActionKind::move_forward, 3}, {ActionKind::turn_left, 10}}};
    const auto a = imagine(s, Pose(5, 5, 0), plan, Sensor{360, 20, false}, noise, 5, {});
    const auto b = imagine(s, Pose(5, 5, 0), plan, Sensor{360, 20, false}, noise, 5, {});
    CHECK(a.corruption_log == b.corruption_log);
    for (std::size_t k = 0; k < a.frames.size(); ++k) CHECK(same_view(a.frames[k], b.frames[k]));
    std::map<std::pair<int, int>, CorruptionKind> events;
    for (const auto& e : a.corruption_log) {
        CHECK(events.emplace(std::pair(e.frame, e.object_id), e.kind).second);
    }
    for (std::size_t k = 0; k < a.frames.size(); ++k) {
        for (const auto& p : a.frames[k].percepts) {
            const auto it = events.find({static_cast<int>(k), p.source_id});
            CHECK(it != events.end());
            CHECK(it->second != CorruptionKind::drop);
            CHECK(p.corrupted);
            if (it->second == CorruptionKind::label_swap) CHECK(p.label != s.find(p.source_id)->label);
        }
    }
}

TEST_CASE("noise and sensor validation") {
    CHECK_THROWS_AS((NoiseModel{1.5, 0, 0}.validate()), ValidationError);
    CHECK_THROWS_AS((NoiseModel{0, -0.1, 0}.validate()), ValidationError);
    CHECK_THROWS_AS((NoiseModel{0, 0, -1}.validate()), ValidationError);
    CHECK_THROWS_AS((Sensor{0, 5, true}.validate()), ValidationError);
    CHECK_NOTHROW((Sensor{90, 5, true}.validate()));
}
