#include "avic/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "avic/rng.hpp"

namespace avic {

std::string_view to_string(QuestionCategory c) {
    switch (c) {
        case QuestionCategory::EgoM: return "EgoM";
        case QuestionCategory::ObjM: return "ObjM";
        case QuestionCategory::EgoAct: return "EgoAct";
        case QuestionCategory::Goal: return "Goal";
        case QuestionCategory::Pers: return "Pers";
    }
    return "Pers";
}

std::string_view to_string(ErrorTag t) {
    switch (t) {
        case ErrorTag::LO: return "LO";
        case ErrorTag::VD: return "VD";
        case ErrorTag::AC: return "AC";
        case ErrorTag::DU: return "DU";
    }
    return "VD";
}

std::optional<QuestionCategory> parse_category(std::string_view s) {
    for (auto c : kAllCategories) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

std::optional<ErrorTag> parse_error_tag(std::string_view s) {
    for (auto t : kAllTags) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

std::vector<int> Episode::required_object_ids() const {
    std::vector<int> ids;
    if (reference_id >= 0) ids.push_back(reference_id);
    if (target_id >= 0) ids.push_back(target_id);
    return ids;
}

namespace {

// Choice vocabularies. The first entries of each are the answers the
// templates can produce; the rest only ever appear as distractors.
const std::vector<std::string> kPersChoices = {"left", "right", "in front", "behind"};
const std::vector<std::string> kEgoMChoices = {"moved forward", "moved backward", "turned left", "turned right"};
const std::vector<std::string> kObjMChoices = {"moved left", "moved right", "moved closer", "moved farther"};
const std::vector<std::string> kEgoActChoices = {"directly in front", "to the left", "to the right", "behind"};

std::string fmt_meters(double m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", m);
    return buf;
}

std::string plan_phrase(const ActionPlan& plan) {
    std::ostringstream os;
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        const auto& e = plan.entries[i];
        if (i) os << " then ";
        switch (e.kind) {
            case ActionKind::turn_left: os << "turn left " << e.value * 9 << " degrees"; break;
            case ActionKind::turn_right: os << "turn right " << e.value * 9 << " degrees"; break;
            case ActionKind::move_forward: os << "move forward " << fmt_meters(e.value * kForwardStep) << " m"; break;
        }
    }
    return os.str();
}

// --- category predicates, shared by the oracle and the frame-based answerer ---

std::string pers_side(Vec2 ref_pos, double ref_facing, Vec2 other) {
    const double b = bearing_to(Pose(ref_pos.x, ref_pos.y, ref_facing), other);
    return b > 0.0 ? "left" : "right";
}

std::string egom_from_poses(const Pose& a, const Pose& b) {
    if (distance(a.position(), b.position()) > 1e-9) {
        const double along = (b.x() - a.x()) * cos_deg(a.heading()) + (b.y() - a.y()) * sin_deg(a.heading());
        return along > 0.0 ? "moved forward" : "moved backward";
    }
    return normalize_signed(b.heading() - a.heading()) > 0.0 ? "turned left" : "turned right";
}

constexpr double kEgoMDistanceThreshold = 0.1;

std::string egom_from_percepts(const Percept& first, const Percept& second) {
    const double dd = second.distance - first.distance;
    if (std::fabs(dd) > kEgoMDistanceThreshold) return dd < 0.0 ? "moved forward" : "moved backward";
    // Turning left sweeps the scene to the right (bearings decrease).
    return normalize_signed(second.bearing - first.bearing) < 0.0 ? "turned left" : "turned right";
}

std::string objm_direction(Vec2 camera, Vec2 before, Vec2 after) {
    const Vec2 ray = before - camera;
    const double n = std::hypot(ray.x, ray.y);
    const Vec2 u{ray.x / n, ray.y / n};
    const Vec2 v{-u.y, u.x};
    const Vec2 d = after - before;
    const double radial = d.x * u.x + d.y * u.y;
    const double lateral = d.x * v.x + d.y * v.y;
    if (std::fabs(radial) > std::fabs(lateral)) return radial > 0.0 ? "moved farther" : "moved closer";
    return lateral > 0.0 ? "moved left" : "moved right";
}

std::string egoact_region(const Pose& post, Vec2 target, double fov) {
    const double b = bearing_to(post, target);
    if (std::fabs(b) <= fov / 6.0) return "directly in front";
    if (std::fabs(b) >= 165.0) return "behind";
    return b > 0.0 ? "to the left" : "to the right";
}

bool centered(const Pose& start, const ActionPlan& plan, Vec2 target, double fov) {
    const Pose post = plan.empty() ? start : simulate_plan(start, plan).back();
    return std::fabs(bearing_to(post, target)) <= fov / 6.0;
}

std::optional<int> goal_choice(const Episode& ep, Vec2 target) {
    std::optional<int> found;
    for (std::size_t i = 0; i < ep.candidate_plans.size(); ++i) {
        if (centered(ep.start_pose, ep.candidate_plans[i], target, ep.sensor.fov)) {
            if (found) return std::nullopt;
            found = static_cast<int>(i);
        }
    }
    return found;
}

int index_of(const Episode& ep, const std::string& choice) {
    const auto it = std::find(ep.choices.begin(), ep.choices.end(), choice);
    if (it == ep.choices.end()) throw ValidationError("episode " + ep.id + " has no choice '" + choice + "'");
    return static_cast<int>(it - ep.choices.begin());
}

std::optional<int> find_choice(const Episode& ep, const std::string& choice) {
    const auto it = std::find(ep.choices.begin(), ep.choices.end(), choice);
    if (it == ep.choices.end()) return std::nullopt;
    return static_cast<int>(it - ep.choices.begin());
}

// Most recent percept carrying `label` across frames, with its viewpoint.
struct Resolved {
    Pose viewpoint;
    Percept percept;
};

std::optional<Resolved> resolve(std::span<const Observation> frames, const std::string& label) {
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
        if (const Percept* p = it->nearest_with_label(label)) return Resolved{it->viewpoint, *p};
    }
    return std::nullopt;
}

// --- generation helpers ---

bool clear_of_objects(const Scene& scene, Vec2 p, double clearance) {
    return std::all_of(scene.objects.begin(), scene.objects.end(),
                       [&](const SceneObject& o) { return distance(o.position, p) >= o.radius + clearance; });
}

Pose random_pose(const Scene& scene, Stream& rng) {
    const Bounds& b = scene.bounds;
    for (int i = 0; i < 1000; ++i) {
        const auto nx = static_cast<std::int64_t>(std::floor((b.max_x - b.min_x) * 4.0));
        const auto ny = static_cast<std::int64_t>(std::floor((b.max_y - b.min_y) * 4.0));
        const Vec2 p{b.min_x + 0.25 * static_cast<double>(rng.uniform_int(0, nx)),
                     b.min_y + 0.25 * static_cast<double>(rng.uniform_int(0, ny))};
        if (clear_of_objects(scene, p, 0.3)) {
            return Pose(p.x, p.y, kTurnStep * static_cast<double>(rng.uniform_int(0, 39)));
        }
    }
    throw GenerationError("no free start position in scene");
}

std::vector<int> visible_ids(const Scene& scene, const Pose& pose, const Sensor& sensor) {
    std::vector<int> ids;
    for (const auto& p : render(scene, pose, sensor).percepts) ids.push_back(p.source_id);
    return ids;
}

void place_choices(Episode& ep, const std::string& truth, std::vector<std::string> distractors, int k,
                   std::optional<int> slot, Stream& rng) {
    for (std::size_t i = distractors.size(); i > 1; --i) std::swap(distractors[i - 1], distractors[rng.index(i)]);
    distractors.resize(static_cast<std::size_t>(k - 1));
    const int truth_at = slot ? ((*slot % k) + k) % k : static_cast<int>(rng.index(static_cast<std::size_t>(k)));
    ep.choices.clear();
    std::size_t d = 0;
    for (int i = 0; i < k; ++i) ep.choices.push_back(i == truth_at ? truth : distractors[d++]);
    ep.truth_index = truth_at;
}

std::vector<std::string> others(const std::vector<std::string>& all, const std::string& truth) {
    std::vector<std::string> out;
    for (const auto& s : all) {
        if (s != truth) out.push_back(s);
    }
    return out;
}

ViewpointRequirement pose_requirement(const Pose& pose) {
    ViewpointRequirement r;
    r.kind = ViewpointRequirement::Kind::pose_match;
    r.pose = pose;
    return r;
}

ViewpointRequirement visibility_requirement(int target, const Pose& hint) {
    ViewpointRequirement r;
    r.kind = ViewpointRequirement::Kind::target_visible;
    r.target_id = target;
    r.pose = hint;
    return r;
}

using Attempt = std::optional<Episode>;

Attempt try_pers(const Scene& scene, const Sensor& sensor, const EpisodeGenConfig& cfg, Stream& rng,
                 std::optional<int> slot) {
    const Pose start = random_pose(scene, rng);
    const auto vis = visible_ids(scene, start, sensor);
    if (vis.size() < 2) return std::nullopt;
    const int x = vis[rng.index(vis.size())];
    int y = x;
    while (y == x) y = vis[rng.index(vis.size())];
    const SceneObject& X = *scene.find(x);
    const SceneObject& Y = *scene.find(y);
    const double b = bearing_to(Pose(X.position.x, X.position.y, X.facing), Y.position);
    if (std::fabs(b) < cfg.boundary_margin || std::fabs(b) > 180.0 - cfg.boundary_margin) return std::nullopt;

    Episode ep;
    ep.start_pose = start;
    ep.category = QuestionCategory::Pers;
    ep.error_tag = ErrorTag::VD;
    ep.reference_id = x;
    ep.target_id = y;
    ep.question_text = "Imagine standing at the " + X.label + " and looking the way it faces. Is the " + Y.label +
                       " on your left or on your right?";
    ep.evidence.required_labels = {X.label, Y.label};
    const std::string truth = pers_side(X.position, X.facing, Y.position);
    place_choices(ep, truth, others(kPersChoices, truth), cfg.num_choices, slot, rng);
    return ep;
}

Attempt try_egom(const Scene& scene, const Sensor& sensor, const EpisodeGenConfig& cfg, Stream& rng,
                 std::optional<int> slot) {
    const Pose start = random_pose(scene, rng);
    const auto motion = rng.uniform_int(0, 3);
    Pose second;
    if (motion == 0) {
        second = apply_entry(start, {ActionKind::move_forward, static_cast<int>(rng.uniform_int(2, 6))});
    } else if (motion == 1) {
        const double back = kForwardStep * static_cast<double>(rng.uniform_int(2, 6));
        second = Pose(start.x() - back * cos_deg(start.heading()), start.y() - back * sin_deg(start.heading()),
                      start.heading());
    } else {
        const ActionKind turn = motion == 2 ? ActionKind::turn_left : ActionKind::turn_right;
        second = apply_entry(start, {turn, static_cast<int>(rng.uniform_int(2, 4))});
    }
    if (!clear_of_objects(scene, second.position(), 0.3)) return std::nullopt;

    const Observation a = render(scene, start, sensor);
    const Observation b = render(scene, second, sensor);
    std::vector<const SceneObject*> anchors;
    for (const auto& o : scene.objects) {
        const Percept* pa = a.nearest_with_label(o.label);
        const Percept* pb = b.nearest_with_label(o.label);
        if (!pa || !pb) continue;
        const double dd = std::fabs(pb->distance - pa->distance);
        const bool translating = motion <= 1;
        if (translating && dd < 2.0 * kEgoMDistanceThreshold) continue;
        if (!translating && dd > 1e-9) continue;
        anchors.push_back(&o);
    }
    if (anchors.empty()) return std::nullopt;
    const SceneObject& anchor = *anchors[rng.index(anchors.size())];
    const std::string truth = egom_from_poses(start, second);
    if (egom_from_percepts(*a.nearest_with_label(anchor.label), *b.nearest_with_label(anchor.label)) != truth) {
        return std::nullopt;
    }

    Episode ep;
    ep.start_pose = start;
    ep.second_pose = second;
    ep.category = QuestionCategory::EgoM;
    ep.error_tag = motion <= 1 ? ErrorTag::DU : ErrorTag::VD;
    ep.target_id = anchor.id;
    ep.question_text = "The two views were taken one after the other. Judging by the " + anchor.label +
                       ", how did the camera move between them?";
    ep.evidence.required_labels = {anchor.label};
    ep.evidence.required_viewpoints = {pose_requirement(start), pose_requirement(second)};
    place_choices(ep, truth, others(kEgoMChoices, truth), cfg.num_choices, slot, rng);
    return ep;
}

Attempt try_objm(const Scene& scene, const Sensor& sensor, const EpisodeGenConfig& cfg, Stream& rng,
                 std::optional<int> slot) {
    const Pose start = random_pose(scene, rng);
    const auto vis = visible_ids(scene, start, sensor);
    if (vis.empty()) return std::nullopt;
    const SceneObject& target = *scene.find(vis[rng.index(vis.size())]);
    const Vec2 ray = target.position - start.position();
    const double n = std::hypot(ray.x, ray.y);
    const Vec2 u{ray.x / n, ray.y / n};
    const Vec2 v{-u.y, u.x};
    const auto kind = rng.uniform_int(0, 3);
    const double step = kForwardStep * static_cast<double>(rng.uniform_int(3, 5));
    const Vec2 dir = kind == 0 ? v : kind == 1 ? -1.0 * v : kind == 2 ? -1.0 * u : u;
    const Vec2 moved = target.position + step * dir;
    if (distance(moved, start.position()) < 0.6) return std::nullopt;
    for (const auto& o : scene.objects) {
        if (o.id != target.id && distance(o.position, moved) < o.radius + target.radius + 0.2) return std::nullopt;
    }

    Scene after = scene;
    for (auto& o : after.objects) {
        if (o.id == target.id) o.position = moved;
    }
    if (!visible_from(after, target.id, start, sensor)) return std::nullopt;

    Episode ep;
    ep.scene = scene;
    ep.sensor = sensor;
    ep.start_pose = start;
    ep.displaced_position = moved;
    ep.category = QuestionCategory::ObjM;
    ep.error_tag = ErrorTag::DU;
    ep.target_id = target.id;
    ep.question_text = "Both views were taken from the same spot. How did the " + target.label +
                       " move between the first and the second view?";
    ep.evidence.required_labels = {target.label};
    ep.evidence.required_viewpoints = {pose_requirement(start)};
    const std::string truth = objm_direction(start.position(), target.position, moved);
    place_choices(ep, truth, others(kObjMChoices, truth), cfg.num_choices, slot, rng);
    const auto frames = start_frames(ep);
    if (answer_from_frames(ep, frames) != ep.truth_index) return std::nullopt;
    return ep;
}

Attempt try_egoact(const Scene& scene, const Sensor& sensor, const EpisodeGenConfig& cfg, Stream& rng,
                   std::optional<int> slot) {
    const Pose start = random_pose(scene, rng);
    ActionPlan plan;
    const ActionKind turn = rng.bernoulli(0.5) ? ActionKind::turn_left : ActionKind::turn_right;
    plan.entries.push_back({turn, static_cast<int>(rng.uniform_int(3, 20))});
    if (rng.bernoulli(0.3)) plan.entries.push_back({ActionKind::move_forward, static_cast<int>(rng.uniform_int(2, 6))});
    const Pose post = simulate_plan(start, plan).back();
    if (!clear_of_objects(scene, post.position(), 0.3)) return std::nullopt;

    std::vector<int> candidates;
    for (int id : visible_ids(scene, post, sensor)) {
        const double b = std::fabs(bearing_to(post, scene.find(id)->position));
        if (std::fabs(b - sensor.fov / 6.0) >= cfg.boundary_margin) candidates.push_back(id);
    }
    if (candidates.empty()) return std::nullopt;
    const SceneObject& target = *scene.find(candidates[rng.index(candidates.size())]);

    Episode ep;
    ep.start_pose = start;
    ep.category = QuestionCategory::EgoAct;
    ep.error_tag = ErrorTag::AC;
    ep.target_id = target.id;
    ep.question_text = "If you " + plan_phrase(plan) + ", where will the " + target.label + " be?";
    ep.evidence.required_labels = {target.label};
    ep.evidence.required_viewpoints = {pose_requirement(post)};
    ep.evidence.reference_plan = plan;
    const std::string truth = egoact_region(post, target.position, sensor.fov);
    place_choices(ep, truth, others(kEgoActChoices, truth), cfg.num_choices, slot, rng);
    return ep;
}

// Builds the K rotation candidates for a Goal episode around a target seen at
// start bearing `b0`. Returns false when not enough clean distractors exist.
bool goal_candidates(Episode& ep, double b0, const EpisodeGenConfig& cfg, Stream& rng, std::optional<int> slot) {
    const int truth_units = static_cast<int>(std::lround(b0 / kTurnStep));
    if (truth_units == 0) return false;
    std::vector<int> pool;
    for (int u = -20; u <= 20; ++u) {
        if (u == 0 || u == truth_units) continue;
        if (std::fabs(normalize_signed(b0 - kTurnStep * u)) >= ep.sensor.fov / 6.0 + cfg.boundary_margin) {
            pool.push_back(u);
        }
    }
    if (static_cast<int>(pool.size()) < cfg.num_choices - 1) return false;
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.index(i)]);
    pool.resize(static_cast<std::size_t>(cfg.num_choices - 1));

    const int k = cfg.num_choices;
    const int truth_at = slot ? ((*slot % k) + k) % k : static_cast<int>(rng.index(static_cast<std::size_t>(k)));
    std::size_t d = 0;
    for (int i = 0; i < k; ++i) {
        const int units = i == truth_at ? truth_units : pool[d++];
        ActionPlan plan = rotation_plan(units);
        ep.choices.push_back(plan_phrase(plan));
        ep.candidate_plans.push_back(std::move(plan));
    }
    ep.truth_index = truth_at;
    return true;
}

Attempt try_goal_turn(const Scene& scene, const Sensor& sensor, const EpisodeGenConfig& cfg, Stream& rng,
                      std::optional<int> slot) {
    const Pose start = random_pose(scene, rng);
    Sensor all_round = sensor;
    all_round.fov = 360.0;
    std::vector<int> candidates;
    for (int id : visible_ids(scene, start, all_round)) {
        if (std::fabs(bearing_to(start, scene.find(id)->position)) > sensor.fov / 2.0 + 2.0) candidates.push_back(id);
    }
    if (candidates.empty()) return std::nullopt;
    const SceneObject& target = *scene.find(candidates[rng.index(candidates.size())]);
    const double b0 = bearing_to(start, target.position);

    Episode ep;
    ep.sensor = sensor;
    ep.start_pose = start;
    ep.category = QuestionCategory::Goal;
    ep.error_tag = ErrorTag::AC;
    ep.target_id = target.id;
    if (!goal_candidates(ep, b0, cfg, rng, slot)) return std::nullopt;
    const Pose facing(start.x(), start.y(), start.heading() + kTurnStep * std::lround(b0 / kTurnStep));
    ep.question_text = "Which action brings the " + target.label + " to the center of your view?";
    ep.evidence.required_labels = {target.label};
    ep.evidence.required_viewpoints = {visibility_requirement(target.id, facing)};
    return ep;
}

Attempt try_goal_occluded(const Scene& scene, const Sensor& sensor, const EpisodeGenConfig& cfg, Stream& rng,
                          std::optional<int> slot) {
    if (scene.objects.size() < 2) return std::nullopt;
    const SceneObject& target = scene.objects[rng.index(scene.objects.size())];
    const SceneObject* blocker = &target;
    while (blocker->id == target.id) blocker = &scene.objects[rng.index(scene.objects.size())];

    // Stand behind the blocker, looking roughly at the target.
    const Vec2 away = blocker->position - target.position;
    const double gap = std::hypot(away.x, away.y);
    const double back = rng.uniform(0.6, 1.8);
    const Vec2 spot = blocker->position + (back / gap) * away;
    if (!scene.bounds.contains(spot) || !clear_of_objects(scene, spot, 0.3)) return std::nullopt;
    const Pose probe(spot.x, spot.y, 0.0);
    const double toward = bearing_to(probe, target.position);
    const double heading = kTurnStep * std::round((toward + rng.uniform(-30.0, 30.0)) / kTurnStep);
    const Pose start(spot.x, spot.y, heading);

    const double b0 = bearing_to(start, target.position);
    if (distance(start.position(), target.position) > sensor.range || std::fabs(b0) > sensor.fov / 2.0) {
        return std::nullopt;
    }
    if (visible_from(scene, target.id, start, sensor)) return std::nullopt;

    // Search for a short monotone detour that reveals the target.
    std::vector<ActionPlan> detours;
    for (int dir = 0; dir < 2; ++dir) {
        for (int k = 0; k <= 10; ++k) {
            for (int j = 2; j <= 10; ++j) {
                ActionPlan p;
                if (k > 0) p.entries.push_back({dir == 0 ? ActionKind::turn_left : ActionKind::turn_right, k});
                p.entries.push_back({ActionKind::move_forward, j});
                if (k == 0 && dir == 1) continue;
                detours.push_back(std::move(p));
            }
        }
    }
    for (std::size_t i = detours.size(); i > 1; --i) std::swap(detours[i - 1], detours[rng.index(i)]);
    std::optional<Pose> reveal;
    for (const auto& p : detours) {
        const auto poses = simulate_plan(start, p);
        const bool clear = std::all_of(poses.begin(), poses.end(), [&](const Pose& q) {
            return clear_of_objects(scene, q.position(), 0.3) && scene.bounds.contains(q.position());
        });
        if (!clear) continue;
        const Pose end = poses.back();
        if (distance(end.position(), target.position) < 0.5) continue;
        if (std::fabs(bearing_to(end, target.position)) > sensor.fov / 2.0 - cfg.boundary_margin) continue;
        if (!visible_from(scene, target.id, end, sensor)) continue;
        // The greedy planner must land exactly here for the hint to be reachable.
        const ActionPlan greedy = plan_towards(start, end);
        if (!approx_equal(simulate_plan(start, greedy).back(), end, 1e-6)) continue;
        reveal = end;
        break;
    }
    if (!reveal) return std::nullopt;

    Episode ep;
    ep.sensor = sensor;
    ep.start_pose = start;
    ep.category = QuestionCategory::Goal;
    ep.error_tag = ErrorTag::LO;
    ep.target_id = target.id;
    if (!goal_candidates(ep, b0, cfg, rng, slot)) return std::nullopt;
    ep.question_text = "The " + target.label + " is hidden behind the " + blocker->label +
                       ". Which action brings the " + target.label + " to the center of your view?";
    ep.evidence.required_labels = {target.label};
    ep.evidence.required_viewpoints = {visibility_requirement(target.id, *reveal)};
    return ep;
}

std::string hex_id(std::uint64_t seed) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(seed));
    return buf;
}

}  // namespace

Episode generate_episode(const Scene& scene, QuestionCategory category, std::uint64_t seed, const Sensor& sensor,
                         const EpisodeGenConfig& config, std::optional<int> truth_slot) {
    sensor.validate();
    if (config.num_choices < 2 || config.num_choices > 4) throw ValidationError("num_choices must lie in [2, 4]");
    const std::size_t needed = category == QuestionCategory::Pers ? 2 : 1;
    if (scene.objects.size() < needed) {
        throw GenerationError("scene has too few objects for a " + std::string(to_string(category)) + " episode");
    }

    Stream rng(derive_seed(seed, "episode", {static_cast<std::uint64_t>(category)}));
    const bool occluded_goal = category == QuestionCategory::Goal && rng.bernoulli(config.lo_fraction);
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        Attempt ep;
        switch (category) {
            case QuestionCategory::Pers: ep = try_pers(scene, sensor, config, rng, truth_slot); break;
            case QuestionCategory::EgoM: ep = try_egom(scene, sensor, config, rng, truth_slot); break;
            case QuestionCategory::ObjM: ep = try_objm(scene, sensor, config, rng, truth_slot); break;
            case QuestionCategory::EgoAct: ep = try_egoact(scene, sensor, config, rng, truth_slot); break;
            case QuestionCategory::Goal:
                ep = occluded_goal ? try_goal_occluded(scene, sensor, config, rng, truth_slot)
                                   : try_goal_turn(scene, sensor, config, rng, truth_slot);
                break;
        }
        if (!ep) continue;
        ep->scene = scene;
        ep->sensor = sensor;
        ep->seed = seed;
        ep->id = std::string(to_string(category)) + "-" + hex_id(seed);
        if (oracle_answer(*ep) != ep->truth_index) continue;
        // Clean start evidence must answer correctly whenever it suffices.
        const auto frames = start_frames(*ep);
        if (sufficient(*ep, frames) && answer_from_frames(*ep, frames) != ep->truth_index) continue;
        return std::move(*ep);
    }
    throw GenerationError("could not instantiate a " + std::string(to_string(category)) + " episode in scene " +
                          std::to_string(scene.seed));
}

std::vector<Observation> start_frames(const Episode& episode) {
    std::vector<Observation> frames;
    frames.push_back(render(episode.scene, episode.start_pose, episode.sensor));
    if (episode.category == QuestionCategory::EgoM && episode.second_pose) {
        frames.push_back(render(episode.scene, *episode.second_pose, episode.sensor));
    } else if (episode.category == QuestionCategory::ObjM && episode.displaced_position) {
        Scene after = episode.scene;
        for (auto& o : after.objects) {
            if (o.id == episode.target_id) o.position = *episode.displaced_position;
        }
        frames.push_back(render(after, episode.start_pose, episode.sensor));
    }
    return frames;
}

int oracle_answer(const Episode& ep) {
    if (ep.choices.empty() || ep.truth_index < 0 || ep.truth_index >= ep.num_choices()) {
        throw ValidationError("episode " + ep.id + " has an invalid choice set");
    }
    const SceneObject* target = ep.scene.find(ep.target_id);
    if (!target) throw ValidationError("episode " + ep.id + " references a missing target object");
    switch (ep.category) {
        case QuestionCategory::Pers: {
            const SceneObject* ref = ep.scene.find(ep.reference_id);
            if (!ref) throw ValidationError("Pers episode " + ep.id + " lacks a reference object");
            return index_of(ep, pers_side(ref->position, ref->facing, target->position));
        }
        case QuestionCategory::EgoM:
            if (!ep.second_pose) throw ValidationError("EgoM episode " + ep.id + " lacks a second pose");
            return index_of(ep, egom_from_poses(ep.start_pose, *ep.second_pose));
        case QuestionCategory::ObjM:
            if (!ep.displaced_position) throw ValidationError("ObjM episode " + ep.id + " lacks a displacement");
            return index_of(ep, objm_direction(ep.start_pose.position(), target->position, *ep.displaced_position));
        case QuestionCategory::EgoAct: {
            if (!ep.evidence.reference_plan) throw ValidationError("EgoAct episode " + ep.id + " lacks a plan");
            const auto poses = simulate_plan(ep.start_pose, *ep.evidence.reference_plan);
            const Pose post = poses.empty() ? ep.start_pose : poses.back();
            return index_of(ep, egoact_region(post, target->position, ep.sensor.fov));
        }
        case QuestionCategory::Goal: {
            if (ep.candidate_plans.size() != ep.choices.size()) {
                throw ValidationError("Goal episode " + ep.id + " needs one candidate plan per choice");
            }
            const auto idx = goal_choice(ep, target->position);
            if (!idx) throw ValidationError("Goal episode " + ep.id + " does not have exactly one centering plan");
            return *idx;
        }
    }
    throw ValidationError("unknown category");
}

bool requirement_met(const Episode& episode, const ViewpointRequirement& req, const Pose& viewpoint) {
    switch (req.kind) {
        case ViewpointRequirement::Kind::pose_match:
            return distance(req.pose.position(), viewpoint.position()) <= req.position_tol &&
                   std::fabs(normalize_signed(req.pose.heading() - viewpoint.heading())) <= req.heading_tol;
        case ViewpointRequirement::Kind::target_visible:
            return visible_from(episode.scene, req.target_id, viewpoint, episode.sensor);
    }
    return false;
}

bool sufficient(const Episode& episode, std::span<const Observation> frames) {
    for (const auto& label : episode.evidence.required_labels) {
        const bool seen = std::any_of(frames.begin(), frames.end(),
                                      [&](const Observation& f) { return f.nearest_with_label(label) != nullptr; });
        if (!seen) return false;
    }
    for (const auto& req : episode.evidence.required_viewpoints) {
        const bool met = std::any_of(frames.begin(), frames.end(),
                                     [&](const Observation& f) { return requirement_met(episode, req, f.viewpoint); });
        if (!met) return false;
    }
    return true;
}

std::optional<Pose> unmet_viewpoint_hint(const Episode& episode, std::span<const Observation> frames) {
    for (const auto& req : episode.evidence.required_viewpoints) {
        const bool met = std::any_of(frames.begin(), frames.end(),
                                     [&](const Observation& f) { return requirement_met(episode, req, f.viewpoint); });
        if (!met) return req.pose;
    }
    return std::nullopt;
}

std::optional<int> answer_from_frames(const Episode& ep, std::span<const Observation> frames) {
    if (frames.empty()) return std::nullopt;
    switch (ep.category) {
        case QuestionCategory::Pers: {
            if (ep.evidence.required_labels.size() != 2) return std::nullopt;
            const auto ref = resolve(frames, ep.evidence.required_labels[0]);
            const auto other = resolve(frames, ep.evidence.required_labels[1]);
            if (!ref || !other) return std::nullopt;
            const Vec2 ref_pos = percept_position(ref->viewpoint, ref->percept);
            const Vec2 other_pos = percept_position(other->viewpoint, other->percept);
            if (distance(ref_pos, other_pos) < 1e-9) return std::nullopt;
            return find_choice(ep, pers_side(ref_pos, percept_facing(ref->viewpoint, ref->percept), other_pos));
        }
        case QuestionCategory::EgoM: {
            if (frames.size() < 2 || ep.evidence.required_labels.empty()) return std::nullopt;
            const std::string& label = ep.evidence.required_labels[0];
            const Percept* a = frames[0].nearest_with_label(label);
            const Percept* b = frames[1].nearest_with_label(label);
            if (!a || !b) return std::nullopt;
            return find_choice(ep, egom_from_percepts(*a, *b));
        }
        case QuestionCategory::ObjM: {
            if (frames.size() < 2 || ep.evidence.required_labels.empty()) return std::nullopt;
            const std::string& label = ep.evidence.required_labels[0];
            const Percept* a = frames[0].nearest_with_label(label);
            const Percept* b = frames[1].nearest_with_label(label);
            if (!a || !b) return std::nullopt;
            const Vec2 before = percept_position(frames[0].viewpoint, *a);
            const Vec2 after = percept_position(frames[1].viewpoint, *b);
            if (distance(before, frames[0].viewpoint.position()) < 1e-9) return std::nullopt;
            return find_choice(ep, objm_direction(frames[0].viewpoint.position(), before, after));
        }
        case QuestionCategory::EgoAct: {
            if (!ep.evidence.reference_plan || ep.evidence.required_labels.empty()) return std::nullopt;
            const auto target = resolve(frames, ep.evidence.required_labels[0]);
            if (!target) return std::nullopt;
            const auto poses = simulate_plan(ep.start_pose, *ep.evidence.reference_plan);
            const Pose post = poses.empty() ? ep.start_pose : poses.back();
            const Vec2 pos = percept_position(target->viewpoint, target->percept);
            if (distance(pos, post.position()) < 1e-9) return std::nullopt;
            return find_choice(ep, egoact_region(post, pos, ep.sensor.fov));
        }
        case QuestionCategory::Goal: {
            if (ep.evidence.required_labels.empty()) return std::nullopt;
            const auto target = resolve(frames, ep.evidence.required_labels[0]);
            if (!target) return std::nullopt;
            const Vec2 pos = percept_position(target->viewpoint, target->percept);
            if (distance(pos, ep.start_pose.position()) < 1e-9) return std::nullopt;
            return goal_choice(ep, pos);
        }
    }
    return std::nullopt;
}

}  // namespace avic
