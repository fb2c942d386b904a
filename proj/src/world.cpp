#include "avic/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "avic/rng.hpp"

namespace avic {

const std::vector<std::string>& default_vocabulary() {
    static const std::vector<std::string> vocab = {
        "chair", "table", "sofa",  "lamp",  "plant",  "bed",   "desk", "shelf", "tv",  "fridge",
        "sink",  "oven",  "door",  "clock", "vase",   "piano", "rug",  "bin",   "fan", "mirror",
        "stool", "bench", "crate", "easel", "guitar", "kettle"};
    return vocab;
}

const std::vector<std::string>& default_colors() {
    static const std::vector<std::string> colors = {"red", "green", "blue", "yellow", "white", "black",
                                                    "gray", "brown", "orange", "purple"};
    return colors;
}

const SceneObject* Scene::find(int id) const {
    for (const auto& o : objects) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

const SceneObject* Scene::find_label(const std::string& label) const {
    for (const auto& o : objects) {
        if (o.label == label) return &o;
    }
    return nullptr;
}

Scene generate_scene(const SceneGenConfig& config, std::uint64_t seed) {
    if (config.n_objects < 0) throw ValidationError("n_objects must be non-negative");
    if (static_cast<std::size_t>(config.n_objects) > config.vocabulary.size()) {
        throw ValidationError("vocabulary has " + std::to_string(config.vocabulary.size()) +
                              " labels, fewer than n_objects " + std::to_string(config.n_objects));
    }
    if (config.max_radius > config.min_separation / 2.0 || config.min_radius <= 0.0 ||
        config.min_radius > config.max_radius) {
        throw ValidationError("object radii must lie in (0, min_separation / 2]");
    }

    Stream rng(derive_seed(seed, "scene"));
    Scene scene;
    scene.bounds = config.bounds;
    scene.seed = seed;
    scene.vocabulary = config.vocabulary;

    std::vector<std::string> labels = config.vocabulary;
    // Partial Fisher-Yates: first n_objects labels are the draw.
    for (int i = 0; i < config.n_objects; ++i) {
        const std::size_t j = i + rng.index(labels.size() - i);
        std::swap(labels[i], labels[j]);
    }

    const auto& colors = default_colors();
    int attempts = 0;
    for (int i = 0; i < config.n_objects; ++i) {
        SceneObject obj;
        obj.id = i;
        obj.label = labels[i];
        obj.radius = rng.uniform(config.min_radius, config.max_radius);
        obj.facing = static_cast<double>(rng.uniform_int(0, 39)) * kTurnStep;
        obj.color = colors[rng.index(colors.size())];
        const Bounds& b = config.bounds;
        for (;;) {
            if (++attempts > config.max_attempts) {
                throw GenerationError("could not place " + std::to_string(config.n_objects) +
                                      " objects with separation " + std::to_string(config.min_separation));
            }
            // Quarter-meter grid keeps positions exactly representable.
            const auto nx = static_cast<std::int64_t>(std::floor((b.max_x - b.min_x) * 4.0));
            const auto ny = static_cast<std::int64_t>(std::floor((b.max_y - b.min_y) * 4.0));
            obj.position = {b.min_x + 0.25 * static_cast<double>(rng.uniform_int(0, nx)),
                            b.min_y + 0.25 * static_cast<double>(rng.uniform_int(0, ny))};
            const bool clear = std::all_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
                return distance(o.position, obj.position) >= config.min_separation;
            });
            if (clear) break;
        }
        scene.objects.push_back(obj);
    }
    return scene;
}

void Sensor::validate() const {
    if (!(fov > 0.0 && fov <= 360.0)) throw ValidationError("sensor fov must lie in (0, 360]");
    if (!(range > 0.0)) throw ValidationError("sensor range must be positive");
}

void NoiseModel::validate() const {
    if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw ValidationError("noise p_drop must lie in [0, 1]");
    if (!(p_label >= 0.0 && p_label <= 1.0)) throw ValidationError("noise p_label must lie in [0, 1]");
    if (!(sigma_pos >= 0.0)) throw ValidationError("noise sigma_pos must be non-negative");
}

std::string_view to_string(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::drop: return "drop";
        case CorruptionKind::label_swap: return "label_swap";
        case CorruptionKind::jitter: return "jitter";
    }
    return "drop";
}

const Percept* Observation::nearest_with_label(const std::string& label) const {
    const Percept* best = nullptr;
    for (const auto& p : percepts) {
        if (p.label == label && (!best || p.distance < best->distance)) best = &p;
    }
    return best;
}

Vec2 percept_position(const Pose& viewpoint, const Percept& percept) {
    const double absolute = viewpoint.heading() + percept.bearing;
    return {viewpoint.x() + percept.distance * cos_deg(absolute), viewpoint.y() + percept.distance * sin_deg(absolute)};
}

double percept_facing(const Pose& viewpoint, const Percept& percept) {
    return normalize_heading(viewpoint.heading() + percept.relative_facing);
}

bool same_view(const Observation& a, const Observation& b) {
    return a.viewpoint == b.viewpoint && a.percepts == b.percepts;
}

namespace {

struct Polar {
    double bearing = 0.0;
    double distance = 0.0;
    bool valid = false;
};

Polar polar_of(const Pose& pose, Vec2 p) {
    Polar out;
    out.distance = distance(pose.position(), p);
    if (out.distance < 1e-12) return out;
    out.bearing = bearing_to(pose, p);
    out.valid = true;
    return out;
}

bool occluded(const std::vector<Polar>& polar, const std::vector<SceneObject>& objects, std::size_t target) {
    const Polar& t = polar[target];
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (i == target || !polar[i].valid || polar[i].distance >= t.distance) continue;
        const double half = std::asin(std::min(1.0, objects[i].radius / polar[i].distance)) * (180.0 / std::numbers::pi);
        if (std::fabs(normalize_signed(polar[i].bearing - t.bearing)) <= half) return true;
    }
    return false;
}

}  // namespace

Observation render_objects(const std::vector<SceneObject>& objects, const Pose& pose, const Sensor& sensor) {
    Observation obs;
    obs.viewpoint = pose;
    std::vector<Polar> polar;
    polar.reserve(objects.size());
    for (const auto& o : objects) polar.push_back(polar_of(pose, o.position));

    const double half_fov = sensor.fov / 2.0;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const Polar& p = polar[i];
        if (!p.valid || p.distance > sensor.range) continue;
        if (std::fabs(p.bearing) > half_fov + kAngleEps) continue;
        if (sensor.occlusion && occluded(polar, objects, i)) continue;
        Percept percept;
        percept.label = objects[i].label;
        percept.color = objects[i].color;
        percept.bearing = p.bearing;
        percept.distance = p.distance;
        percept.relative_facing = normalize_signed(objects[i].facing - pose.heading());
        percept.source_id = objects[i].id;
        obs.percepts.push_back(std::move(percept));
    }
    return obs;
}

Observation render(const Scene& scene, const Pose& pose, const Sensor& sensor) {
    return render_objects(scene.objects, pose, sensor);
}

bool visible_from(const Scene& scene, int object_id, const Pose& pose, const Sensor& sensor) {
    const Observation obs = render(scene, pose, sensor);
    return std::any_of(obs.percepts.begin(), obs.percepts.end(),
                       [&](const Percept& p) { return p.source_id == object_id; });
}

Observation imagine_frame(const Scene& scene, const Pose& pose, const Sensor& sensor, const NoiseModel& noise,
                          std::uint64_t seed, int frame_key, std::vector<CorruptionEvent>* log) {
    if (noise.is_zero()) {
        Observation obs = render(scene, pose, sensor);
        obs.imagined = true;
        return obs;
    }

    std::vector<SceneObject> objects;
    objects.reserve(scene.objects.size());
    std::set<int> corrupted;
    for (const auto& original : scene.objects) {
        Stream rng(derive_seed(seed, "corrupt",
                               {static_cast<std::uint64_t>(frame_key), static_cast<std::uint64_t>(original.id)}));
        const double u_drop = rng.uniform();
        const double u_label = rng.uniform();
        if (u_drop < noise.p_drop) {
            if (log) log->push_back({frame_key, original.id, CorruptionKind::drop});
            continue;
        }
        SceneObject obj = original;
        if (u_label < noise.p_label && scene.vocabulary.size() > 1) {
            std::vector<const std::string*> others;
            for (const auto& l : scene.vocabulary) {
                if (l != obj.label) others.push_back(&l);
            }
            obj.label = *others[rng.index(others.size())];
            corrupted.insert(obj.id);
            if (log) log->push_back({frame_key, original.id, CorruptionKind::label_swap});
        } else if (noise.sigma_pos > 0.0) {
            obj.position.x += noise.sigma_pos * rng.normal();
            obj.position.y += noise.sigma_pos * rng.normal();
            corrupted.insert(obj.id);
            if (log) log->push_back({frame_key, original.id, CorruptionKind::jitter});
        }
        objects.push_back(std::move(obj));
    }

    Observation obs = render_objects(objects, pose, sensor);
    obs.imagined = true;
    for (auto& p : obs.percepts) {
        if (corrupted.count(p.source_id)) {
            p.corrupted = true;
            obs.corrupted_ids.insert(p.source_id);
        }
    }
    return obs;
}

ImaginedTrajectory imagine(const Scene& scene, const Pose& start, const ActionPlan& plan, const Sensor& sensor,
                           const NoiseModel& noise, std::uint64_t seed, const PlanLimits& limits) {
    const std::vector<Pose> poses = simulate_plan(start, plan, limits);
    ImaginedTrajectory traj;
    traj.plan = plan;
    traj.frames.reserve(poses.size());
    for (std::size_t k = 0; k < poses.size(); ++k) {
        traj.frames.push_back(
            imagine_frame(scene, poses[k], sensor, noise, seed, static_cast<int>(k), &traj.corruption_log));
    }
    return traj;
}

}  // namespace avic
