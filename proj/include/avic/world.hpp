#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "avic/geometry.hpp"

namespace avic {

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SceneObject {
    int id = 0;
    std::string label;
    Vec2 position;
    double radius = 0.25;
    double facing = 0.0;  // degrees, [0, 360)
    std::string color;

    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Bounds {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 10.0;
    double max_y = 10.0;

    bool contains(Vec2 p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

const std::vector<std::string>& default_vocabulary();
const std::vector<std::string>& default_colors();

struct Scene {
    std::vector<SceneObject> objects;
    Bounds bounds;
    std::uint64_t seed = 0;
    // Label pool the scene was drawn from; the world model swaps labels within it.
    std::vector<std::string> vocabulary;

    const SceneObject* find(int id) const;
    const SceneObject* find_label(const std::string& label) const;
    friend bool operator==(const Scene&, const Scene&) = default;
};

struct SceneGenConfig {
    int n_objects = 8;
    Bounds bounds;
    double min_separation = 0.8;
    double min_radius = 0.15;
    double max_radius = 0.35;
    std::vector<std::string> vocabulary = default_vocabulary();
    int max_attempts = 10000;
};

// Throws ValidationError for an infeasible request, GenerationError when
// rejection sampling runs out of attempts.
Scene generate_scene(const SceneGenConfig& config, std::uint64_t seed);

struct Sensor {
    double fov = 90.0;  // total, degrees
    double range = 5.0;
    bool occlusion = true;

    void validate() const;
};

struct Percept {
    std::string label;
    std::string color;
    double bearing = 0.0;  // relative to the viewpoint heading
    double distance = 0.0;
    double relative_facing = 0.0;  // object facing relative to the viewpoint heading, (-180, 180]
    // Internal bookkeeping for oracles and analysis. Agents match by label.
    int source_id = -1;
    bool corrupted = false;

    friend bool operator==(const Percept&, const Percept&) = default;
};

struct Observation {
    Pose viewpoint;
    std::vector<Percept> percepts;
    bool imagined = false;
    std::set<int> corrupted_ids;

    const Percept* nearest_with_label(const std::string& label) const;
};

// World position implied by a percept seen from a viewpoint.
Vec2 percept_position(const Pose& viewpoint, const Percept& percept);
double percept_facing(const Pose& viewpoint, const Percept& percept);

bool same_view(const Observation& a, const Observation& b);

Observation render(const Scene& scene, const Pose& pose, const Sensor& sensor);
Observation render_objects(const std::vector<SceneObject>& objects, const Pose& pose, const Sensor& sensor);

// Ground-truth visibility of a single object (cone, range and occlusion).
bool visible_from(const Scene& scene, int object_id, const Pose& pose, const Sensor& sensor);

struct NoiseModel {
    double p_drop = 0.0;
    double p_label = 0.0;
    double sigma_pos = 0.0;

    bool is_zero() const { return p_drop == 0.0 && p_label == 0.0 && sigma_pos == 0.0; }
    void validate() const;
};

enum class CorruptionKind : std::uint8_t { drop, label_swap, jitter };
std::string_view to_string(CorruptionKind kind);

struct CorruptionEvent {
    int frame = 0;
    int object_id = 0;
    CorruptionKind kind = CorruptionKind::drop;

    friend bool operator==(const CorruptionEvent&, const CorruptionEvent&) = default;
};

struct ImaginedTrajectory {
    ActionPlan plan;
    std::vector<Observation> frames;
    std::vector<CorruptionEvent> corruption_log;
};

// Renders one imagined frame. `frame_key` keys the corruption stream together
// with the seed and the object id.
Observation imagine_frame(const Scene& scene, const Pose& pose, const Sensor& sensor, const NoiseModel& noise,
                          std::uint64_t seed, int frame_key, std::vector<CorruptionEvent>* log = nullptr);

// One imagined frame per plan entry.
ImaginedTrajectory imagine(const Scene& scene, const Pose& start, const ActionPlan& plan, const Sensor& sensor,
                           const NoiseModel& noise, std::uint64_t seed, const PlanLimits& limits = {});

}  // namespace avic
