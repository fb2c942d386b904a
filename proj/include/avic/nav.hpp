#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avic/world.hpp"

namespace avic {

struct NavNode {
    int id = 0;
    Vec2 position;
    int landmark_id = -1;  // scene object attached to this node, -1 for none
};

struct NavEdge {
    int a = 0;
    int b = 0;
};

struct NavGraph {
    std::vector<NavNode> nodes;
    std::vector<NavEdge> edges;
    Scene scene;  // landmark objects

    // Sorted neighbor ids.
    std::vector<int> neighbors(int node) const;
    bool adjacent(int a, int b) const;
    double edge_length(int a, int b) const;  // Euclidean; throws ValidationError for non-edges
    bool connected() const;
    std::string landmark_label(int node) const;  // empty when the node has no landmark

    // Throws ValidationError on dangling edge ids, self loops or landmark ids
    // missing from the scene.
    void validate() const;
};

// Dijkstra path length; nullopt when unreachable.
std::optional<double> shortest_path_length(const NavGraph& graph, int from, int to);
std::vector<int> shortest_path(const NavGraph& graph, int from, int to);

struct NavEpisode {
    std::string id;
    NavGraph graph;
    int start_node = 0;
    int goal_node = 0;
    std::vector<std::string> instruction;  // landmark labels in visiting order
    int max_steps = 15;
    double success_threshold = 3.0;
    std::uint64_t seed = 0;
};

struct NavGenConfig {
    int rows = 4;
    int cols = 4;
    double spacing = 2.5;
    double jitter = 0.4;
    double extra_edge_prob = 0.3;
    double landmark_offset_min = 0.5;
    double landmark_offset_max = 0.9;
    double landmark_radius = 0.2;
    int min_hops = 3;
    int max_steps = 15;
    double success_threshold = 3.0;
};

NavEpisode generate_nav_episode(const NavGenConfig& config, std::uint64_t seed);

enum class NavStrategy : std::uint8_t { none, adaptive, always_on };
std::string_view to_string(NavStrategy s);
std::optional<NavStrategy> parse_nav_strategy(std::string_view s);

struct NavConfig {
    NavStrategy strategy = NavStrategy::adaptive;
    double q_gate = 0.9;  // chance the gate makes the evidence-correct call
    Sensor sensor{90.0, 3.0, true};
    NoiseModel noise;
};

struct NavState {
    int current = 0;
    std::vector<int> visited;
    std::size_t progress = 0;  // index of the next unreached instruction landmark
};

struct NavStepResult {
    std::optional<int> move;  // nullopt means stop
    bool imagined = false;
    int wm_calls = 0;
    bool forced_stop = false;  // no candidate to move to
};

NavStepResult nav_step(const NavEpisode& episode, const NavState& state, const NavConfig& config,
                       std::uint64_t seed);

struct NavRecord {
    std::string episode_id;
    std::vector<int> visited;
    bool stopped = false;  // agent chose to stop, as opposed to running out of steps
    double final_ne = 0.0;
    std::vector<int> step_wm_calls;
};

NavRecord run_nav(const NavEpisode& episode, const NavConfig& config, std::uint64_t seed);

// Traversed length along `visited`; throws ValidationError when two
// consecutive nodes are not adjacent.
double path_length(const NavGraph& graph, const std::vector<int>& visited);

struct NavMetrics {
    double ne = 0.0;
    double osr = 0.0;
    double sr = 0.0;
    double spl = 0.0;
    int episodes = 0;
    int excluded = 0;  // unreachable goals
};

// Records and episodes are matched by id. Throws ValidationError for a record
// without an episode.
NavMetrics nav_metrics(const std::vector<NavRecord>& records, const std::vector<NavEpisode>& episodes);

}  // namespace avic
