#include "avic/nav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

#include "avic/rng.hpp"

namespace avic {

std::vector<int> NavGraph::neighbors(int node) const {
    std::vector<int> out;
    for (const auto& e : edges) {
        if (e.a == node) out.push_back(e.b);
        if (e.b == node) out.push_back(e.a);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool NavGraph::adjacent(int a, int b) const {
    return std::any_of(edges.begin(), edges.end(),
                       [&](const NavEdge& e) { return (e.a == a && e.b == b) || (e.a == b && e.b == a); });
}

double NavGraph::edge_length(int a, int b) const {
    if (!adjacent(a, b)) {
        throw ValidationError("nodes " + std::to_string(a) + " and " + std::to_string(b) + " are not adjacent");
    }
    return distance(nodes.at(a).position, nodes.at(b).position);
}

bool NavGraph::connected() const {
    if (nodes.empty()) return true;
    std::vector<bool> seen(nodes.size(), false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const int n = stack.back();
        stack.pop_back();
        for (int m : neighbors(n)) {
            if (!seen[m]) {
                seen[m] = true;
                stack.push_back(m);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::string NavGraph::landmark_label(int node) const {
    const auto id = nodes.at(node).landmark_id;
    if (id < 0) return {};
    const auto* obj = scene.find(id);
    return obj ? obj->label : std::string{};
}

void NavGraph::validate() const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id != static_cast<int>(i)) throw ValidationError("nav node ids must be 0..n-1 in order");
        if (nodes[i].landmark_id >= 0 && !scene.find(nodes[i].landmark_id)) {
            throw ValidationError("nav node " + std::to_string(i) + " references a missing landmark");
        }
    }
    const int n = static_cast<int>(nodes.size());
    for (const auto& e : edges) {
        if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) throw ValidationError("nav edge references a missing node");
        if (e.a == e.b) throw ValidationError("nav edge is a self loop");
    }
}

namespace {

struct Dijkstra {
    std::vector<double> dist;
    std::vector<int> prev;
};

Dijkstra dijkstra(const NavGraph& graph, int from) {
    const auto n = graph.nodes.size();
    Dijkstra d{std::vector<double>(n, std::numeric_limits<double>::infinity()), std::vector<int>(n, -1)};
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    d.dist.at(from) = 0.0;
    queue.push({0.0, from});
    while (!queue.empty()) {
        const auto [du, u] = queue.top();
        queue.pop();
        if (du > d.dist[u]) continue;
        for (int v : graph.neighbors(u)) {
            const double alt = du + graph.edge_length(u, v);
            if (alt < d.dist[v]) {
                d.dist[v] = alt;
                d.prev[v] = u;
                queue.push({alt, v});
            }
        }
    }
    return d;
}

double heading_towards(Vec2 from, Vec2 to) {
    return std::atan2(to.y - from.y, to.x - from.x) * 180.0 / std::numbers::pi;
}

std::string hex_id(std::uint64_t seed) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(seed));
    return buf;
}

int find_root(std::vector<int>& parent, int x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

std::optional<double> shortest_path_length(const NavGraph& graph, int from, int to) {
    const auto d = dijkstra(graph, from);
    const double v = d.dist.at(to);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

std::vector<int> shortest_path(const NavGraph& graph, int from, int to) {
    const auto d = dijkstra(graph, from);
    if (!std::isfinite(d.dist.at(to))) return {};
    std::vector<int> path;
    for (int v = to; v != -1; v = d.prev[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

NavEpisode generate_nav_episode(const NavGenConfig& config, std::uint64_t seed) {
    if (config.rows < 1 || config.cols < 1 || config.rows * config.cols < 2) {
        throw ValidationError("nav.grid: need at least two nodes");
    }
    const auto& vocab = default_vocabulary();
    const int n = config.rows * config.cols;
    if (n > static_cast<int>(vocab.size())) throw ValidationError("nav.grid: more nodes than landmark labels");

    Stream rng(derive_seed(seed, "nav-graph"));
    NavEpisode ep;
    ep.seed = seed;
    ep.id = "Nav-" + hex_id(seed);
    ep.max_steps = config.max_steps;
    ep.success_threshold = config.success_threshold;
    NavGraph& g = ep.graph;

    for (int r = 0; r < config.rows; ++r) {
        for (int c = 0; c < config.cols; ++c) {
            NavNode node;
            node.id = r * config.cols + c;
            node.position = {c * config.spacing + rng.uniform(-config.jitter, config.jitter),
                             r * config.spacing + rng.uniform(-config.jitter, config.jitter)};
            g.nodes.push_back(node);
        }
    }

    std::vector<NavEdge> grid_edges;
    for (int r = 0; r < config.rows; ++r) {
        for (int c = 0; c < config.cols; ++c) {
            const int id = r * config.cols + c;
            if (c + 1 < config.cols) grid_edges.push_back({id, id + 1});
            if (r + 1 < config.rows) grid_edges.push_back({id, id + config.cols});
        }
    }
    for (std::size_t i = grid_edges.size(); i > 1; --i) std::swap(grid_edges[i - 1], grid_edges[rng.index(i)]);
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    for (const auto& e : grid_edges) {
        const int ra = find_root(parent, e.a);
        const int rb = find_root(parent, e.b);
        if (ra != rb) {
            parent[ra] = rb;
            g.edges.push_back(e);
        } else if (rng.bernoulli(config.extra_edge_prob)) {
            g.edges.push_back(e);
        }
    }
    std::sort(g.edges.begin(), g.edges.end(),
              [](const NavEdge& x, const NavEdge& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });

    std::vector<std::string> labels = vocab;
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);
    const auto& colors = default_colors();
    g.scene.seed = seed;
    g.scene.vocabulary = vocab;
    g.scene.bounds = {-config.spacing, -config.spacing, config.cols * config.spacing, config.rows * config.spacing};
    for (int i = 0; i < n; ++i) {
        SceneObject obj;
        obj.id = i;
        obj.label = labels[i];
        const double r = rng.uniform(config.landmark_offset_min, config.landmark_offset_max);
        const double a = rng.uniform(0.0, 360.0);
        obj.position = {g.nodes[i].position.x + r * cos_deg(a), g.nodes[i].position.y + r * sin_deg(a)};
        obj.radius = config.landmark_radius;
        obj.facing = 9.0 * static_cast<double>(rng.uniform_int(0, 39));
        obj.color = colors[rng.index(colors.size())];
        g.scene.objects.push_back(obj);
        g.nodes[i].landmark_id = i;
    }

    Stream pick(derive_seed(seed, "nav-endpoints"));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const int s = static_cast<int>(pick.index(n));
        const int t = static_cast<int>(pick.index(n));
        if (s == t) continue;
        const auto path = shortest_path(g, s, t);
        const int hops = static_cast<int>(path.size()) - 1;
        if (hops < config.min_hops || hops > config.max_steps) continue;
        ep.start_node = s;
        ep.goal_node = t;
        for (std::size_t i = 1; i < path.size(); ++i) ep.instruction.push_back(g.landmark_label(path[i]));
        return ep;
    }
    throw GenerationError("no start/goal pair with the requested hop count");
}

std::string_view to_string(NavStrategy s) {
    switch (s) {
        case NavStrategy::none: return "none";
        case NavStrategy::adaptive: return "adaptive";
        case NavStrategy::always_on: return "always_on";
    }
    return "unknown";
}

std::optional<NavStrategy> parse_nav_strategy(std::string_view s) {
    for (auto k : {NavStrategy::none, NavStrategy::adaptive, NavStrategy::always_on}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

NavStepResult nav_step(const NavEpisode& episode, const NavState& state, const NavConfig& config,
                       std::uint64_t seed) {
    NavStepResult out;
    if (state.progress >= episode.instruction.size()) return out;
    const NavGraph& g = episode.graph;
    const std::string& next = episode.instruction[state.progress];
    const Vec2 here = g.nodes.at(state.current).position;

    const auto neighbors = g.neighbors(state.current);
    std::vector<int> candidates;
    for (int m : neighbors) {
        if (std::find(state.visited.begin(), state.visited.end(), m) == state.visited.end()) candidates.push_back(m);
    }
    if (candidates.empty()) candidates = neighbors;
    if (candidates.empty()) {
        out.forced_stop = true;
        return out;
    }

    std::vector<Vec2> evidence;
    auto collect = [&](const Observation& obs) {
        for (const auto& p : obs.percepts) {
            if (p.label == next) evidence.push_back(percept_position(obs.viewpoint, p));
        }
    };
    for (int m : neighbors) {
        collect(render(g.scene, Pose(here.x, here.y, heading_towards(here, g.nodes[m].position)), config.sensor));
    }

    const bool needed = evidence.empty();
    bool imagine = false;
    switch (config.strategy) {
        case NavStrategy::none: break;
        case NavStrategy::always_on: imagine = true; break;
        case NavStrategy::adaptive: {
            Stream gate(derive_seed(seed, "nav-gate"));
            imagine = gate.bernoulli(config.q_gate) ? needed : !needed;
            break;
        }
    }
    if (imagine) {
        out.imagined = true;
        const auto wm_seed = derive_seed(seed, "nav-wm");
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const Vec2 there = g.nodes[candidates[i]].position;
            const Pose pose(there.x, there.y, heading_towards(here, there));
            collect(imagine_frame(g.scene, pose, config.sensor, config.noise, wm_seed, static_cast<int>(i)));
            ++out.wm_calls;
        }
    }

    int best = candidates.front();
    double best_score = 0.0;
    for (int m : candidates) {
        double score = 0.0;
        for (const Vec2& e : evidence) score = std::max(score, 1.0 / (1.0 + distance(e, g.nodes[m].position)));
        if (score > best_score) {
            best_score = score;
            best = m;
        }
    }
    out.move = best;
    return out;
}

namespace {

void advance_progress(const NavEpisode& ep, NavState& state) {
    while (state.progress < ep.instruction.size() &&
           ep.graph.landmark_label(state.current) == ep.instruction[state.progress]) {
        ++state.progress;
    }
}

}  // namespace

NavRecord run_nav(const NavEpisode& episode, const NavConfig& config, std::uint64_t seed) {
    NavRecord rec;
    rec.episode_id = episode.id;
    NavState state;
    state.current = episode.start_node;
    state.visited = {episode.start_node};
    advance_progress(episode, state);

    for (int steps = 0;; ++steps) {
        if (state.progress >= episode.instruction.size()) {
            rec.stopped = true;
            break;
        }
        if (steps >= episode.max_steps) break;
        const auto r = nav_step(episode, state, config, derive_seed(seed, "nav-step", {static_cast<std::uint64_t>(steps)}));
        rec.step_wm_calls.push_back(r.wm_calls);
        if (!r.move) {
            rec.stopped = true;
            break;
        }
        state.current = *r.move;
        state.visited.push_back(state.current);
        advance_progress(episode, state);
    }
    rec.visited = state.visited;
    rec.final_ne = distance(episode.graph.nodes.at(state.current).position,
                            episode.graph.nodes.at(episode.goal_node).position);
    return rec;
}

double path_length(const NavGraph& graph, const std::vector<int>& visited) {
    double total = 0.0;
    for (std::size_t i = 1; i < visited.size(); ++i) total += graph.edge_length(visited[i - 1], visited[i]);
    return total;
}

NavMetrics nav_metrics(const std::vector<NavRecord>& records, const std::vector<NavEpisode>& episodes) {
    NavMetrics m;
    double ne = 0.0;
    double osr = 0.0;
    double sr = 0.0;
    double spl = 0.0;
    for (const auto& rec : records) {
        const auto it = std::find_if(episodes.begin(), episodes.end(),
                                     [&](const NavEpisode& e) { return e.id == rec.episode_id; });
        if (it == episodes.end()) throw ValidationError("nav record '" + rec.episode_id + "' has no episode");
        const NavEpisode& ep = *it;
        const auto l = shortest_path_length(ep.graph, ep.start_node, ep.goal_node);
        if (!l || rec.visited.empty()) {
            std::fprintf(stderr, "warning: nav episode %s excluded (goal unreachable)\n", ep.id.c_str());
            ++m.excluded;
            continue;
        }
        const Vec2 goal = ep.graph.nodes.at(ep.goal_node).position;
        const double final_ne = distance(ep.graph.nodes.at(rec.visited.back()).position, goal);
        const bool success = final_ne <= ep.success_threshold;
        bool oracle = false;
        for (int v : rec.visited) oracle = oracle || distance(ep.graph.nodes.at(v).position, goal) <= ep.success_threshold;
        const double p = path_length(ep.graph, rec.visited);
        ne += final_ne;
        osr += oracle ? 1.0 : 0.0;
        sr += success ? 1.0 : 0.0;
        if (success) spl += std::max(p, *l) > 0.0 ? *l / std::max(p, *l) : 1.0;
        ++m.episodes;
    }
    if (m.episodes > 0) {
        m.ne = ne / m.episodes;
        m.osr = osr / m.episodes;
        m.sr = sr / m.episodes;
        m.spl = spl / m.episodes;
    }
    return m;
}

}  // namespace avic
