#include "avic/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace avic {

namespace {

class Reader {
public:
    Reader(const Json& node, std::string path, bool strict) : node_(node), path_(std::move(path)), strict_(strict) {
        if (!node_.is_object()) throw ConfigSchemaError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* find(const std::string& key) {
        used_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void get(const std::string& key, double& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number()) throw ConfigSchemaError(field(key), "expected a number");
            out = v->get<double>();
        }
    }

    void get(const std::string& key, int& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigSchemaError(field(key), "expected an integer");
            const auto n = v->get<std::int64_t>();
            if (n < -1000000000 || n > 1000000000) throw ConfigRangeError(field(key), "integer out of range");
            out = static_cast<int>(n);
        }
    }

    void get(const std::string& key, std::uint64_t& out) {
        if (const Json* v = find(key)) {
            if (v->is_number_unsigned()) {
                out = v->get<std::uint64_t>();
            } else if (v->is_number_integer()) {
                throw ConfigRangeError(field(key), "must be non-negative");
            } else {
                throw ConfigSchemaError(field(key), "expected a non-negative integer");
            }
        }
    }

    void get(const std::string& key, bool& out) {
        if (const Json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigSchemaError(field(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void get(const std::string& key, std::string& out) {
        if (const Json* v = find(key)) {
            if (!v->is_string()) throw ConfigSchemaError(field(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    // Nested object; a missing key reads as an empty object.
    Reader child(const std::string& key) {
        static const Json empty = Json::object();
        const Json* v = find(key);
        return Reader(v ? *v : empty, field(key), strict_);
    }

    const Json* array(const std::string& key) {
        const Json* v = find(key);
        if (v && !v->is_array()) throw ConfigSchemaError(field(key), "expected an array");
        return v;
    }

    void finish() const {
        if (!strict_) return;
        for (const auto& item : node_.items()) {
            if (!used_.count(item.key())) throw ConfigSchemaError(field(item.key()), "unknown field");
        }
    }

private:
    const Json& node_;
    std::string path_;
    bool strict_;
    std::set<std::string> used_;
};

template <typename T, typename Parse>
std::vector<T> enum_list(Reader& r, const std::string& key, Parse parse, std::vector<T> fallback) {
    const Json* arr = r.array(key);
    if (!arr) return fallback;
    std::vector<T> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string f = r.field(key) + "[" + std::to_string(i) + "]";
        if (!(*arr)[i].is_string()) throw ConfigSchemaError(f, "expected a string");
        const auto v = parse((*arr)[i].get<std::string>());
        if (!v) throw ConfigSchemaError(f, "unknown value '" + (*arr)[i].get<std::string>() + "'");
        out.push_back(*v);
    }
    return out;
}

void read_sensor(Reader r, Sensor& s) {
    r.get("fov", s.fov);
    r.get("range", s.range);
    r.get("occlusion", s.occlusion);
    r.finish();
}

void read_noise(Reader r, NoiseModel& n) {
    r.get("p_drop", n.p_drop);
    r.get("p_label", n.p_label);
    r.get("sigma_pos", n.sigma_pos);
    r.finish();
}

Json sensor_json(const Sensor& s) { return Json{{"fov", s.fov}, {"range", s.range}, {"occlusion", s.occlusion}}; }
Json noise_json(const NoiseModel& n) {
    return Json{{"p_drop", n.p_drop}, {"p_label", n.p_label}, {"sigma_pos", n.sigma_pos}};
}

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigRangeError(field, what);
}

void check_unit(double v, const std::string& field) { require(v >= 0.0 && v <= 1.0, field, "must lie in [0, 1]"); }

void check_sensor(const Sensor& s, const std::string& prefix) {
    require(s.fov > 0.0 && s.fov <= 360.0, prefix + ".fov", "must lie in (0, 360]");
    require(s.range > 0.0, prefix + ".range", "must be positive");
}

void check_noise(const NoiseModel& n, const std::string& prefix) {
    check_unit(n.p_drop, prefix + ".p_drop");
    check_unit(n.p_label, prefix + ".p_label");
    require(n.sigma_pos >= 0.0, prefix + ".sigma_pos", "must be non-negative");
}

}  // namespace

void ExperimentConfig::validate() const {
    const auto& sc = suite.scene;
    require(suite.episodes >= 1, "suite.episodes", "must be at least 1");
    require(!suite.categories.empty(), "suite.categories", "must not be empty");
    require(sc.n_objects >= 3, "suite.scene.n_objects", "must be at least 3");
    require(sc.n_objects <= static_cast<int>(sc.vocabulary.size()), "suite.scene.n_objects",
            "must not exceed the vocabulary size");
    require(sc.bounds.max_x > sc.bounds.min_x, "suite.scene.bounds.max_x", "must exceed min_x");
    require(sc.bounds.max_y > sc.bounds.min_y, "suite.scene.bounds.max_y", "must exceed min_y");
    require(sc.min_separation > 0.0, "suite.scene.min_separation", "must be positive");
    require(sc.min_radius > 0.0, "suite.scene.min_radius", "must be positive");
    require(sc.max_radius >= sc.min_radius, "suite.scene.max_radius", "must be at least min_radius");
    require(sc.max_attempts >= 1, "suite.scene.max_attempts", "must be at least 1");
    check_sensor(suite.sensor, "suite.sensor");
    require(suite.episode.num_choices >= 2 && suite.episode.num_choices <= 4, "suite.episode.num_choices",
            "must lie in [2, 4]");
    check_unit(suite.episode.lo_fraction, "suite.episode.lo_fraction");
    require(suite.episode.max_attempts >= 1, "suite.episode.max_attempts", "must be at least 1");
    require(suite.episode.boundary_margin >= 0.0, "suite.episode.boundary_margin", "must be non-negative");

    check_noise(noise, "noise");

    check_unit(backend.policy.q_gate, "backend.policy.q_gate");
    check_unit(backend.policy.q_plan, "backend.policy.q_plan");
    check_unit(backend.policy.sample_jitter, "backend.policy.sample_jitter");
    check_unit(backend.answerer.competence, "backend.answerer.competence");
    require(backend.verifier.noise_amplitude >= 0 && backend.verifier.noise_amplitude <= 9,
            "backend.verifier.noise_amplitude", "must lie in [0, 9]");
    if (backend.kind == BackendConfig::Kind::remote) {
        require(!backend.remote.endpoint.empty(), "backend.remote.endpoint", "must be set for remote backends");
    }
    require(backend.remote.timeout_ms > 0, "backend.remote.timeout_ms", "must be positive");
    require(backend.remote.max_in_flight >= 1, "backend.remote.max_in_flight", "must be at least 1");
    require(backend.remote.retries >= 0, "backend.remote.retries", "must be non-negative");

    require(!strategies.empty(), "strategies", "must not be empty");
    for (auto s : strategies) {
        require(s != StrategyKind::upper_bound, "strategies",
                "upper_bound is derived from none and always_on by the analyze command");
    }

    const auto& c = controller;
    require(c.M >= 1, "controller.M", "must be at least 1");
    require(c.beam.width >= 1, "controller.beam.width", "must be at least 1");
    require(c.beam.depth >= 1, "controller.beam.depth", "must be at least 1");
    require(c.beam.keyframe_top_k >= 0, "controller.beam.keyframe_top_k", "must be non-negative");
    require(!c.beam.branch_actions.empty(), "controller.beam.branch_actions", "must not be empty");
    require(c.limits.max_entries >= 1, "controller.limits.max_entries", "must be at least 1");
    require(c.limits.value_cap >= 1, "controller.limits.value_cap", "must be at least 1");
    for (const auto& a : c.beam.branch_actions) {
        require(a.value >= 1 && a.value <= c.limits.value_cap, "controller.beam.branch_actions",
                "values must lie in [1, value_cap]");
    }
    require(c.cost.fixed_per_call >= 0.0, "controller.cost.fixed_per_call", "must be non-negative");
    require(c.cost.per_image >= 0.0, "controller.cost.per_image", "must be non-negative");
    require(c.cost.per_char >= 0.0, "controller.cost.per_char", "must be non-negative");

    require(!forced_views.empty(), "forced_views", "must not be empty");
    for (int n : forced_views) require(n >= 0, "forced_views", "entries must be non-negative");

    const auto& g = nav.graph;
    require(nav.episodes >= 1, "nav.episodes", "must be at least 1");
    require(g.rows >= 1 && g.cols >= 1 && g.rows * g.cols >= 2, "nav.graph.rows", "grid needs at least two nodes");
    require(g.rows * g.cols <= static_cast<int>(default_vocabulary().size()), "nav.graph.rows",
            "grid has more nodes than landmark labels");
    require(g.spacing > 0.0, "nav.graph.spacing", "must be positive");
    require(g.jitter >= 0.0 && g.jitter < g.spacing / 2.0, "nav.graph.jitter", "must lie in [0, spacing / 2)");
    check_unit(g.extra_edge_prob, "nav.graph.extra_edge_prob");
    require(g.landmark_offset_min > 0.0, "nav.graph.landmark_offset_min", "must be positive");
    require(g.landmark_offset_max >= g.landmark_offset_min, "nav.graph.landmark_offset_max",
            "must be at least landmark_offset_min");
    require(g.landmark_radius > 0.0 && g.landmark_radius < g.landmark_offset_min, "nav.graph.landmark_radius",
            "must be positive and below landmark_offset_min");
    require(g.min_hops >= 1, "nav.graph.min_hops", "must be at least 1");
    require(g.max_steps >= 0, "nav.graph.max_steps", "must be non-negative");
    require(g.success_threshold > 0.0, "nav.graph.success_threshold", "must be positive");
    check_unit(nav.q_gate, "nav.q_gate");
    check_sensor(nav.sensor, "nav.sensor");
    check_noise(nav.noise, "nav.noise");
    require(!nav.strategies.empty(), "nav.strategies", "must not be empty");

    require(workers >= 1, "workers", "must be at least 1");
}

ExperimentConfig parse_config(const Json& doc) {
    ExperimentConfig cfg;
    if (!doc.is_object()) throw ConfigSchemaError("<root>", "expected an object");
    if (doc.contains("strict")) {
        if (!doc["strict"].is_boolean()) throw ConfigSchemaError("strict", "expected true or false");
        cfg.strict = doc["strict"].get<bool>();
    }
    Reader root(doc, "", cfg.strict);
    bool strict = cfg.strict;
    root.get("strict", strict);
    if (!root.find("run_seed")) throw ConfigSchemaError("run_seed", "required field is missing");
    root.get("run_seed", cfg.run_seed);

    {
        Reader s = root.child("suite");
        s.get("episodes", cfg.suite.episodes);
        cfg.suite.categories = enum_list(s, "categories", parse_category, cfg.suite.categories);
        s.get("path", cfg.suite.path);
        {
            Reader sc = s.child("scene");
            auto& c = cfg.suite.scene;
            sc.get("n_objects", c.n_objects);
            sc.get("min_separation", c.min_separation);
            sc.get("min_radius", c.min_radius);
            sc.get("max_radius", c.max_radius);
            sc.get("max_attempts", c.max_attempts);
            Reader b = sc.child("bounds");
            b.get("min_x", c.bounds.min_x);
            b.get("min_y", c.bounds.min_y);
            b.get("max_x", c.bounds.max_x);
            b.get("max_y", c.bounds.max_y);
            b.finish();
            sc.finish();
        }
        read_sensor(s.child("sensor"), cfg.suite.sensor);
        {
            Reader e = s.child("episode");
            e.get("num_choices", cfg.suite.episode.num_choices);
            e.get("lo_fraction", cfg.suite.episode.lo_fraction);
            e.get("max_attempts", cfg.suite.episode.max_attempts);
            e.get("boundary_margin", cfg.suite.episode.boundary_margin);
            e.finish();
        }
        s.finish();
    }

    read_noise(root.child("noise"), cfg.noise);

    {
        Reader b = root.child("backend");
        std::string kind = "synthetic";
        b.get("kind", kind);
        if (kind == "synthetic") {
            cfg.backend.kind = BackendConfig::Kind::synthetic;
        } else if (kind == "remote") {
            cfg.backend.kind = BackendConfig::Kind::remote;
        } else {
            throw ConfigSchemaError("backend.kind", "expected 'synthetic' or 'remote'");
        }
        Reader p = b.child("policy");
        p.get("q_gate", cfg.backend.policy.q_gate);
        p.get("q_plan", cfg.backend.policy.q_plan);
        p.get("sample_jitter", cfg.backend.policy.sample_jitter);
        p.finish();
        Reader a = b.child("answerer");
        a.get("competence", cfg.backend.answerer.competence);
        a.finish();
        Reader v = b.child("verifier");
        v.get("noise_amplitude", cfg.backend.verifier.noise_amplitude);
        v.finish();
        Reader r = b.child("remote");
        r.get("endpoint", cfg.backend.remote.endpoint);
        r.get("timeout_ms", cfg.backend.remote.timeout_ms);
        r.get("max_in_flight", cfg.backend.remote.max_in_flight);
        r.get("retries", cfg.backend.remote.retries);
        r.get("strict", cfg.backend.remote.strict);
        r.finish();
        b.finish();
    }

    cfg.strategies = enum_list(root, "strategies", parse_strategy, cfg.strategies);

    {
        Reader c = root.child("controller");
        c.get("M", cfg.controller.M);
        c.get("dedup_plans", cfg.controller.dedup_plans);
        {
            Reader b = c.child("beam");
            b.get("width", cfg.controller.beam.width);
            b.get("depth", cfg.controller.beam.depth);
            b.get("keyframe_top_k", cfg.controller.beam.keyframe_top_k);
            if (const Json* arr = b.array("branch_actions")) {
                try {
                    cfg.controller.beam.branch_actions = plan_from_json(*arr).entries;
                } catch (const SchemaError& e) {
                    throw ConfigSchemaError("controller.beam.branch_actions", e.what());
                }
            }
            b.finish();
        }
        {
            Reader l = c.child("limits");
            l.get("max_entries", cfg.controller.limits.max_entries);
            l.get("value_cap", cfg.controller.limits.value_cap);
            l.finish();
        }
        {
            Reader k = c.child("cost");
            k.get("fixed_per_call", cfg.controller.cost.fixed_per_call);
            k.get("per_image", cfg.controller.cost.per_image);
            k.get("per_char", cfg.controller.cost.per_char);
            k.finish();
        }
        c.finish();
    }

    if (const Json* arr = root.array("forced_views")) {
        cfg.forced_views.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            if (!(*arr)[i].is_number_integer()) {
                throw ConfigSchemaError("forced_views[" + std::to_string(i) + "]", "expected an integer");
            }
            cfg.forced_views.push_back((*arr)[i].get<int>());
        }
    }

    {
        Reader n = root.child("nav");
        n.get("episodes", cfg.nav.episodes);
        n.get("q_gate", cfg.nav.q_gate);
        {
            Reader g = n.child("graph");
            auto& c = cfg.nav.graph;
            g.get("rows", c.rows);
            g.get("cols", c.cols);
            g.get("spacing", c.spacing);
            g.get("jitter", c.jitter);
            g.get("extra_edge_prob", c.extra_edge_prob);
            g.get("landmark_offset_min", c.landmark_offset_min);
            g.get("landmark_offset_max", c.landmark_offset_max);
            g.get("landmark_radius", c.landmark_radius);
            g.get("min_hops", c.min_hops);
            g.get("max_steps", c.max_steps);
            g.get("success_threshold", c.success_threshold);
            g.finish();
        }
        read_sensor(n.child("sensor"), cfg.nav.sensor);
        read_noise(n.child("noise"), cfg.nav.noise);
        cfg.nav.strategies = enum_list(n, "strategies", parse_nav_strategy, cfg.nav.strategies);
        n.finish();
    }

    root.get("output_dir", cfg.output_dir);
    root.get("workers", cfg.workers);
    root.finish();

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigFileError("", "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    Json doc;
    try {
        doc = Json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigFileError("", "'" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

Json config_to_json(const ExperimentConfig& c, bool execution) {
    Json j;
    j["run_seed"] = c.run_seed;
    j["strict"] = c.strict;

    Json cats = Json::array();
    for (auto k : c.suite.categories) cats.push_back(std::string(to_string(k)));
    const auto& sc = c.suite.scene;
    j["suite"] = Json{
        {"episodes", c.suite.episodes},
        {"categories", cats},
        {"path", c.suite.path},
        {"scene",
         Json{{"n_objects", sc.n_objects},
              {"min_separation", sc.min_separation},
              {"min_radius", sc.min_radius},
              {"max_radius", sc.max_radius},
              {"max_attempts", sc.max_attempts},
              {"bounds", Json{{"min_x", sc.bounds.min_x},
                              {"min_y", sc.bounds.min_y},
                              {"max_x", sc.bounds.max_x},
                              {"max_y", sc.bounds.max_y}}}}},
        {"sensor", sensor_json(c.suite.sensor)},
        {"episode", Json{{"num_choices", c.suite.episode.num_choices},
                         {"lo_fraction", c.suite.episode.lo_fraction},
                         {"max_attempts", c.suite.episode.max_attempts},
                         {"boundary_margin", c.suite.episode.boundary_margin}}}};

    j["noise"] = noise_json(c.noise);

    const auto& b = c.backend;
    j["backend"] = Json{
        {"kind", b.kind == BackendConfig::Kind::remote ? "remote" : "synthetic"},
        {"policy", Json{{"q_gate", b.policy.q_gate}, {"q_plan", b.policy.q_plan}, {"sample_jitter", b.policy.sample_jitter}}},
        {"answerer", Json{{"competence", b.answerer.competence}}},
        {"verifier", Json{{"noise_amplitude", b.verifier.noise_amplitude}}},
        {"remote", Json{{"endpoint", b.remote.endpoint},
                        {"timeout_ms", b.remote.timeout_ms},
                        {"max_in_flight", b.remote.max_in_flight},
                        {"retries", b.remote.retries},
                        {"strict", b.remote.strict}}}};

    Json strategies = Json::array();
    for (auto s : c.strategies) strategies.push_back(std::string(to_string(s)));
    j["strategies"] = strategies;

    const auto& cc = c.controller;
    j["controller"] = Json{
        {"M", cc.M},
        {"dedup_plans", cc.dedup_plans},
        {"beam", Json{{"width", cc.beam.width},
                      {"depth", cc.beam.depth},
                      {"keyframe_top_k", cc.beam.keyframe_top_k},
                      {"branch_actions", to_json(ActionPlan{cc.beam.branch_actions})}}},
        {"limits", Json{{"max_entries", cc.limits.max_entries}, {"value_cap", cc.limits.value_cap}}},
        {"cost", Json{{"fixed_per_call", cc.cost.fixed_per_call},
                      {"per_image", cc.cost.per_image},
                      {"per_char", cc.cost.per_char}}}};

    j["forced_views"] = c.forced_views;

    const auto& g = c.nav.graph;
    Json nav_strategies = Json::array();
    for (auto s : c.nav.strategies) nav_strategies.push_back(std::string(to_string(s)));
    j["nav"] = Json{{"episodes", c.nav.episodes},
                    {"q_gate", c.nav.q_gate},
                    {"graph", Json{{"rows", g.rows},
                                   {"cols", g.cols},
                                   {"spacing", g.spacing},
                                   {"jitter", g.jitter},
                                   {"extra_edge_prob", g.extra_edge_prob},
                                   {"landmark_offset_min", g.landmark_offset_min},
                                   {"landmark_offset_max", g.landmark_offset_max},
                                   {"landmark_radius", g.landmark_radius},
                                   {"min_hops", g.min_hops},
                                   {"max_steps", g.max_steps},
                                   {"success_threshold", g.success_threshold}}},
                    {"sensor", sensor_json(c.nav.sensor)},
                    {"noise", noise_json(c.nav.noise)},
                    {"strategies", nav_strategies}};

    if (execution) {
        j["output_dir"] = c.output_dir;
        j["workers"] = c.workers;
    }
    return j;
}

}  // namespace avic
