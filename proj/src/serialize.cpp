#include "avic/serialize.hpp"

namespace avic {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string(what) + ": " + e.what());
    } catch (const ValidationError& e) {
        throw SchemaError(std::string(what) + ": " + e.what());
    }
}

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }
Vec2 vec_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Json requirement_json(const ViewpointRequirement& r) {
    Json j;
    j["kind"] = r.kind == ViewpointRequirement::Kind::pose_match ? "pose_match" : "target_visible";
    j["pose"] = to_json(r.pose);
    j["target_id"] = r.target_id;
    j["position_tol"] = r.position_tol;
    j["heading_tol"] = r.heading_tol;
    return j;
}

ViewpointRequirement requirement_from(const Json& j) {
    ViewpointRequirement r;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "pose_match") {
        r.kind = ViewpointRequirement::Kind::pose_match;
    } else if (kind == "target_visible") {
        r.kind = ViewpointRequirement::Kind::target_visible;
    } else {
        throw SchemaError("unknown viewpoint requirement kind '" + kind + "'");
    }
    r.pose = pose_from_json(j.at("pose"));
    r.target_id = j.at("target_id").get<int>();
    r.position_tol = j.at("position_tol").get<double>();
    r.heading_tol = j.at("heading_tol").get<double>();
    return r;
}

template <typename E, typename Parse>
E enum_from(const Json& j, Parse parse, const char* what) {
    const auto s = j.get<std::string>();
    const auto v = parse(s);
    if (!v) throw SchemaError(std::string("unknown ") + what + " '" + s + "'");
    return *v;
}

std::optional<Decision> parse_decision(std::string_view s) {
    if (s == "skip") return Decision::skip;
    if (s == "call_wm") return Decision::call_wm;
    return std::nullopt;
}

std::optional<ModelRole> parse_role(std::string_view s) {
    for (auto r : {ModelRole::policy, ModelRole::verifier, ModelRole::answerer}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

}  // namespace

Json to_json(const Pose& pose) { return Json{{"x", pose.x()}, {"y", pose.y()}, {"heading", pose.heading()}}; }

Pose pose_from_json(const Json& j) {
    return guarded("pose", [&] { return Pose(j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>()); });
}

Json to_json(const ActionPlan& plan) {
    Json arr = Json::array();
    for (const auto& e : plan.entries) {
        arr.push_back(Json{{"type", std::string(to_wire(e.kind))}, {"value", e.value}});
    }
    return arr;
}

ActionPlan plan_from_json(const Json& j) {
    return guarded("plan", [&] {
        ActionPlan plan;
        for (const auto& a : j) {
            ActionEntry e;
            if (!from_wire(a.at("type").get<std::string>(), e.kind)) throw SchemaError("unknown action type");
            e.value = a.at("value").get<int>();
            plan.entries.push_back(e);
        }
        return plan;
    });
}

Json to_json(const Scene& scene) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = scene.seed;
    j["bounds"] = Json{{"min_x", scene.bounds.min_x},
                       {"min_y", scene.bounds.min_y},
                       {"max_x", scene.bounds.max_x},
                       {"max_y", scene.bounds.max_y}};
    j["vocabulary"] = scene.vocabulary;
    Json objs = Json::array();
    for (const auto& o : scene.objects) {
        objs.push_back(Json{{"id", o.id},
                            {"label", o.label},
                            {"position", vec_json(o.position)},
                            {"radius", o.radius},
                            {"facing", o.facing},
                            {"color", o.color}});
    }
    j["objects"] = std::move(objs);
    return j;
}

Scene scene_from_json(const Json& j) {
    return guarded("scene", [&] {
        Scene s;
        s.seed = j.at("seed").get<std::uint64_t>();
        const Json& b = j.at("bounds");
        s.bounds = {b.at("min_x").get<double>(), b.at("min_y").get<double>(), b.at("max_x").get<double>(),
                    b.at("max_y").get<double>()};
        s.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
        for (const auto& o : j.at("objects")) {
            SceneObject obj;
            obj.id = o.at("id").get<int>();
            obj.label = o.at("label").get<std::string>();
            obj.position = vec_from(o.at("position"));
            obj.radius = o.at("radius").get<double>();
            obj.facing = o.at("facing").get<double>();
            obj.color = o.at("color").get<std::string>();
            s.objects.push_back(std::move(obj));
        }
        return s;
    });
}

Json to_json(const Observation& obs, bool internal) {
    Json j;
    j["viewpoint"] = to_json(obs.viewpoint);
    j["imagined"] = obs.imagined;
    Json ps = Json::array();
    for (const auto& p : obs.percepts) {
        Json pj{{"label", p.label},
                {"color", p.color},
                {"bearing", p.bearing},
                {"distance", p.distance},
                {"relative_facing", p.relative_facing}};
        if (internal) {
            pj["source_id"] = p.source_id;
            pj["corrupted"] = p.corrupted;
        }
        ps.push_back(std::move(pj));
    }
    j["percepts"] = std::move(ps);
    if (internal) j["corrupted_ids"] = obs.corrupted_ids;
    return j;
}

Observation observation_from_json(const Json& j) {
    return guarded("observation", [&] {
        Observation obs;
        obs.viewpoint = pose_from_json(j.at("viewpoint"));
        obs.imagined = j.at("imagined").get<bool>();
        for (const auto& pj : j.at("percepts")) {
            Percept p;
            p.label = pj.at("label").get<std::string>();
            p.color = pj.at("color").get<std::string>();
            p.bearing = pj.at("bearing").get<double>();
            p.distance = pj.at("distance").get<double>();
            p.relative_facing = pj.at("relative_facing").get<double>();
            p.source_id = pj.value("source_id", -1);
            p.corrupted = pj.value("corrupted", false);
            obs.percepts.push_back(std::move(p));
        }
        if (j.contains("corrupted_ids")) obs.corrupted_ids = j.at("corrupted_ids").get<std::set<int>>();
        return obs;
    });
}

Json to_json(const Episode& ep) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["id"] = ep.id;
    j["category"] = std::string(to_string(ep.category));
    j["error_tag"] = std::string(to_string(ep.error_tag));
    j["question"] = ep.question_text;
    j["choices"] = ep.choices;
    j["truth_index"] = ep.truth_index;
    j["seed"] = ep.seed;
    j["start_pose"] = to_json(ep.start_pose);
    j["second_pose"] = ep.second_pose ? to_json(*ep.second_pose) : Json(nullptr);
    j["displaced_position"] = ep.displaced_position ? vec_json(*ep.displaced_position) : Json(nullptr);
    j["target_id"] = ep.target_id;
    j["reference_id"] = ep.reference_id;
    Json cands = Json::array();
    for (const auto& p : ep.candidate_plans) cands.push_back(to_json(p));
    j["candidate_plans"] = std::move(cands);
    Json ev;
    ev["required_labels"] = ep.evidence.required_labels;
    Json reqs = Json::array();
    for (const auto& r : ep.evidence.required_viewpoints) reqs.push_back(requirement_json(r));
    ev["required_viewpoints"] = std::move(reqs);
    ev["reference_plan"] = ep.evidence.reference_plan ? to_json(*ep.evidence.reference_plan) : Json(nullptr);
    j["evidence"] = std::move(ev);
    j["sensor"] = Json{{"fov", ep.sensor.fov}, {"range", ep.sensor.range}, {"occlusion", ep.sensor.occlusion}};
    j["scene"] = to_json(ep.scene);
    return j;
}

Episode episode_from_json(const Json& j) {
    return guarded("episode", [&] {
        if (j.at("schema_version").get<int>() != kSchemaVersion) throw SchemaError("unsupported episode schema version");
        Episode ep;
        ep.id = j.at("id").get<std::string>();
        ep.category = enum_from<QuestionCategory>(j.at("category"), parse_category, "category");
        ep.error_tag = enum_from<ErrorTag>(j.at("error_tag"), parse_error_tag, "error tag");
        ep.question_text = j.at("question").get<std::string>();
        ep.choices = j.at("choices").get<std::vector<std::string>>();
        ep.truth_index = j.at("truth_index").get<int>();
        ep.seed = j.at("seed").get<std::uint64_t>();
        ep.start_pose = pose_from_json(j.at("start_pose"));
        if (!j.at("second_pose").is_null()) ep.second_pose = pose_from_json(j.at("second_pose"));
        if (!j.at("displaced_position").is_null()) ep.displaced_position = vec_from(j.at("displaced_position"));
        ep.target_id = j.at("target_id").get<int>();
        ep.reference_id = j.at("reference_id").get<int>();
        for (const auto& p : j.at("candidate_plans")) ep.candidate_plans.push_back(plan_from_json(p));
        const Json& ev = j.at("evidence");
        ep.evidence.required_labels = ev.at("required_labels").get<std::vector<std::string>>();
        for (const auto& r : ev.at("required_viewpoints")) ep.evidence.required_viewpoints.push_back(requirement_from(r));
        if (!ev.at("reference_plan").is_null()) ep.evidence.reference_plan = plan_from_json(ev.at("reference_plan"));
        const Json& s = j.at("sensor");
        ep.sensor = {s.at("fov").get<double>(), s.at("range").get<double>(), s.at("occlusion").get<bool>()};
        ep.scene = scene_from_json(j.at("scene"));
        return ep;
    });
}

Json to_json(const PolicySample& s) {
    Json j;
    j["decision"] = std::string(to_string(s.decision));
    j["reason"] = s.reason;
    j["actions"] = to_json(s.plan);
    j["fallback"] = s.fallback;
    return j;
}

PolicySample sample_from_json(const Json& j) {
    return guarded("policy sample", [&] {
        PolicySample s;
        s.decision = enum_from<Decision>(j.at("decision"), parse_decision, "decision");
        s.reason = j.at("reason").get<std::string>();
        s.plan = plan_from_json(j.at("actions"));
        s.fallback = j.value("fallback", false);
        validate_sample(s);
        return s;
    });
}

Json to_json(const RunRecord& r) {
    Json j;
    j["type"] = "record";
    j["schema_version"] = kSchemaVersion;
    j["episode_id"] = r.episode_id;
    j["strategy"] = std::string(to_string(r.strategy));
    j["category"] = std::string(to_string(r.category));
    j["error_tag"] = std::string(to_string(r.error_tag));
    j["needs_imagination"] = r.needs_imagination;
    j["seed"] = r.seed;
    Json samples = Json::array();
    for (const auto& s : r.samples) samples.push_back(to_json(s));
    j["samples"] = std::move(samples);
    j["vote"] = std::string(to_string(r.vote));
    Json trajs = Json::array();
    for (const auto& t : r.trajectories) {
        trajs.push_back(Json{{"plan", to_json(t.plan)},
                             {"frames", t.frames},
                             {"score", t.score},
                             {"corrupted_percepts", t.corrupted_percepts}});
    }
    j["trajectories"] = std::move(trajs);
    j["selected"] = r.selected ? Json(*r.selected) : Json(nullptr);
    j["selected_plan"] = r.selected_plan ? to_json(*r.selected_plan) : Json(nullptr);
    j["keyframes"] = r.keyframes;
    j["answer"] = r.answer.scores;
    j["predicted"] = r.predicted;
    j["truth"] = r.truth;
    j["correct"] = r.correct;
    j["budget"] = Json{{"wm_calls", r.budget.wm_calls},
                       {"imagined_frames", r.budget.imagined_frames},
                       {"pseudo_tokens", r.budget.pseudo_tokens}};
    Json calls = Json::array();
    for (const auto& c : r.calls) {
        calls.push_back(Json{{"role", std::string(to_string(c.role))}, {"images", c.images}, {"chars", c.text_chars}});
    }
    j["calls"] = std::move(calls);
    j["fallback"] = r.fallback;
    j["fallback_reason"] = r.fallback_reason;
    return j;
}

RunRecord record_from_json(const Json& j) {
    return guarded("run record", [&] {
        if (j.at("type").get<std::string>() != "record") throw SchemaError("line is not a run record");
        if (j.at("schema_version").get<int>() != kSchemaVersion) throw SchemaError("unsupported record schema version");
        RunRecord r;
        r.episode_id = j.at("episode_id").get<std::string>();
        r.strategy = enum_from<StrategyKind>(j.at("strategy"), parse_strategy, "strategy");
        r.category = enum_from<QuestionCategory>(j.at("category"), parse_category, "category");
        r.error_tag = enum_from<ErrorTag>(j.at("error_tag"), parse_error_tag, "error tag");
        r.needs_imagination = j.at("needs_imagination").get<bool>();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& s : j.at("samples")) r.samples.push_back(sample_from_json(s));
        r.vote = enum_from<Decision>(j.at("vote"), parse_decision, "vote");
        for (const auto& t : j.at("trajectories")) {
            r.trajectories.push_back({plan_from_json(t.at("plan")), t.at("frames").get<int>(), t.at("score").get<int>(),
                                      t.at("corrupted_percepts").get<int>()});
        }
        if (!j.at("selected").is_null()) r.selected = j.at("selected").get<int>();
        if (!j.at("selected_plan").is_null()) r.selected_plan = plan_from_json(j.at("selected_plan"));
        r.keyframes = j.at("keyframes").get<std::vector<int>>();
        r.answer.scores = j.at("answer").get<std::vector<double>>();
        r.predicted = j.at("predicted").get<int>();
        r.truth = j.at("truth").get<int>();
        r.correct = j.at("correct").get<bool>();
        const Json& b = j.at("budget");
        r.budget.wm_calls = b.at("wm_calls").get<int>();
        r.budget.imagined_frames = b.at("imagined_frames").get<int>();
        r.budget.pseudo_tokens = b.at("pseudo_tokens").get<std::int64_t>();
        for (const auto& c : j.at("calls")) {
            r.calls.push_back({enum_from<ModelRole>(c.at("role"), parse_role, "role"), c.at("images").get<int>(),
                               c.at("chars").get<int>()});
        }
        r.fallback = j.at("fallback").get<bool>();
        r.fallback_reason = j.at("fallback_reason").get<std::string>();

        if (r.vote == Decision::skip && r.selected_plan) throw SchemaError("skip vote with a selected plan");
        if (r.strategy == StrategyKind::none && !r.trajectories.empty()) {
            throw SchemaError("strategy none with imagined trajectories");
        }
        if (r.correct != (r.predicted == r.truth)) throw SchemaError("correct flag disagrees with prediction");
        return r;
    });
}

std::string dump_line(const Json& j) { return j.dump(); }

}  // namespace avic
