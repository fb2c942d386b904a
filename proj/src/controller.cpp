#include "avic/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "avic/rng.hpp"

namespace avic {

std::string_view to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::none: return "none";
        case StrategyKind::always_on: return "always_on";
        case StrategyKind::gating_only: return "gating_only";
        case StrategyKind::adaptive: return "adaptive";
        case StrategyKind::upper_bound: return "upper_bound";
    }
    return "none";
}

std::optional<StrategyKind> parse_strategy(std::string_view s) {
    for (auto k : {StrategyKind::none, StrategyKind::always_on, StrategyKind::gating_only, StrategyKind::adaptive,
                   StrategyKind::upper_bound}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::string_view to_string(ModelRole r) {
    switch (r) {
        case ModelRole::policy: return "policy";
        case ModelRole::verifier: return "verifier";
        case ModelRole::answerer: return "answerer";
    }
    return "answerer";
}

int BeamConfig::frames_per_search() const {
    const int a = static_cast<int>(branch_actions.size());
    return a + a * width * (depth - 1);
}

void ControllerConfig::validate() const {
    if (M < 1) throw ValidationError("controller.M must be at least 1");
    if (beam.width < 1) throw ValidationError("controller.beam.width must be at least 1");
    if (beam.depth < 1) throw ValidationError("controller.beam.depth must be at least 1");
    if (beam.keyframe_top_k < 0) throw ValidationError("controller.beam.keyframe_top_k must be non-negative");
    if (beam.branch_actions.empty()) throw ValidationError("controller.beam.branch_actions must not be empty");
    for (const auto& a : beam.branch_actions) {
        if (a.value < 1 || a.value > limits.value_cap) {
            throw ValidationError("controller.beam.branch_actions value outside [1, value_cap]");
        }
    }
    if (cost.fixed_per_call < 0 || cost.per_image < 0 || cost.per_char < 0) {
        throw ValidationError("cost model weights must be non-negative");
    }
}

Decision gate(std::span<const PolicySample> samples) {
    if (samples.empty()) throw ValidationError("gate needs at least one policy sample");
    const auto calls = std::count_if(samples.begin(), samples.end(),
                                     [](const PolicySample& s) { return s.decision == Decision::call_wm; });
    return 2 * calls > static_cast<long>(samples.size()) ? Decision::call_wm : Decision::skip;
}

std::vector<ActionPlan> plan_pool(std::span<const PolicySample> samples, bool dedup) {
    if (samples.empty() || gate(samples) != Decision::call_wm) {
        throw ValidationError("plan_pool requires samples that vote call_wm");
    }
    std::vector<ActionPlan> pool;
    for (const auto& s : samples) {
        if (s.decision != Decision::call_wm || s.plan.empty()) continue;
        if (dedup && std::find(pool.begin(), pool.end(), s.plan) != pool.end()) continue;
        pool.push_back(s.plan);
    }
    return pool;
}

int select_trajectory(std::span<const ScoredTrajectory> scored) {
    if (scored.empty()) throw ValidationError("select_trajectory needs at least one candidate");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
        const auto& a = scored[i];
        const auto& b = scored[best];
        if (a.score > b.score || (a.score == b.score && a.frames < b.frames)) best = i;
    }
    return static_cast<int>(best);
}

std::int64_t account(std::span<const ModelCall> calls, const CostModel& cost) {
    double total = 0.0;
    for (const auto& c : calls) {
        total += cost.fixed_per_call + cost.per_image * c.images + cost.per_char * c.text_chars;
    }
    return static_cast<std::int64_t>(std::llround(total));
}

Budget account(const RunRecord& record, const CostModel& cost) {
    Budget b = record.budget;
    b.pseudo_tokens = account(record.calls, cost);
    return b;
}

namespace {

using Clock = std::chrono::steady_clock;

int question_chars(const Episode& ep) {
    std::size_t n = ep.question_text.size();
    for (const auto& c : ep.choices) n += c.size();
    return static_cast<int>(n);
}

RunRecord blank_record(const Episode& ep, StrategyKind kind, std::span<const Observation> start, std::uint64_t seed) {
    RunRecord r;
    r.episode_id = ep.id;
    r.strategy = kind;
    r.category = ep.category;
    r.error_tag = ep.error_tag;
    r.needs_imagination = !sufficient(ep, start);
    r.truth = ep.truth_index;
    r.seed = seed;
    return r;
}

void finish(RunRecord& r, const Episode& ep, const ControllerConfig& config, Clock::time_point began) {
    r.predicted = r.answer.argmax();
    r.correct = r.predicted == ep.truth_index;
    r.budget.pseudo_tokens = account(r.calls, config.cost);
    r.budget.wall_time = std::chrono::duration<double>(Clock::now() - began).count();
}

// Answers from `frames`; a failing answer backend yields a flagged uniform answer.
void answer_into(RunRecord& r, const Episode& ep, std::span<const Observation> frames, Backends& backends,
                 std::uint64_t seed) {
    r.calls.push_back({ModelRole::answerer, static_cast<int>(frames.size()), question_chars(ep)});
    try {
        r.answer = backends.answerer.answer(ep, frames, derive_seed(seed, "answer"));
        if (static_cast<int>(r.answer.scores.size()) != ep.num_choices() || !r.answer.normalized(1e-6)) {
            throw BackendError("answer backend returned a malformed distribution");
        }
    } catch (const BackendError& e) {
        r.answer = AnswerDistribution::uniform(ep.num_choices());
        r.fallback = true;
        r.fallback_reason = e.what();
    }
}

int corrupted_count(const std::vector<Observation>& frames) {
    int n = 0;
    for (const auto& f : frames) {
        for (const auto& p : f.percepts) n += p.corrupted ? 1 : 0;
    }
    return n;
}

RunRecord adaptive_impl(StrategyKind kind, const Episode& ep, const ControllerConfig& config, int samples_to_draw,
                        Backends& backends, std::uint64_t seed) {
    const auto began = Clock::now();
    const std::vector<Observation> start = start_frames(ep);
    RunRecord r = blank_record(ep, kind, start, seed);
    const int chars = question_chars(ep);
    try {
        for (int m = 0; m < samples_to_draw; ++m) {
            r.calls.push_back({ModelRole::policy, static_cast<int>(start.size()), chars});
            PolicySample s = backends.policy.sample(ep, start, derive_seed(seed, "policy", {static_cast<std::uint64_t>(m)}));
            validate_sample(s);
            r.samples.push_back(std::move(s));
        }
        r.vote = gate(r.samples);
        if (r.vote == Decision::skip) {
            answer_into(r, ep, start, backends, seed);
            finish(r, ep, config, began);
            return r;
        }

        const std::vector<ActionPlan> pool = plan_pool(r.samples, config.dedup_plans);
        if (pool.empty()) {
            r.fallback = true;
            r.fallback_reason = "call_wm vote without any action plan";
            answer_into(r, ep, start, backends, seed);
            finish(r, ep, config, began);
            return r;
        }

        std::vector<ImaginedTrajectory> trajectories;
        std::vector<ScoredTrajectory> scored;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            ImaginedTrajectory t = imagine(ep.scene, ep.start_pose, pool[i], ep.sensor, backends.world.noise,
                                           derive_seed(seed, "wm", {i}), config.limits);
            ++r.budget.wm_calls;
            r.budget.imagined_frames += static_cast<int>(t.frames.size());
            r.calls.push_back({ModelRole::verifier, static_cast<int>(start.size() + t.frames.size()), chars});
            const int score = backends.verifier.score(ep, start, t, derive_seed(seed, "verify", {i}));
            r.trajectories.push_back({pool[i], static_cast<int>(t.frames.size()), score, corrupted_count(t.frames)});
            scored.push_back({static_cast<int>(t.frames.size()), score});
            trajectories.push_back(std::move(t));
        }
        const int chosen = select_trajectory(scored);
        r.selected = chosen;
        r.selected_plan = pool[static_cast<std::size_t>(chosen)];

        std::vector<Observation> frames = start;
        const auto& extra = trajectories[static_cast<std::size_t>(chosen)].frames;
        frames.insert(frames.end(), extra.begin(), extra.end());
        answer_into(r, ep, frames, backends, seed);
    } catch (const BackendError& e) {
        RunRecord fb = run_none(ep, config, backends, seed);
        fb.strategy = kind;
        fb.fallback = true;
        fb.fallback_reason = e.what();
        return fb;
    }
    finish(r, ep, config, began);
    return r;
}

struct BeamResult {
    std::vector<Observation> frames;  // render order
    std::vector<TrajectoryRecord> records;
};

// Spatial beam search over the branch actions. With `limit` set, the search
// keeps expanding depth by depth until exactly `limit` frames exist.
BeamResult beam_search(RunRecord& r, const Episode& ep, const ControllerConfig& config, Backends& backends,
                       std::uint64_t seed, std::span<const Observation> start, std::optional<int> limit) {
    struct Node {
        Pose pose;
        ActionPlan plan;
    };
    struct Candidate {
        Node node;
        int score = 0;
        int order = 0;
    };

    BeamResult out;
    const int chars = question_chars(ep);
    const auto& beam = config.beam;
    std::vector<Node> beams = {{ep.start_pose, {}}};
    int rendered = 0;
    for (int depth = 0;; ++depth) {
        if (limit ? rendered >= *limit : depth >= beam.depth) break;
        std::vector<Candidate> candidates;
        for (const auto& b : beams) {
            for (const auto& action : beam.branch_actions) {
                if (limit && rendered >= *limit) break;
                Node child{apply_entry(b.pose, action), b.plan};
                child.plan.entries.push_back(action);
                ImaginedTrajectory t;
                t.plan = child.plan;
                t.frames.push_back(imagine_frame(ep.scene, child.pose, ep.sensor, backends.world.noise,
                                                 derive_seed(seed, "beam-wm"), rendered, &t.corruption_log));
                ++r.budget.wm_calls;
                ++r.budget.imagined_frames;
                r.calls.push_back({ModelRole::verifier, static_cast<int>(start.size()) + 1, chars});
                const int score =
                    backends.verifier.score(ep, start, t, derive_seed(seed, "beam-verify", {static_cast<std::uint64_t>(rendered)}));
                out.records.push_back({child.plan, 1, score, corrupted_count(t.frames)});
                out.frames.push_back(std::move(t.frames.front()));
                candidates.push_back({std::move(child), score, rendered});
                ++rendered;
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        beams.clear();
        for (std::size_t i = 0; i < candidates.size() && static_cast<int>(i) < beam.width; ++i) {
            beams.push_back(std::move(candidates[i].node));
        }
        if (beams.empty()) break;
    }
    return out;
}

}  // namespace

RunRecord run_none(const Episode& episode, const ControllerConfig& config, Backends& backends, std::uint64_t seed) {
    const auto began = Clock::now();
    const std::vector<Observation> start = start_frames(episode);
    RunRecord r = blank_record(episode, StrategyKind::none, start, seed);
    answer_into(r, episode, start, backends, seed);
    finish(r, episode, config, began);
    return r;
}

RunRecord run_adaptive(const Episode& episode, const ControllerConfig& config, Backends& backends, std::uint64_t seed) {
    return adaptive_impl(StrategyKind::adaptive, episode, config, config.M, backends, seed);
}

RunRecord run_gating_only(const Episode& episode, const ControllerConfig& config, Backends& backends,
                          std::uint64_t seed) {
    return adaptive_impl(StrategyKind::gating_only, episode, config, 1, backends, seed);
}

RunRecord run_always_on(const Episode& episode, const ControllerConfig& config, Backends& backends,
                        std::uint64_t seed) {
    const auto began = Clock::now();
    const std::vector<Observation> start = start_frames(episode);
    RunRecord r = blank_record(episode, StrategyKind::always_on, start, seed);
    r.vote = Decision::call_wm;
    try {
        BeamResult beam = beam_search(r, episode, config, backends, seed, start, std::nullopt);
        std::vector<int> order(beam.records.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return beam.records[static_cast<std::size_t>(a)].score > beam.records[static_cast<std::size_t>(b)].score;
        });
        order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(config.beam.keyframe_top_k)));
        std::sort(order.begin(), order.end());
        r.keyframes = order;
        std::vector<Observation> frames = start;
        for (int idx : order) frames.push_back(beam.frames[static_cast<std::size_t>(idx)]);
        r.trajectories = std::move(beam.records);
        answer_into(r, episode, frames, backends, seed);
    } catch (const BackendError& e) {
        RunRecord fb = run_none(episode, config, backends, seed);
        fb.strategy = StrategyKind::always_on;
        fb.fallback = true;
        fb.fallback_reason = e.what();
        return fb;
    }
    finish(r, episode, config, began);
    return r;
}

RunRecord run_forced_views(const Episode& episode, const ControllerConfig& config, Backends& backends,
                           std::uint64_t seed, int frames_wanted) {
    const auto began = Clock::now();
    const std::vector<Observation> start = start_frames(episode);
    RunRecord r = blank_record(episode, StrategyKind::always_on, start, seed);
    r.vote = frames_wanted > 0 ? Decision::call_wm : Decision::skip;
    BeamResult beam = beam_search(r, episode, config, backends, seed, start, std::max(0, frames_wanted));
    std::vector<Observation> frames = start;
    frames.insert(frames.end(), beam.frames.begin(), beam.frames.end());
    for (std::size_t i = 0; i < beam.records.size(); ++i) r.keyframes.push_back(static_cast<int>(i));
    r.trajectories = std::move(beam.records);
    answer_into(r, episode, frames, backends, seed);
    finish(r, episode, config, began);
    return r;
}

RunRecord run_strategy(StrategyKind kind, const Episode& episode, const ControllerConfig& config, Backends& backends,
                       std::uint64_t seed) {
    switch (kind) {
        case StrategyKind::none: return run_none(episode, config, backends, seed);
        case StrategyKind::always_on: return run_always_on(episode, config, backends, seed);
        case StrategyKind::gating_only: return run_gating_only(episode, config, backends, seed);
        case StrategyKind::adaptive: return run_adaptive(episode, config, backends, seed);
        case StrategyKind::upper_bound: break;
    }
    throw ValidationError("upper_bound is computed from none and always_on runs, not executed per episode");
}

UpperBound upper_bound(std::span<const RunRecord> records_none, std::span<const RunRecord> records_always) {
    if (records_none.size() != records_always.size()) {
        throw ValidationError("upper_bound needs the same episodes under both strategies");
    }
    std::map<std::string, bool> always;
    for (const auto& r : records_always) {
        if (!always.emplace(r.episode_id, r.correct).second) {
            throw ValidationError("duplicate episode id " + r.episode_id);
        }
    }
    UpperBound ub;
    int hits = 0;
    for (const auto& r : records_none) {
        const auto it = always.find(r.episode_id);
        if (it == always.end()) throw ValidationError("episode " + r.episode_id + " missing from always_on records");
        const bool ok = r.correct || it->second;
        ub.episode_ids.push_back(r.episode_id);
        ub.correct.push_back(ok);
        hits += ok ? 1 : 0;
    }
    ub.accuracy = records_none.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(records_none.size());
    return ub;
}

}  // namespace avic
