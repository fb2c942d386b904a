#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avic/agents.hpp"
#include "avic/geometry.hpp"
#include "avic/tasks.hpp"
#include "avic/world.hpp"

namespace avic {

enum class StrategyKind : std::uint8_t { none, always_on, gating_only, adaptive, upper_bound };
std::string_view to_string(StrategyKind s);
std::optional<StrategyKind> parse_strategy(std::string_view s);

struct BeamConfig {
    std::vector<ActionEntry> branch_actions = {
        {ActionKind::turn_left, 5}, {ActionKind::turn_right, 5}, {ActionKind::move_forward, 4}};
    int width = 2;
    int depth = 3;
    int keyframe_top_k = 2;

    // Frames rendered by a full search: |A| + |A| * B * (D - 1).
    int frames_per_search() const;
};

struct CostModel {
    double fixed_per_call = 50.0;
    double per_image = 256.0;
    double per_char = 0.25;
};

struct ControllerConfig {
    int M = 5;
    bool dedup_plans = true;
    BeamConfig beam;
    PlanLimits limits;
    CostModel cost;

    void validate() const;
};

enum class ModelRole : std::uint8_t { policy, verifier, answerer };
std::string_view to_string(ModelRole r);

struct ModelCall {
    ModelRole role = ModelRole::answerer;
    int images = 0;
    int text_chars = 0;

    friend bool operator==(const ModelCall&, const ModelCall&) = default;
};

struct Budget {
    int wm_calls = 0;         // trajectory renders (adaptive) or frame renders (beam search)
    int imagined_frames = 0;
    std::int64_t pseudo_tokens = 0;
    double wall_time = 0.0;  // seconds; never part of determinism comparisons
};

struct TrajectoryRecord {
    ActionPlan plan;
    int frames = 0;
    int score = 0;
    int corrupted_percepts = 0;
};

struct RunRecord {
    std::string episode_id;
    StrategyKind strategy = StrategyKind::none;
    QuestionCategory category = QuestionCategory::Pers;
    ErrorTag error_tag = ErrorTag::VD;
    bool needs_imagination = false;  // evidence missing from the start frames
    std::vector<PolicySample> samples;
    Decision vote = Decision::skip;
    std::vector<TrajectoryRecord> trajectories;
    std::optional<int> selected;  // index into trajectories
    std::optional<ActionPlan> selected_plan;
    std::vector<int> keyframes;  // beam search: indices into trajectories
    AnswerDistribution answer;
    int predicted = 0;
    int truth = 0;
    bool correct = false;
    Budget budget;
    std::vector<ModelCall> calls;
    std::uint64_t seed = 0;
    bool fallback = false;
    std::string fallback_reason;

    bool invoked_world_model() const { return budget.wm_calls > 0; }
};

struct WorldModel {
    NoiseModel noise;
};

struct Backends {
    PolicyBackend& policy;
    VerifierBackend& verifier;
    AnswerBackend& answerer;
    WorldModel world;
};

// Strict majority for call_wm; ties go to skip. Throws ValidationError on an empty list.
Decision gate(std::span<const PolicySample> samples);

// Plans of the call_wm samples in order, deduplicated when `dedup` is set.
// Throws ValidationError if the samples do not vote call_wm.
std::vector<ActionPlan> plan_pool(std::span<const PolicySample> samples, bool dedup = true);

struct ScoredTrajectory {
    int frames = 0;
    int score = 0;
};

// Highest score; ties go to fewer frames, then the lower index.
int select_trajectory(std::span<const ScoredTrajectory> scored);

std::int64_t account(std::span<const ModelCall> calls, const CostModel& cost);
Budget account(const RunRecord& record, const CostModel& cost);

RunRecord run_none(const Episode& episode, const ControllerConfig& config, Backends& backends, std::uint64_t seed);
RunRecord run_adaptive(const Episode& episode, const ControllerConfig& config, Backends& backends, std::uint64_t seed);
RunRecord run_gating_only(const Episode& episode, const ControllerConfig& config, Backends& backends,
                          std::uint64_t seed);
RunRecord run_always_on(const Episode& episode, const ControllerConfig& config, Backends& backends,
                        std::uint64_t seed);

// Beam search that stops once `frames` views are rendered and answers from the
// start frames plus exactly those views, in render order.
RunRecord run_forced_views(const Episode& episode, const ControllerConfig& config, Backends& backends,
                           std::uint64_t seed, int frames);

RunRecord run_strategy(StrategyKind kind, const Episode& episode, const ControllerConfig& config, Backends& backends,
                       std::uint64_t seed);

struct UpperBound {
    double accuracy = 0.0;
    std::vector<std::string> episode_ids;
    std::vector<bool> correct;
};

// Per-episode union of the two strategies' correctness. Throws ValidationError
// when the record sets do not cover the same episode ids.
UpperBound upper_bound(std::span<const RunRecord> records_none, std::span<const RunRecord> records_always);

}  // namespace avic
