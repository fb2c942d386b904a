#include "avic/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "avic/rng.hpp"

namespace avic {

std::string_view to_string(Decision d) { return d == Decision::skip ? "skip" : "call_wm"; }

void validate_sample(const PolicySample& sample) {
    if (sample.decision == Decision::skip && !sample.plan.empty()) {
        throw ValidationError("a skip decision must not carry an action plan");
    }
}

AnswerDistribution AnswerDistribution::uniform(int k) {
    return {std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k))};
}

AnswerDistribution AnswerDistribution::one_hot(int k, int index) {
    AnswerDistribution d{std::vector<double>(static_cast<std::size_t>(k), 0.0)};
    d.scores[static_cast<std::size_t>(index)] = 1.0;
    return d;
}

int AnswerDistribution::argmax() const {
    int best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

bool AnswerDistribution::normalized(double tol) const {
    if (scores.empty()) return false;
    double sum = 0.0;
    for (double s : scores) {
        if (s < 0.0 || !std::isfinite(s)) return false;
        sum += s;
    }
    return std::fabs(sum - 1.0) <= tol;
}

// ---------------------------------------------------------------------------
// Policy

ActionPlan intended_plan(const Episode& episode, std::span<const Observation> start_frames, const PlanLimits& limits) {
    if (episode.evidence.reference_plan && !episode.evidence.reference_plan->empty()) {
        return *episode.evidence.reference_plan;
    }
    if (const auto hint = unmet_viewpoint_hint(episode, start_frames)) {
        ActionPlan plan = plan_towards(episode.start_pose, *hint, limits);
        if (!plan.empty()) return plan;
    }
    return ActionPlan{{{ActionKind::turn_left, 5}}};
}

namespace {

ActionKind flipped(ActionKind k) {
    switch (k) {
        case ActionKind::turn_left: return ActionKind::turn_right;
        case ActionKind::turn_right: return ActionKind::turn_left;
        case ActionKind::move_forward: return ActionKind::move_forward;
    }
    return k;
}

void perturb(ActionPlan& plan, Stream& rng) {
    const bool has_turn = std::any_of(plan.entries.begin(), plan.entries.end(),
                                      [](const ActionEntry& e) { return e.kind != ActionKind::move_forward; });
    if (has_turn && rng.bernoulli(0.5)) {
        for (auto& e : plan.entries) e.kind = flipped(e.kind);
        return;
    }
    if (plan.entries.size() > 1) {
        plan.entries.pop_back();
    } else if (plan.entries.front().value > 1) {
        plan.entries.front().value /= 2;
    } else {
        plan.entries.front().kind = flipped(plan.entries.front().kind);
    }
}

void jitter(ActionPlan& plan, Stream& rng, const PlanLimits& limits) {
    auto& e = plan.entries[rng.index(plan.entries.size())];
    const int delta = rng.bernoulli(0.5) ? 1 : -1;
    e.value = std::clamp(e.value + delta, 1, limits.value_cap);
}

}  // namespace

SyntheticPolicy::SyntheticPolicy(SyntheticPolicyConfig config) : config_(config) {}

PolicySample SyntheticPolicy::sample(const Episode& episode, std::span<const Observation> start_frames,
                                     std::uint64_t seed) {
    Stream rng(derive_seed(seed, "policy-sample"));
    const bool enough = sufficient(episode, start_frames);
    const bool judged_right = rng.bernoulli(config_.q_gate);
    const bool call = judged_right ? !enough : enough;
    const bool clean_plan = rng.bernoulli(config_.q_plan);
    const bool jittered = rng.bernoulli(config_.sample_jitter);

    PolicySample out;
    if (!call) {
        out.decision = Decision::skip;
        out.reason = "the current views already show the evidence the question needs";
        return out;
    }
    out.decision = Decision::call_wm;
    out.plan = intended_plan(episode, start_frames, config_.limits);
    if (!clean_plan) perturb(out.plan, rng);
    if (jittered) jitter(out.plan, rng, config_.limits);
    validate_plan(out.plan, config_.limits);
    out.reason = "the answer depends on a view that is not in the current observation";
    return out;
}

// ---------------------------------------------------------------------------
// Verifier

double revealed_fraction(const Episode& episode, std::span<const Observation> start_frames,
                         std::span<const Observation> trajectory_frames) {
    int missing = 0;
    int revealed = 0;
    auto has_label = [](std::span<const Observation> frames, const std::string& label) {
        return std::any_of(frames.begin(), frames.end(),
                           [&](const Observation& f) { return f.nearest_with_label(label) != nullptr; });
    };
    auto meets = [&](std::span<const Observation> frames, const ViewpointRequirement& req) {
        return std::any_of(frames.begin(), frames.end(),
                           [&](const Observation& f) { return requirement_met(episode, req, f.viewpoint); });
    };
    for (const auto& label : episode.evidence.required_labels) {
        if (has_label(start_frames, label)) continue;
        ++missing;
        if (has_label(trajectory_frames, label)) ++revealed;
    }
    for (const auto& req : episode.evidence.required_viewpoints) {
        if (meets(start_frames, req)) continue;
        ++missing;
        if (meets(trajectory_frames, req)) ++revealed;
    }
    return missing == 0 ? 0.0 : static_cast<double>(revealed) / static_cast<double>(missing);
}

int verifier_base_score(const Episode& episode, std::span<const Observation> start_frames,
                        std::span<const Observation> trajectory_frames) {
    const double revealed = revealed_fraction(episode, start_frames, trajectory_frames);
    const std::vector<int> ids = episode.required_object_ids();
    const std::set<std::string> labels(episode.evidence.required_labels.begin(), episode.evidence.required_labels.end());
    int relevant = 0;
    int corrupted = 0;
    for (const auto& frame : trajectory_frames) {
        for (const auto& p : frame.percepts) {
            const bool is_relevant =
                labels.count(p.label) > 0 || std::find(ids.begin(), ids.end(), p.source_id) != ids.end();
            if (!is_relevant) continue;
            ++relevant;
            if (p.corrupted) ++corrupted;
        }
    }
    const double penalty = relevant == 0 ? 0.0 : 0.5 * static_cast<double>(corrupted) / static_cast<double>(relevant);
    return static_cast<int>(std::lround(9.0 * std::max(0.0, revealed - penalty)));
}

SyntheticVerifier::SyntheticVerifier(SyntheticVerifierConfig config) : config_(config) {
    if (config_.noise_amplitude < 0) throw ValidationError("verifier noise_amplitude must be non-negative");
}

int SyntheticVerifier::score(const Episode& episode, std::span<const Observation> start_frames,
                             const ImaginedTrajectory& trajectory, std::uint64_t seed) {
    const int base = verifier_base_score(episode, start_frames, trajectory.frames);
    Stream rng(derive_seed(seed, "verifier"));
    const auto noise = config_.noise_amplitude == 0
                           ? 0
                           : rng.uniform_int(-config_.noise_amplitude, config_.noise_amplitude);
    return static_cast<int>(std::clamp<std::int64_t>(base + noise, 0, 9));
}

// ---------------------------------------------------------------------------
// Answerer

SyntheticAnswerer::SyntheticAnswerer(SyntheticAnswerConfig config) : config_(config) {
    if (!(config_.competence >= 0.0 && config_.competence <= 1.0)) {
        throw ValidationError("answer competence must lie in [0, 1]");
    }
}

AnswerDistribution SyntheticAnswerer::answer(const Episode& episode, std::span<const Observation> frames,
                                             std::uint64_t seed) {
    const int k = episode.num_choices();
    Stream rng(derive_seed(seed, "answerer"));
    const bool reasons_well = rng.bernoulli(config_.competence);
    if (frames.empty() || !sufficient(episode, frames) || !reasons_well) return AnswerDistribution::uniform(k);
    const auto choice = answer_from_frames(episode, frames);
    if (!choice) return AnswerDistribution::uniform(k);
    return AnswerDistribution::one_hot(k, *choice);
}

}  // namespace avic
