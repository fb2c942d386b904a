#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avic/geometry.hpp"
#include "avic/world.hpp"

namespace avic {

enum class QuestionCategory : std::uint8_t { EgoM, ObjM, EgoAct, Goal, Pers };
enum class ErrorTag : std::uint8_t { LO, VD, AC, DU };

inline constexpr QuestionCategory kAllCategories[] = {QuestionCategory::EgoM, QuestionCategory::ObjM,
                                                      QuestionCategory::EgoAct, QuestionCategory::Goal,
                                                      QuestionCategory::Pers};
inline constexpr ErrorTag kAllTags[] = {ErrorTag::LO, ErrorTag::VD, ErrorTag::AC, ErrorTag::DU};

std::string_view to_string(QuestionCategory c);
std::string_view to_string(ErrorTag t);
std::optional<QuestionCategory> parse_category(std::string_view s);
std::optional<ErrorTag> parse_error_tag(std::string_view s);

// A viewpoint condition an answer depends on. `pose_match` needs a frame taken
// at (approximately) `pose`; `target_visible` needs a frame from which the
// target object is visible, with `pose` recorded as one such viewpoint.
struct ViewpointRequirement {
    enum class Kind : std::uint8_t { pose_match, target_visible };
    Kind kind = Kind::pose_match;
    Pose pose;
    int target_id = -1;
    double position_tol = 1e-6;
    double heading_tol = 1e-6;

    friend bool operator==(const ViewpointRequirement&, const ViewpointRequirement&) = default;
};

struct EvidenceSpec {
    std::vector<std::string> required_labels;
    std::vector<ViewpointRequirement> required_viewpoints;
    std::optional<ActionPlan> reference_plan;

    friend bool operator==(const EvidenceSpec&, const EvidenceSpec&) = default;
};

struct Episode {
    std::string id;
    Scene scene;
    Sensor sensor;
    Pose start_pose;
    std::optional<Pose> second_pose;         // EgoM
    std::optional<Vec2> displaced_position;  // ObjM: target position in the second frame
    QuestionCategory category = QuestionCategory::Pers;
    ErrorTag error_tag = ErrorTag::VD;
    std::string question_text;
    std::vector<std::string> choices;
    int truth_index = 0;
    EvidenceSpec evidence;
    std::vector<ActionPlan> candidate_plans;  // Goal: plan per choice
    int target_id = -1;
    int reference_id = -1;  // Pers: the object whose perspective is taken
    std::uint64_t seed = 0;

    int num_choices() const { return static_cast<int>(choices.size()); }
    std::vector<int> required_object_ids() const;
};

struct EpisodeGenConfig {
    int num_choices = 4;
    double lo_fraction = 0.5;  // share of Goal episodes built as occlusion variants
    int max_attempts = 400;
    double boundary_margin = 5.0;  // degrees kept clear of every decision boundary
};

// Throws GenerationError when the template cannot be instantiated in `scene`.
// `truth_slot` pins the correct choice position; otherwise it is drawn from the seed.
Episode generate_episode(const Scene& scene, QuestionCategory category, std::uint64_t seed,
                         const Sensor& sensor = {}, const EpisodeGenConfig& config = {},
                         std::optional<int> truth_slot = std::nullopt);

// The observations available before any imagination.
std::vector<Observation> start_frames(const Episode& episode);

// Ground-truth answer from uncorrupted geometry. Throws ValidationError for malformed episodes.
int oracle_answer(const Episode& episode);

bool requirement_met(const Episode& episode, const ViewpointRequirement& req, const Pose& viewpoint);

// Presence test: every required label appears in some frame and every
// viewpoint requirement is met by some frame's viewpoint.
bool sufficient(const Episode& episode, std::span<const Observation> frames);

// Evaluates the category predicate on the percepts in `frames` (which may be
// corrupted). Returns nullopt when the evidence does not resolve.
std::optional<int> answer_from_frames(const Episode& episode, std::span<const Observation> frames);

// Planning hint for the first requirement not yet met by `frames`, if any.
std::optional<Pose> unmet_viewpoint_hint(const Episode& episode, std::span<const Observation> frames);

}  // namespace avic
