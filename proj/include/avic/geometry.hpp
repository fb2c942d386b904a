#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace avic {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unit magnitudes of the discrete egocentric action space.
inline constexpr double kForwardStep = 0.25;  // meters
inline constexpr double kTurnStep = 9.0;      // degrees
inline constexpr double kAngleEps = 1e-9;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

double distance(Vec2 a, Vec2 b);

// Normalizes to [0, 360).
double normalize_heading(double degrees);
// Normalizes to (-180, 180].
double normalize_signed(double degrees);

// Trig in degrees, exact at multiples of 90 degrees.
double cos_deg(double degrees);
double sin_deg(double degrees);

// Heading 0 points along +x; angles grow counter-clockwise, so a positive
// relative bearing means "to the left".
class Pose {
public:
    Pose() = default;
    Pose(double x, double y, double heading);

    double x() const { return x_; }
    double y() const { return y_; }
    Vec2 position() const { return {x_, y_}; }
    double heading() const { return heading_; }

    friend bool operator==(const Pose&, const Pose&) = default;

private:
    double x_ = 0.0;
    double y_ = 0.0;
    double heading_ = 0.0;
};

bool approx_equal(const Pose& a, const Pose& b, double tol = kAngleEps);

enum class ActionKind : std::uint8_t { move_forward, turn_left, turn_right };

std::string_view to_wire(ActionKind kind);
// Returns false for unknown wire names.
bool from_wire(std::string_view name, ActionKind& out);

struct ActionEntry {
    ActionKind kind = ActionKind::move_forward;
    int value = 1;

    friend bool operator==(const ActionEntry&, const ActionEntry&) = default;
};

struct PlanLimits {
    int max_entries = 6;
    int value_cap = 20;
};

struct ActionPlan {
    std::vector<ActionEntry> entries;

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
    friend bool operator==(const ActionPlan&, const ActionPlan&) = default;
};

bool opposing_turns(ActionKind a, ActionKind b);

// Throws ValidationError describing the first violated invariant.
void validate_plan(const ActionPlan& plan, const PlanLimits& limits = {});

Pose apply_unit(const Pose& pose, ActionKind kind);
Pose apply_entry(const Pose& pose, const ActionEntry& entry);

// One pose per plan entry, after all repetitions of that entry.
std::vector<Pose> simulate_plan(const Pose& start, const ActionPlan& plan, const PlanLimits& limits = {});

// Signed relative bearing in (-180, 180]; positive is left of the heading.
double bearing_to(const Pose& pose, Vec2 point);

// Greedy discretization of "go to `goal`": turn toward the goal position, walk,
// then turn to the goal heading. All turns share one direction.
ActionPlan plan_towards(const Pose& start, const Pose& goal, const PlanLimits& limits = {});

// Plan made of a single rotation by `units` turn steps (positive = left).
ActionPlan rotation_plan(int units, const PlanLimits& limits = {});

std::string describe(const ActionPlan& plan);

}  // namespace avic
