#include "avic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace avic {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double normalize_heading(double degrees) {
    double h = std::fmod(degrees, 360.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h = 0.0;
    if (h == 0.0) h = 0.0;  // folds -0.0
    return h;
}

double normalize_signed(double degrees) {
    double h = normalize_heading(degrees);
    if (h > 180.0) h -= 360.0;
    return h;
}

namespace {

// Splits a heading into quadrant and remainder; axis-aligned angles give exact 0/1.
void reduce(double degrees, int& quadrant, double& rem_rad) {
    const double d = normalize_heading(degrees);
    quadrant = static_cast<int>(std::floor(d / 90.0)) % 4;
    const double rem = d - 90.0 * quadrant;
    rem_rad = rem * (std::numbers::pi / 180.0);
}

}  // namespace

double cos_deg(double degrees) {
    int q = 0;
    double r = 0.0;
    reduce(degrees, q, r);
    switch (q) {
        case 0: return std::cos(r);
        case 1: return -std::sin(r);
        case 2: return -std::cos(r);
        default: return std::sin(r);
    }
}

double sin_deg(double degrees) {
    int q = 0;
    double r = 0.0;
    reduce(degrees, q, r);
    switch (q) {
        case 0: return std::sin(r);
        case 1: return std::cos(r);
        case 2: return -std::sin(r);
        default: return -std::cos(r);
    }
}

Pose::Pose(double x, double y, double heading) : x_(x), y_(y), heading_(normalize_heading(heading)) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(heading)) {
        throw ValidationError("pose coordinates must be finite");
    }
}

bool approx_equal(const Pose& a, const Pose& b, double tol) {
    return std::fabs(a.x() - b.x()) <= tol && std::fabs(a.y() - b.y()) <= tol &&
           std::fabs(normalize_signed(a.heading() - b.heading())) <= tol;
}

std::string_view to_wire(ActionKind kind) {
    switch (kind) {
        case ActionKind::move_forward: return "move-forward";
        case ActionKind::turn_left: return "turn-left";
        case ActionKind::turn_right: return "turn-right";
    }
    return "move-forward";
}

bool from_wire(std::string_view name, ActionKind& out) {
    if (name == "move-forward") {
        out = ActionKind::move_forward;
    } else if (name == "turn-left") {
        out = ActionKind::turn_left;
    } else if (name == "turn-right") {
        out = ActionKind::turn_right;
    } else {
        return false;
    }
    return true;
}

bool opposing_turns(ActionKind a, ActionKind b) {
    return (a == ActionKind::turn_left && b == ActionKind::turn_right) ||
           (a == ActionKind::turn_right && b == ActionKind::turn_left);
}

void validate_plan(const ActionPlan& plan, const PlanLimits& limits) {
    if (static_cast<int>(plan.entries.size()) > limits.max_entries) {
        throw ValidationError("plan has " + std::to_string(plan.entries.size()) + " entries, limit is " +
                              std::to_string(limits.max_entries));
    }
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        const auto& e = plan.entries[i];
        if (e.value < 1 || e.value > limits.value_cap) {
            throw ValidationError("entry " + std::to_string(i) + " value " + std::to_string(e.value) +
                                  " outside [1, " + std::to_string(limits.value_cap) + "]");
        }
        if (i > 0 && opposing_turns(plan.entries[i - 1].kind, e.kind)) {
            throw ValidationError("entries " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                  " are opposing turns");
        }
    }
}

Pose apply_unit(const Pose& pose, ActionKind kind) {
    switch (kind) {
        case ActionKind::turn_left:
            return Pose(pose.x(), pose.y(), pose.heading() + kTurnStep);
        case ActionKind::turn_right:
            return Pose(pose.x(), pose.y(), pose.heading() - kTurnStep);
        case ActionKind::move_forward:
            return Pose(pose.x() + kForwardStep * cos_deg(pose.heading()),
                        pose.y() + kForwardStep * sin_deg(pose.heading()), pose.heading());
    }
    return pose;
}

Pose apply_entry(const Pose& pose, const ActionEntry& entry) {
    Pose p = pose;
    for (int i = 0; i < entry.value; ++i) p = apply_unit(p, entry.kind);
    return p;
}

std::vector<Pose> simulate_plan(const Pose& start, const ActionPlan& plan, const PlanLimits& limits) {
    validate_plan(plan, limits);
    std::vector<Pose> out;
    out.reserve(plan.entries.size());
    Pose p = start;
    for (const auto& e : plan.entries) {
        p = apply_entry(p, e);
        out.push_back(p);
    }
    return out;
}

double bearing_to(const Pose& pose, Vec2 point) {
    const double dx = point.x - pose.x();
    const double dy = point.y - pose.y();
    if (dx == 0.0 && dy == 0.0) {
        throw ValidationError("bearing to a point coincident with the pose is undefined");
    }
    double absolute = 0.0;
    if (dy == 0.0) {
        absolute = dx > 0.0 ? 0.0 : 180.0;
    } else if (dx == 0.0) {
        absolute = dy > 0.0 ? 90.0 : 270.0;
    } else {
        absolute = std::atan2(dy, dx) * (180.0 / std::numbers::pi);
    }
    return normalize_signed(absolute - pose.heading());
}

namespace {

void append_chunks(ActionPlan& plan, ActionKind kind, int units, int cap) {
    while (units > 0) {
        const int v = std::min(units, cap);
        plan.entries.push_back({kind, v});
        units -= v;
    }
}

}  // namespace

ActionPlan rotation_plan(int units, const PlanLimits& limits) {
    ActionPlan plan;
    append_chunks(plan, units >= 0 ? ActionKind::turn_left : ActionKind::turn_right, std::abs(units),
                  limits.value_cap);
    return plan;
}

ActionPlan plan_towards(const Pose& start, const Pose& goal, const PlanLimits& limits) {
    const double dist = distance(start.position(), goal.position());
    const auto steps = static_cast<int>(std::lround(dist / kForwardStep));
    ActionPlan plan;
    if (steps == 0) {
        plan = rotation_plan(static_cast<int>(std::lround(normalize_signed(goal.heading() - start.heading()) / kTurnStep)),
                             limits);
    } else {
        const int first = static_cast<int>(std::lround(bearing_to(start, goal.position()) / kTurnStep));
        const double walked_heading = start.heading() + kTurnStep * first;
        int last = static_cast<int>(std::lround(normalize_signed(goal.heading() - walked_heading) / kTurnStep));
        if (first != 0 && last != 0 && (first > 0) != (last > 0)) {
            last += first > 0 ? 40 : -40;  // keep turning the same way round
        }
        const ActionKind dir = first > 0 ? ActionKind::turn_left : ActionKind::turn_right;
        append_chunks(plan, dir, std::abs(first), limits.value_cap);
        append_chunks(plan, ActionKind::move_forward, steps, limits.value_cap);
        append_chunks(plan, last > 0 ? ActionKind::turn_left : ActionKind::turn_right, std::abs(last),
                      limits.value_cap);
    }
    if (static_cast<int>(plan.entries.size()) > limits.max_entries) {
        plan.entries.resize(static_cast<std::size_t>(limits.max_entries));
    }
    return plan;
}

std::string describe(const ActionPlan& plan) {
    std::ostringstream os;
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        if (i) os << ", ";
        os << to_wire(plan.entries[i].kind) << " x" << plan.entries[i].value;
    }
    return os.str();
}

}  // namespace avic
