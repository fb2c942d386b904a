#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "avic/agents.hpp"

namespace avic {

// Distinct failure classes for model output parsing.
enum class WireErrorCode {
    malformed_json,
    not_an_object,
    missing_field,
    unknown_field,
    bad_decision,
    bad_reason,
    bad_actions,
    unknown_action_type,
    bad_action_value,
    skip_with_actions,
    invalid_plan,
    empty_output,
    not_an_integer,
    out_of_range,
    bad_scores,
};

std::string_view to_string(WireErrorCode code);

class WireError : public std::runtime_error {
public:
    WireError(WireErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    WireErrorCode code() const { return code_; }

private:
    WireErrorCode code_;
};

struct PolicyParseOptions {
    bool strict = true;  // reject fields outside the schema
    PlanLimits limits;
};

// Parses the policy model's JSON decision:
//   {"decision": "skip"|"call_wm", "reason": "<one sentence>",
//    "actions": [{"type": "move-forward"|"turn-left"|"turn-right", "value": <number>}]}
PolicySample parse_policy_output(std::string_view text, const PolicyParseOptions& options = {});

// Canonical single-line JSON in schema field order.
std::string serialize_policy_output(const PolicySample& sample);

// A bare integer in [0, 9]; surrounding whitespace is allowed, nothing else.
int parse_verifier_output(std::string_view text);

// {"scores": [...]} with `k` non-negative entries; normalized on return.
AnswerDistribution parse_answer_output(std::string_view text, int k);
std::string serialize_answer_output(const AnswerDistribution& dist);

}  // namespace avic
