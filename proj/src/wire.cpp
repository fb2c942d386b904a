#include "avic/wire.hpp"

#include <cctype>
#include <cmath>

#include "json.hpp"

namespace avic {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(WireErrorCode code) {
    switch (code) {
        case WireErrorCode::malformed_json: return "malformed_json";
        case WireErrorCode::not_an_object: return "not_an_object";
        case WireErrorCode::missing_field: return "missing_field";
        case WireErrorCode::unknown_field: return "unknown_field";
        case WireErrorCode::bad_decision: return "bad_decision";
        case WireErrorCode::bad_reason: return "bad_reason";
        case WireErrorCode::bad_actions: return "bad_actions";
        case WireErrorCode::unknown_action_type: return "unknown_action_type";
        case WireErrorCode::bad_action_value: return "bad_action_value";
        case WireErrorCode::skip_with_actions: return "skip_with_actions";
        case WireErrorCode::invalid_plan: return "invalid_plan";
        case WireErrorCode::empty_output: return "empty_output";
        case WireErrorCode::not_an_integer: return "not_an_integer";
        case WireErrorCode::out_of_range: return "out_of_range";
        case WireErrorCode::bad_scores: return "bad_scores";
    }
    return "unknown";
}

namespace {

[[noreturn]] void fail(WireErrorCode code, const std::string& what) {
    throw WireError(code, std::string(to_string(code)) + ": " + what);
}

int integral_value(const json& v, std::size_t index) {
    if (v.is_number_integer() || v.is_number_unsigned()) {
        const auto n = v.get<long long>();
        if (n < 1 || n > 1000000) fail(WireErrorCode::bad_action_value, "action " + std::to_string(index) + " value out of range");
        return static_cast<int>(n);
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && d >= 1.0 && d <= 1e6) return static_cast<int>(d);
    }
    fail(WireErrorCode::bad_action_value, "action " + std::to_string(index) + " value must be a positive integer");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

PolicySample parse_policy_output(std::string_view text, const PolicyParseOptions& options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(WireErrorCode::malformed_json, e.what());
    }
    if (!doc.is_object()) fail(WireErrorCode::not_an_object, "policy output must be a JSON object");
    if (options.strict) {
        for (const auto& item : doc.items()) {
            if (item.key() != "decision" && item.key() != "reason" && item.key() != "actions") {
                fail(WireErrorCode::unknown_field, "unexpected field '" + item.key() + "'");
            }
        }
    }
    for (const char* key : {"decision", "reason", "actions"}) {
        if (!doc.contains(key)) fail(WireErrorCode::missing_field, std::string("missing '") + key + "'");
    }

    PolicySample out;
    const json& decision = doc["decision"];
    if (!decision.is_string()) fail(WireErrorCode::bad_decision, "decision must be a string");
    const auto d = decision.get<std::string>();
    if (d == "skip") {
        out.decision = Decision::skip;
    } else if (d == "call_wm") {
        out.decision = Decision::call_wm;
    } else {
        fail(WireErrorCode::bad_decision, "decision '" + d + "' is not skip or call_wm");
    }

    if (!doc["reason"].is_string()) fail(WireErrorCode::bad_reason, "reason must be a string");
    out.reason = doc["reason"].get<std::string>();

    const json& actions = doc["actions"];
    if (!actions.is_array()) fail(WireErrorCode::bad_actions, "actions must be an array");
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const json& a = actions[i];
        if (!a.is_object() || !a.contains("type") || !a.contains("value")) {
            fail(WireErrorCode::bad_actions, "action " + std::to_string(i) + " must have type and value");
        }
        if (options.strict && a.size() != 2) {
            fail(WireErrorCode::unknown_field, "action " + std::to_string(i) + " has extra fields");
        }
        ActionEntry entry;
        if (!a["type"].is_string() || !from_wire(a["type"].get<std::string>(), entry.kind)) {
            fail(WireErrorCode::unknown_action_type, "action " + std::to_string(i) + " has an unknown type");
        }
        entry.value = integral_value(a["value"], i);
        out.plan.entries.push_back(entry);
    }
    if (out.decision == Decision::skip && !out.plan.empty()) {
        fail(WireErrorCode::skip_with_actions, "skip decision carries actions");
    }
    try {
        validate_plan(out.plan, options.limits);
    } catch (const ValidationError& e) {
        fail(WireErrorCode::invalid_plan, e.what());
    }
    return out;
}

std::string serialize_policy_output(const PolicySample& sample) {
    ordered_json doc;
    doc["decision"] = std::string(to_string(sample.decision));
    doc["reason"] = sample.reason;
    doc["actions"] = ordered_json::array();
    for (const auto& e : sample.plan.entries) {
        ordered_json a;
        a["type"] = std::string(to_wire(e.kind));
        a["value"] = e.value;
        doc["actions"].push_back(std::move(a));
    }
    return doc.dump();
}

int parse_verifier_output(std::string_view text) {
    const std::string_view token = trim(text);
    if (token.empty()) fail(WireErrorCode::empty_output, "verifier returned nothing");
    std::size_t i = 0;
    if (token[0] == '+' || token[0] == '-') i = 1;
    if (i == token.size()) fail(WireErrorCode::not_an_integer, "'" + std::string(token) + "'");
    for (std::size_t j = i; j < token.size(); ++j) {
        if (!std::isdigit(static_cast<unsigned char>(token[j]))) {
            fail(WireErrorCode::not_an_integer, "'" + std::string(token) + "' is not a bare integer");
        }
    }
    if (token.size() - i > 3) fail(WireErrorCode::out_of_range, "'" + std::string(token) + "'");
    const int value = std::stoi(std::string(token));
    if (value < 0 || value > 9) fail(WireErrorCode::out_of_range, std::to_string(value) + " is outside [0, 9]");
    return value;
}

AnswerDistribution parse_answer_output(std::string_view text, int k) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(WireErrorCode::malformed_json, e.what());
    }
    if (!doc.is_object()) fail(WireErrorCode::not_an_object, "answer output must be a JSON object");
    if (!doc.contains("scores")) fail(WireErrorCode::missing_field, "missing 'scores'");
    const json& scores = doc["scores"];
    if (!scores.is_array() || static_cast<int>(scores.size()) != k) {
        fail(WireErrorCode::bad_scores, "scores must be an array of " + std::to_string(k) + " numbers");
    }
    AnswerDistribution out;
    double sum = 0.0;
    for (const auto& s : scores) {
        if (!s.is_number()) fail(WireErrorCode::bad_scores, "scores must be numbers");
        const double v = s.get<double>();
        if (!(v >= 0.0) || !std::isfinite(v)) fail(WireErrorCode::bad_scores, "scores must be non-negative");
        out.scores.push_back(v);
        sum += v;
    }
    if (!(sum > 0.0)) fail(WireErrorCode::bad_scores, "scores sum to zero");
    for (double& v : out.scores) v /= sum;
    return out;
}

std::string serialize_answer_output(const AnswerDistribution& dist) {
    json doc;
    doc["scores"] = dist.scores;
    return doc.dump();
}

}  // namespace avic
