#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avic/controller.hpp"

namespace avic {

enum class CaseLabel : std::uint8_t { helpful, misleading, unnecessary, harmful };
std::string_view to_string(CaseLabel c);

// Total over the three bits. A skipped run answers from the start frames only.
CaseLabel classify_case(bool none_correct, bool imagination_correct, bool invoked);
// Throws ValidationError when the episode ids differ.
CaseLabel classify_case(const RunRecord& none, const RunRecord& imagination);

struct CaseStats {
    std::array<int, 4> counts{};  // indexed by CaseLabel
    int total = 0;

    double fraction(CaseLabel c) const;
    // Three-way split with harmful folded into unnecessary.
    double unnecessary_folded() const;
};

// Pairs records by episode id; throws ValidationError on a mismatch.
CaseStats case_stats(std::span<const RunRecord> none, std::span<const RunRecord> imagination);

struct CurvePoint {
    int views = 0;
    double accuracy = 0.0;
};

// Accuracy when every episode is answered from the start frames plus exactly
// `n` beam-prefix views. `seeds[i]` is the run seed of `episodes[i]`.
std::vector<CurvePoint> view_curve(std::span<const Episode> episodes, std::span<const std::uint64_t> seeds,
                                   const ControllerConfig& config, Backends& backends,
                                   std::vector<int> forced_counts);

struct StrategySummary {
    StrategyKind strategy = StrategyKind::none;
    int episodes = 0;
    double accuracy = 0.0;
    double mean_pseudo_tokens = 0.0;
    double mean_wm_calls = 0.0;
    double mean_imagined_frames = 0.0;
    double mean_wall_time = 0.0;
};

// Throws ValidationError for an empty set or records of several strategies.
StrategySummary summarize(std::span<const RunRecord> records);

struct FrontierPoint {
    StrategyKind strategy = StrategyKind::none;
    double mean_pseudo_tokens = 0.0;
    double accuracy = 0.0;
    double mean_wall_time = 0.0;
};

// One point per strategy, ordered by token cost.
std::vector<FrontierPoint> frontier(std::span<const StrategySummary> summaries);

struct TagBreakdown {
    ErrorTag tag = ErrorTag::LO;
    int episodes = 0;
    double invocation_rate = 0.0;
    double accuracy_none = 0.0;
    double accuracy_imagination = 0.0;
    double gain = 0.0;  // imagination minus none
};

std::vector<TagBreakdown> error_breakdown(std::span<const RunRecord> imagination, std::span<const RunRecord> none);

struct GatingQuality {
    int needed = 0;
    int invoked = 0;
    int invoked_and_needed = 0;
    std::optional<double> recall;     // undefined when nothing needed imagination
    std::optional<double> precision;  // undefined when nothing was invoked
};

GatingQuality gating_quality(std::span<const RunRecord> records);

std::string cases_csv(const CaseStats& stats);
std::string curve_csv(std::span<const CurvePoint> curve);
std::string frontier_csv(std::span<const FrontierPoint> points);
std::string breakdown_csv(std::span<const TagBreakdown> rows);
std::string gating_csv(const GatingQuality& q);

}  // namespace avic
