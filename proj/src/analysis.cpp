#include "avic/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace avic {

std::string_view to_string(CaseLabel c) {
    switch (c) {
        case CaseLabel::helpful: return "helpful";
        case CaseLabel::misleading: return "misleading";
        case CaseLabel::unnecessary: return "unnecessary";
        case CaseLabel::harmful: return "harmful";
    }
    return "unknown";
}

CaseLabel classify_case(bool none_correct, bool imagination_correct, bool invoked) {
    if (none_correct) {
        return (imagination_correct || !invoked) ? CaseLabel::unnecessary : CaseLabel::harmful;
    }
    return imagination_correct ? CaseLabel::helpful : CaseLabel::misleading;
}

CaseLabel classify_case(const RunRecord& none, const RunRecord& imagination) {
    if (none.episode_id != imagination.episode_id) {
        throw ValidationError("classify_case: episode ids differ ('" + none.episode_id + "' vs '" +
                              imagination.episode_id + "')");
    }
    return classify_case(none.correct, imagination.correct, imagination.invoked_world_model());
}

double CaseStats::fraction(CaseLabel c) const {
    return total > 0 ? static_cast<double>(counts[static_cast<std::size_t>(c)]) / total : 0.0;
}

double CaseStats::unnecessary_folded() const {
    return fraction(CaseLabel::unnecessary) + fraction(CaseLabel::harmful);
}

namespace {

std::map<std::string, const RunRecord*> index_by_id(std::span<const RunRecord> records) {
    std::map<std::string, const RunRecord*> out;
    for (const auto& r : records) {
        if (!out.emplace(r.episode_id, &r).second) {
            throw ValidationError("duplicate episode id '" + r.episode_id + "'");
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

CaseStats case_stats(std::span<const RunRecord> none, std::span<const RunRecord> imagination) {
    if (none.size() != imagination.size()) throw ValidationError("case_stats: record sets differ in size");
    const auto by_id = index_by_id(none);
    CaseStats stats;
    for (const auto& imag : imagination) {
        const auto it = by_id.find(imag.episode_id);
        if (it == by_id.end()) throw ValidationError("case_stats: no baseline record for '" + imag.episode_id + "'");
        ++stats.counts[static_cast<std::size_t>(classify_case(*it->second, imag))];
        ++stats.total;
    }
    return stats;
}

std::vector<CurvePoint> view_curve(std::span<const Episode> episodes, std::span<const std::uint64_t> seeds,
                                   const ControllerConfig& config, Backends& backends,
                                   std::vector<int> forced_counts) {
    if (forced_counts.empty()) throw ValidationError("view_curve: forced_counts must not be empty");
    if (episodes.size() != seeds.size()) throw ValidationError("view_curve: one seed per episode required");
    std::sort(forced_counts.begin(), forced_counts.end());
    forced_counts.erase(std::unique(forced_counts.begin(), forced_counts.end()), forced_counts.end());
    std::vector<CurvePoint> out;
    for (int n : forced_counts) {
        if (n < 0) throw ValidationError("view_curve: forced view counts must be non-negative");
        int correct = 0;
        for (std::size_t i = 0; i < episodes.size(); ++i) {
            correct += run_forced_views(episodes[i], config, backends, seeds[i], n).correct ? 1 : 0;
        }
        out.push_back({n, episodes.empty() ? 0.0 : static_cast<double>(correct) / episodes.size()});
    }
    return out;
}

StrategySummary summarize(std::span<const RunRecord> records) {
    if (records.empty()) throw ValidationError("summarize: no records");
    StrategySummary s;
    s.strategy = records.front().strategy;
    for (const auto& r : records) {
        if (r.strategy != s.strategy) throw ValidationError("summarize: records mix strategies");
        s.accuracy += r.correct ? 1.0 : 0.0;
        s.mean_pseudo_tokens += static_cast<double>(r.budget.pseudo_tokens);
        s.mean_wm_calls += r.budget.wm_calls;
        s.mean_imagined_frames += r.budget.imagined_frames;
        s.mean_wall_time += r.budget.wall_time;
    }
    s.episodes = static_cast<int>(records.size());
    const double n = s.episodes;
    s.accuracy /= n;
    s.mean_pseudo_tokens /= n;
    s.mean_wm_calls /= n;
    s.mean_imagined_frames /= n;
    s.mean_wall_time /= n;
    return s;
}

std::vector<FrontierPoint> frontier(std::span<const StrategySummary> summaries) {
    std::vector<FrontierPoint> out;
    for (const auto& s : summaries) out.push_back({s.strategy, s.mean_pseudo_tokens, s.accuracy, s.mean_wall_time});
    std::stable_sort(out.begin(), out.end(),
                     [](const FrontierPoint& a, const FrontierPoint& b) { return a.mean_pseudo_tokens < b.mean_pseudo_tokens; });
    return out;
}

std::vector<TagBreakdown> error_breakdown(std::span<const RunRecord> imagination, std::span<const RunRecord> none) {
    const auto by_id = index_by_id(none);
    std::vector<TagBreakdown> rows;
    for (auto tag : kAllTags) rows.push_back({tag});
    std::array<int, 4> invoked{}, right_none{}, right_imag{};
    for (const auto& r : imagination) {
        const auto it = by_id.find(r.episode_id);
        if (it == by_id.end()) throw ValidationError("error_breakdown: no baseline record for '" + r.episode_id + "'");
        const auto t = static_cast<std::size_t>(r.error_tag);
        ++rows[t].episodes;
        invoked[t] += r.invoked_world_model() ? 1 : 0;
        right_imag[t] += r.correct ? 1 : 0;
        right_none[t] += it->second->correct ? 1 : 0;
    }
    for (std::size_t t = 0; t < rows.size(); ++t) {
        const int n = rows[t].episodes;
        if (n == 0) continue;
        rows[t].invocation_rate = static_cast<double>(invoked[t]) / n;
        rows[t].accuracy_none = static_cast<double>(right_none[t]) / n;
        rows[t].accuracy_imagination = static_cast<double>(right_imag[t]) / n;
        rows[t].gain = rows[t].accuracy_imagination - rows[t].accuracy_none;
    }
    return rows;
}

GatingQuality gating_quality(std::span<const RunRecord> records) {
    GatingQuality q;
    for (const auto& r : records) {
        const bool inv = r.invoked_world_model();
        q.needed += r.needs_imagination ? 1 : 0;
        q.invoked += inv ? 1 : 0;
        q.invoked_and_needed += (inv && r.needs_imagination) ? 1 : 0;
    }
    if (q.needed > 0) q.recall = static_cast<double>(q.invoked_and_needed) / q.needed;
    if (q.invoked > 0) q.precision = static_cast<double>(q.invoked_and_needed) / q.invoked;
    return q;
}

std::string cases_csv(const CaseStats& stats) {
    std::ostringstream out;
    out << "case,count,fraction\n";
    for (auto c : {CaseLabel::helpful, CaseLabel::misleading, CaseLabel::unnecessary, CaseLabel::harmful}) {
        out << to_string(c) << ',' << stats.counts[static_cast<std::size_t>(c)] << ',' << fmt(stats.fraction(c)) << '\n';
    }
    return out.str();
}

std::string curve_csv(std::span<const CurvePoint> curve) {
    std::ostringstream out;
    out << "views,accuracy\n";
    for (const auto& p : curve) out << p.views << ',' << fmt(p.accuracy) << '\n';
    return out.str();
}

std::string frontier_csv(std::span<const FrontierPoint> points) {
    std::ostringstream out;
    out << "strategy,mean_pseudo_tokens,accuracy,mean_wall_time\n";
    for (const auto& p : points) {
        out << to_string(p.strategy) << ',' << fmt(p.mean_pseudo_tokens) << ',' << fmt(p.accuracy) << ','
            << fmt(p.mean_wall_time) << '\n';
    }
    return out.str();
}

std::string breakdown_csv(std::span<const TagBreakdown> rows) {
    std::ostringstream out;
    out << "error_tag,episodes,invocation_rate,accuracy_none,accuracy_imagination,gain\n";
    for (const auto& r : rows) {
        out << to_string(r.tag) << ',' << r.episodes << ',' << fmt(r.invocation_rate) << ',' << fmt(r.accuracy_none)
            << ',' << fmt(r.accuracy_imagination) << ',' << fmt(r.gain) << '\n';
    }
    return out.str();
}

std::string gating_csv(const GatingQuality& q) {
    std::ostringstream out;
    out << "needed,invoked,invoked_and_needed,recall,precision\n";
    out << q.needed << ',' << q.invoked << ',' << q.invoked_and_needed << ','
        << (q.recall ? fmt(*q.recall) : "undefined") << ',' << (q.precision ? fmt(*q.precision) : "undefined") << '\n';
    return out.str();
}

}  // namespace avic
