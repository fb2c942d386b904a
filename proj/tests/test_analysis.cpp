#include <numeric>

#include "avic/analysis.hpp"
#include "avic/rng.hpp"
#include "doctest.h"

using namespace avic;

namespace {

RunRecord rec(const std::string& id, bool correct, int wm = 0, bool needs = false, ErrorTag tag = ErrorTag::VD) {
    RunRecord r;
    r.episode_id = id;
    r.correct = correct;
    r.budget.wm_calls = wm;
    r.needs_imagination = needs;
    r.error_tag = tag;
    return r;
}

std::vector<Episode> generated(int n, std::uint64_t base) {
    std::vector<Episode> out;
    for (std::uint64_t s = base; static_cast<int>(out.size()) < n; ++s) {
        try {
            const auto cat = kAllCategories[s % std::size(kAllCategories)];
            out.push_back(generate_episode(generate_scene(SceneGenConfig{}, s), cat, s, Sensor{}, {}, int(s % 4)));
        } catch (const GenerationError&) {
        }
    }
    return out;
}

}  // namespace

TEST_CASE("all eight correctness and invocation combinations") {
    CHECK(classify_case(true, true, true) == CaseLabel::unnecessary);
    CHECK(classify_case(true, true, false) == CaseLabel::unnecessary);
    CHECK(classify_case(true, false, false) == CaseLabel::unnecessary);
    CHECK(classify_case(true, false, true) == CaseLabel::harmful);
    CHECK(classify_case(false, true, true) == CaseLabel::helpful);
    CHECK(classify_case(false, true, false) == CaseLabel::helpful);
    CHECK(classify_case(false, false, true) == CaseLabel::misleading);
    CHECK(classify_case(false, false, false) == CaseLabel::misleading);
    CHECK(to_string(CaseLabel::harmful) == "harmful");
}

TEST_CASE("record pairing") {
    CHECK(classify_case(rec("a", false), rec("a", true, 1)) == CaseLabel::helpful);
    CHECK_THROWS_AS(classify_case(rec("a", false), rec("b", true)), ValidationError);
    const std::vector<RunRecord> none = {rec("a", true), rec("b", false)};
    const std::vector<RunRecord> imag = {rec("b", true, 3), rec("a", true, 0)};
    const CaseStats s = case_stats(none, imag);
    CHECK(s.total == 2);
    CHECK(s.fraction(CaseLabel::helpful) == 0.5);
    CHECK(s.fraction(CaseLabel::unnecessary) == 0.5);
    CHECK_THROWS_AS(case_stats(none, std::vector<RunRecord>{rec("a", true)}), ValidationError);
    CHECK_THROWS_AS(case_stats(none, std::vector<RunRecord>{rec("a", true), rec("z", true)}), ValidationError);
}

TEST_CASE("property: case fractions sum to one") {
    Stream rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.index(60));
        std::vector<RunRecord> none, imag;
        for (int i = 0; i < n; ++i) {
            const std::string id = "e" + std::to_string(i);
            none.push_back(rec(id, rng.bernoulli(0.5)));
            imag.push_back(rec(id, rng.bernoulli(0.5), rng.bernoulli(0.5) ? 1 : 0));
        }
        const CaseStats s = case_stats(none, imag);
        CHECK(std::accumulate(s.counts.begin(), s.counts.end(), 0) == n);
        double sum = 0.0;
        for (auto c : {CaseLabel::helpful, CaseLabel::misleading, CaseLabel::unnecessary, CaseLabel::harmful}) {
            sum += s.fraction(c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.unnecessary_folded() ==
              doctest::Approx(s.fraction(CaseLabel::unnecessary) + s.fraction(CaseLabel::harmful)));
    }
}

TEST_CASE("gating quality with undefined denominators") {
    const GatingQuality empty = gating_quality(std::vector<RunRecord>{rec("a", true)});
    CHECK_FALSE(empty.recall.has_value());
    CHECK_FALSE(empty.precision.has_value());
    CHECK(gating_csv(empty).find("undefined") != std::string::npos);

    const std::vector<RunRecord> rs = {rec("a", true, 1, true), rec("b", true, 0, true), rec("c", true, 2, false),
                                       rec("d", true, 0, false)};
    const GatingQuality q = gating_quality(rs);
    CHECK(q.needed == 2);
    CHECK(q.invoked == 2);
    CHECK(*q.recall == 0.5);
    CHECK(*q.precision == 0.5);
}

TEST_CASE("error breakdown covers every record") {
    std::vector<RunRecord> none, imag;
    const ErrorTag tags[] = {ErrorTag::VD, ErrorTag::LO, ErrorTag::AC, ErrorTag::LO};
    for (int i = 0; i < 12; ++i) {
        const std::string id = "e" + std::to_string(i);
        none.push_back(rec(id, i % 3 == 0, 0, false, tags[i % 4]));
        imag.push_back(rec(id, i % 2 == 0, i % 2, false, tags[i % 4]));
    }
    const auto rows = error_breakdown(imag, none);
    int total = 0;
    for (const auto& r : rows) {
        total += r.episodes;
        CHECK(r.gain == doctest::Approx(r.accuracy_imagination - r.accuracy_none));
    }
    CHECK(total == 12);
    CHECK(breakdown_csv(rows).find("gain") != std::string::npos);
}

TEST_CASE("summaries and frontier") {
    std::vector<RunRecord> rs = {rec("a", true, 2), rec("b", false, 0)};
    rs[0].budget.pseudo_tokens = 100;
    rs[1].budget.pseudo_tokens = 300;
    const StrategySummary s = summarize(rs);
    CHECK(s.accuracy == 0.5);
    CHECK(s.mean_pseudo_tokens == 200.0);
    CHECK(s.mean_wm_calls == 1.0);
    CHECK_THROWS_AS(summarize(std::vector<RunRecord>{}), ValidationError);
    rs[1].strategy = StrategyKind::adaptive;
    CHECK_THROWS_AS(summarize(rs), ValidationError);

    StrategySummary cheap, dear;
    cheap.strategy = StrategyKind::none;
    cheap.mean_pseudo_tokens = 10;
    dear.strategy = StrategyKind::always_on;
    dear.mean_pseudo_tokens = 1000;
    const auto f = frontier(std::vector<StrategySummary>{dear, cheap});
    REQUIRE(f.size() == 2);
    CHECK(f[0].strategy == StrategyKind::none);
    CHECK(frontier_csv(f).rfind("strategy", 0) == 0);
}

TEST_CASE("zero forced views reproduce the none strategy") {
    const auto eps = generated(60, 30);
    std::vector<std::uint64_t> seeds;
    for (const auto& e : eps) seeds.push_back(derive_seed(1, "run", {e.seed}));
    SyntheticPolicy policy({0.9, 0.9, 0.25, {}});
    SyntheticVerifier verifier({1});
    SyntheticAnswerer answerer({0.8});
    NoiseModel noise;
    noise.p_drop = 0.2;
    Backends backends{policy, verifier, answerer, {noise}};
    const auto curve = view_curve(eps, seeds, ControllerConfig{}, backends, {0, 2, 4});
    REQUIRE(curve.size() == 3);
    int hits = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        hits += run_none(eps[i], ControllerConfig{}, backends, seeds[i]).correct ? 1 : 0;
    }
    CHECK(curve[0].views == 0);
    CHECK(curve[0].accuracy == static_cast<double>(hits) / static_cast<double>(eps.size()));
    CHECK(curve_csv(curve).rfind("views,accuracy\n", 0) == 0);
}
