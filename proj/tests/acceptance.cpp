// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "avic/harness.hpp"
#include "avic/remote.hpp"
#include "avic/rng.hpp"
#include "avic/wire.hpp"
#include "httplib.h"
#include "nav_fixture.hpp"

using namespace avic;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and thresholds.
constexpr double kExact = 0.0;
constexpr int kOracleTriples = 1000;
constexpr int kPerfectEpisodes = 500;
constexpr double kPerfectAccuracy = 1.0;
constexpr double kPerfectMaxWm = 1.0;
constexpr double kWmRatio = 0.10;
constexpr double kUnnecessaryMin = 0.50;
constexpr int kBeamFrames = 15;
constexpr int kBeamLo = 9;
constexpr int kBeamHi = 16;
constexpr double kFractionSumTol = 1e-12;
constexpr double kNavTol = 1e-12;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string config_path(const std::string& name) { return std::string(AVIC_SOURCE_DIR) + "/configs/" + name; }
std::string golden_path(const std::string& name) { return std::string(AVIC_SOURCE_DIR) + "/tests/golden/" + name; }

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<Json> jsonl(const std::string& path) {
    std::ifstream in(path);
    std::vector<Json> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(Json::parse(line));
    }
    return out;
}

double accuracy(const std::vector<RunRecord>& rs) {
    int n = 0;
    for (const auto& r : rs) n += r.correct ? 1 : 0;
    return rs.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(rs.size());
}

double mean_wm(const std::vector<RunRecord>& rs) {
    double s = 0.0;
    for (const auto& r : rs) s += r.budget.wm_calls;
    return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
}

std::vector<RunRecord> run(StrategyKind k, const Suite& suite, const ExperimentConfig& cfg) {
    BackendSet set(cfg);
    Backends b = set.backends();
    return run_suite(k, suite, cfg, b, std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------

Outcome geometry_exactness() {
    const ActionPlan left{{{ActionKind::turn_left, 10}}};
    const double h = simulate_plan(Pose{}, left).back().heading();
    Pose p;
    for (int i = 0; i < 4; ++i) p = apply_unit(p, ActionKind::move_forward);
    const double moved = p.x();
    Pose q(1.25, -3.5, 27.0);
    const Pose back = apply_unit(apply_unit(q, ActionKind::turn_left), ActionKind::turn_right);
    const bool ok = h == 90.0 && moved == 1.0 && p.y() == kExact && back == q;
    return {ok, "heading after 10 left turns " + fmt("%.17g", h) + ", 4 steps " + fmt("%.17g m", moved) +
                    ", left-right identity " + (back == q ? "exact" : "broken")};
}

bool same_frame(const Observation& a, const Observation& b) {
    return a.viewpoint == b.viewpoint && a.percepts == b.percepts && a.corrupted_ids == b.corrupted_ids;
}

Outcome oracle_equivalence() {
    Stream rng(derive_seed(2024, "acceptance-oracle"));
    const ActionKind kinds[] = {ActionKind::move_forward, ActionKind::turn_left, ActionKind::turn_right};
    int mismatches = 0;
    int frames = 0;
    for (int t = 0; t < kOracleTriples; ++t) {
        const Scene scene = generate_scene(SceneGenConfig{}, rng.next_u64());
        const Pose start(rng.uniform(1.0, 9.0), rng.uniform(1.0, 9.0), 9.0 * static_cast<double>(rng.uniform_int(0, 39)));
        ActionPlan plan;
        const auto n = rng.uniform_int(1, 6);
        for (int i = 0; i < n; ++i) {
            ActionKind k = kinds[rng.index(3)];
            if (!plan.entries.empty() && opposing_turns(plan.entries.back().kind, k)) k = ActionKind::move_forward;
            plan.entries.push_back({k, static_cast<int>(rng.uniform_int(1, 20))});
        }
        const Sensor sensor{};
        const auto traj = imagine(scene, start, plan, sensor, NoiseModel{}, rng.next_u64());
        const auto poses = simulate_plan(start, plan);
        if (traj.frames.size() != poses.size() || !traj.corruption_log.empty()) {
            ++mismatches;
            continue;
        }
        for (std::size_t i = 0; i < poses.size(); ++i) {
            ++frames;
            if (!traj.frames[i].imagined || !same_frame(traj.frames[i], render(scene, poses[i], sensor))) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(kOracleTriples) + " triples, " + std::to_string(frames) + " frames, " +
                                 std::to_string(mismatches) + " mismatches"};
}

Outcome perfect_pipeline() {
    ExperimentConfig cfg = parse_config(Json::parse(R"({"run_seed": 7})"));
    cfg.suite.episodes = kPerfectEpisodes;
    cfg.backend.policy = {1.0, 1.0, 0.0, {}};
    cfg.backend.answerer.competence = 1.0;
    cfg.backend.verifier.noise_amplitude = 0;
    cfg.noise = {};
    const Suite suite = generate_suite(cfg);
    const auto recs = run(StrategyKind::adaptive, suite, cfg);
    int wasted = 0;
    for (const auto& r : recs) {
        if (!r.needs_imagination && r.budget.wm_calls != 0) ++wasted;
    }
    const double acc = accuracy(recs);
    const double wm = mean_wm(recs);
    const bool ok = recs.size() == kPerfectEpisodes && acc >= kPerfectAccuracy && wm <= kPerfectMaxWm && wasted == 0;
    return {ok, "accuracy " + fmt("%.4f", acc) + ", avg wm " + fmt("%.3f", wm) + ", WM calls on sufficient episodes: " +
                    std::to_string(wasted)};
}

struct PairCheck {
    bool ok = true;
    std::string detail;
};

PairCheck check_pair(const std::string& name, const ExperimentConfig& cfg) {
    const Suite suite = generate_suite(cfg);
    const auto none = run(StrategyKind::none, suite, cfg);
    const auto always = run(StrategyKind::always_on, suite, cfg);
    const UpperBound ub = upper_bound(none, always);
    int union_hits = 0;
    bool labels_match = ub.correct.size() == none.size();
    for (std::size_t i = 0; i < none.size() && labels_match; ++i) {
        const bool u = none[i].correct || always[i].correct;
        union_hits += u ? 1 : 0;
        labels_match = ub.correct[i] == u && ub.episode_ids[i] == none[i].episode_id;
    }
    const double an = accuracy(none), aa = accuracy(always);
    const double union_acc = static_cast<double>(union_hits) / static_cast<double>(none.size());
    const bool ok = labels_match && ub.accuracy == union_acc && ub.accuracy >= std::max(an, aa);
    const bool strict = an < aa && aa < ub.accuracy;
    return {ok, name + " " + fmt("%.3f", an) + "/" + fmt("%.3f", aa) + "/" + fmt("%.3f", ub.accuracy) +
                    (strict ? " (strict order)" : " (order not strict)")};
}

Outcome upper_bound_invariant() {
    std::string detail = "none/always_on/UB, union exact and UB >= max on each pair:";
    bool ok = true;
    for (const char* name : {"efficiency.json", "noisy_curve.json", "high_competence.json"}) {
        const PairCheck c = check_pair(name, load_config(config_path(name)));
        ok = ok && c.ok;
        detail += " " + c.detail;
    }
    return {ok, detail};
}

Outcome efficiency_dominance() {
    const ExperimentConfig cfg = load_config(config_path("efficiency.json"));
    const Suite suite = generate_suite(cfg);
    const auto none = run(StrategyKind::none, suite, cfg);
    const auto always = run(StrategyKind::always_on, suite, cfg);
    const auto adaptive = run(StrategyKind::adaptive, suite, cfg);
    double always_frames = 0.0;
    for (const auto& r : always) always_frames += r.budget.imagined_frames;
    always_frames /= static_cast<double>(always.size());
    const double wm = mean_wm(adaptive);
    const bool ok = suite.episodes.size() == 1000 && wm <= kWmRatio * always_frames && accuracy(adaptive) >= accuracy(none);
    return {ok, "adaptive wm " + fmt("%.3f", wm) + " vs always_on frames " + fmt("%.2f", always_frames) +
                    "; accuracy adaptive " + fmt("%.3f", accuracy(adaptive)) + " vs none " + fmt("%.3f", accuracy(none))};
}

std::vector<CurvePoint> curve_for(const ExperimentConfig& cfg) {
    const Suite suite = generate_suite(cfg);
    BackendSet set(cfg);
    Backends b = set.backends();
    return view_curve(suite.episodes, suite.seeds, cfg.controller, b, cfg.forced_views);
}

double at(const std::vector<CurvePoint>& c, int views) {
    for (const auto& p : c) {
        if (p.views == views) return p.accuracy;
    }
    return -1.0;
}

Outcome view_curve_shape() {
    const ExperimentConfig noisy = load_config(config_path("noisy_curve.json"));
    ExperimentConfig clean = noisy;
    clean.noise = {};
    const auto cn = curve_for(noisy);
    const auto cc = curve_for(clean);
    const bool degrades = at(cn, 2) >= 0.0 && at(cn, 8) >= 0.0 && at(cn, 8) <= at(cn, 2);
    bool monotone = cc.size() >= 2;
    for (std::size_t i = 1; i < cc.size(); ++i) monotone = monotone && cc[i].accuracy >= cc[i - 1].accuracy;
    std::string detail = "noisy:";
    for (const auto& p : cn) detail += " " + std::to_string(p.views) + "->" + fmt("%.3f", p.accuracy);
    detail += "; clean:";
    for (const auto& p : cc) detail += " " + std::to_string(p.views) + "->" + fmt("%.3f", p.accuracy);
    return {degrades && monotone, detail};
}

Outcome case_taxonomy() {
    bool sums = true;
    Stream rng(derive_seed(3, "acceptance-cases"));
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<RunRecord> none, imag;
        const int n = 8 + static_cast<int>(rng.index(40));
        for (int i = 0; i < n; ++i) {
            RunRecord a, b;
            a.episode_id = b.episode_id = "e" + std::to_string(i);
            // the first eight records enumerate every combination
            const int bits = i < 8 ? i : static_cast<int>(rng.index(8));
            a.correct = bits & 1;
            b.correct = bits & 2;
            b.budget.wm_calls = (bits & 4) ? 1 : 0;
            none.push_back(a);
            imag.push_back(b);
        }
        const CaseStats s = case_stats(none, imag);
        double total = 0.0;
        for (auto c : {CaseLabel::helpful, CaseLabel::misleading, CaseLabel::unnecessary, CaseLabel::harmful}) {
            total += s.fraction(c);
        }
        sums = sums && std::abs(total - 1.0) <= kFractionSumTol;
    }
    const ExperimentConfig cfg = load_config(config_path("high_competence.json"));
    const Suite suite = generate_suite(cfg);
    const CaseStats s = case_stats(run(StrategyKind::none, suite, cfg), run(StrategyKind::always_on, suite, cfg));
    const double u = s.fraction(CaseLabel::unnecessary);
    return {sums && u > kUnnecessaryMin,
            std::string("fractions sum to 1: ") + (sums ? "yes" : "no") + "; high-competence unnecessary " +
                fmt("%.3f", u) + ", harmful " + fmt("%.3f", s.fraction(CaseLabel::harmful)) + ", helpful " +
                fmt("%.3f", s.fraction(CaseLabel::helpful)) + ", misleading " +
                fmt("%.3f", s.fraction(CaseLabel::misleading))};
}

Outcome beam_budget() {
    const ExperimentConfig cfg = load_config(config_path("efficiency.json"));
    const int closed = cfg.controller.beam.frames_per_search();
    const Suite suite = generate_suite(cfg);
    const auto recs = run(StrategyKind::always_on, suite, cfg);
    int off = 0;
    for (const auto& r : recs) off += (r.budget.wm_calls != kBeamFrames || r.budget.imagined_frames != kBeamFrames) ? 1 : 0;
    const bool ok = closed == kBeamFrames && off == 0 && closed >= kBeamLo && closed <= kBeamHi;
    return {ok, "closed form " + std::to_string(closed) + ", episodes off the closed form: " + std::to_string(off) + " of " +
                    std::to_string(recs.size())};
}

bool ordered(const NavMetrics& m) { return m.spl <= m.sr && m.sr <= m.osr; }

Outcome navigation() {
    const auto f = fixture::hand_fixture();
    const NavMetrics m = nav_metrics(f.records, f.episodes);
    const NavMetrics a = nav_metrics({f.records[0]}, f.episodes);
    const NavMetrics b = nav_metrics({f.records[1]}, f.episodes);
    const NavMetrics c = nav_metrics({f.records[2]}, f.episodes);
    const bool fixture_ok = a.ne == 5.0 && b.spl == 0.5 && c.osr == 1.0 && c.sr == 0.0 &&
                            std::abs(m.ne - 11.0 / 3.0) <= kNavTol && std::abs(m.sr - 1.0 / 3.0) <= kNavTol &&
                            std::abs(m.osr - 2.0 / 3.0) <= kNavTol && std::abs(m.spl - 0.5 / 3.0) <= kNavTol;
    bool order_ok = ordered(m);
    const NavSuiteResult res = run_nav_suite(load_config(config_path("nav.json")));
    const NavMetrics* none = nullptr;
    const NavMetrics* adaptive = nullptr;
    std::string detail = "fixture NE " + fmt("%.4f", m.ne) + " SR " + fmt("%.4f", m.sr) + " OSR " + fmt("%.4f", m.osr) +
                         " SPL " + fmt("%.4f", m.spl) + ";";
    for (const auto& s : res.strategies) {
        order_ok = order_ok && ordered(s.metrics);
        if (s.strategy == NavStrategy::none) none = &s.metrics;
        if (s.strategy == NavStrategy::adaptive) adaptive = &s.metrics;
        detail += " " + std::string(to_string(s.strategy)) + " SR " + fmt("%.3f", s.metrics.sr) + " SPL " +
                  fmt("%.3f", s.metrics.spl);
    }
    const bool gain = none && adaptive && res.episodes.size() == 50 && adaptive->sr >= none->sr;
    return {fixture_ok && order_ok && gain, detail};
}

// Local policy server that replays fixed outputs.
class ReplayServer {
public:
    ReplayServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        server_.Post("/policy", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu_);
            res.set_content(body_, "application/json");
        });
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ReplayServer() {
        server_.stop();
        thread_.join();
    }
    void set(std::string body) {
        std::lock_guard lock(mu_);
        body_ = std::move(body);
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::mutex mu_;
    std::string body_;
    int port_ = 0;
    std::thread thread_;
};

Outcome determinism_and_protocol() {
    ExperimentConfig cfg = load_config(config_path("efficiency.json"));
    const fs::path base = fs::temp_directory_path() / "avic_acceptance";
    fs::remove_all(base);
    cfg.workers = 1;
    cfg.output_dir = (base / "w1").string();
    const auto one = execute(cfg);
    cfg.workers = 8;
    cfg.output_dir = (base / "w8").string();
    const auto eight = execute(cfg);
    bool identical = one.log_paths.size() == eight.log_paths.size() && !one.log_paths.empty();
    for (std::size_t i = 0; identical && i < one.log_paths.size(); ++i) {
        identical = slurp(one.log_paths[i]) == slurp(eight.log_paths[i]);
    }
    fs::remove_all(base);

    int golden_fail = 0;
    int golden_total = 0;
    for (const char* name : {"policy_call.json", "policy_skip.json"}) {
        ++golden_total;
        std::string text = slurp(golden_path(name));
        while (!text.empty() && text.back() == '\n') text.pop_back();
        if (serialize_policy_output(parse_policy_output(text)) != text) ++golden_fail;
    }
    for (const auto& c : jsonl(golden_path("verifier_cases.jsonl"))) {
        ++golden_total;
        try {
            const int v = parse_verifier_output(c["input"].get<std::string>());
            if (!c.contains("expect") || c["expect"].get<int>() != v) ++golden_fail;
        } catch (const WireError& e) {
            if (!c.contains("code") || c["code"].get<std::string>() != to_string(e.code())) ++golden_fail;
        }
    }

    ReplayServer server;
    RemoteConfig rc;
    rc.endpoint = server.endpoint();
    rc.timeout_ms = 5000;
    auto session = std::make_shared<RemoteSession>(rc);
    RemotePolicy policy(session);
    SyntheticVerifier verifier({0});
    SyntheticAnswerer answerer({1.0});
    Backends backends{policy, verifier, answerer, {}};
    Episode ep;
    for (std::uint64_t s = 1; ep.id.empty(); ++s) {
        try {
            ep = generate_episode(generate_scene(SceneGenConfig{}, s), QuestionCategory::Goal, s, Sensor{}, {}, 0);
        } catch (const GenerationError&) {
        }
    }
    int malformed = 0;
    int fallback_fail = 0;
    for (const auto& c : jsonl(golden_path("policy_errors.jsonl"))) {
        ++malformed;
        const std::string input = c["input"];
        std::string code = "ok";
        try {
            parse_policy_output(input);
        } catch (const WireError& e) {
            code = std::string(to_string(e.code()));
        }
        server.set(input);
        const RunRecord r = run_adaptive(ep, ControllerConfig{}, backends, 5);
        const bool all_flagged = std::all_of(r.samples.begin(), r.samples.end(), [](const PolicySample& s) {
            return s.fallback && s.decision == Decision::skip && s.plan.empty();
        });
        if (code != c["code"].get<std::string>() || !all_flagged || r.vote != Decision::skip || r.budget.wm_calls != 0) {
            ++fallback_fail;
        }
    }
    const bool ok = identical && golden_fail == 0 && fallback_fail == 0 && malformed > 0;
    return {ok, std::string("workers 1 vs 8 logs ") + (identical ? "byte-identical" : "DIFFER") + "; golden " +
                    std::to_string(golden_total - golden_fail) + "/" + std::to_string(golden_total) +
                    "; malformed policy outputs falling back to skip " + std::to_string(malformed - fallback_fail) +
                    "/" + std::to_string(malformed)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"geometry exactness", geometry_exactness},
        {"zero-noise imagination equals rendering", oracle_equivalence},
        {"perfect pipeline soundness", perfect_pipeline},
        {"upper bound invariant", upper_bound_invariant},
        {"efficiency dominance", efficiency_dominance},
        {"view curve shape", view_curve_shape},
        {"case taxonomy", case_taxonomy},
        {"always-on budget", beam_budget},
        {"navigation metrics", navigation},
        {"determinism and wire protocol", determinism_and_protocol},
    };
    int failed = 0;
    const auto began = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
    std::printf("%zu/%zu criteria passed in %.1f s\n", criteria.size() - failed, criteria.size(), secs);
    return failed == 0 ? 0 : 1;
}
