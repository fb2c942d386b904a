#include "avic/harness.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "avic/rng.hpp"

namespace avic {

namespace fs = std::filesystem;

LogLevel log_level() {
    const char* env = std::getenv("AVIC_LOG_LEVEL");
    if (!env) return LogLevel::warn;
    const std::string v = env;
    if (v == "error") return LogLevel::error;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
}

void log(LogLevel level, const std::string& message) {
    static std::mutex mu;
    if (level > log_level()) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard lock(mu);
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << '\n';
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

Json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
    try {
        return Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path + ":" + std::to_string(lineno) + ": corrupt line: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::uint64_t episode_run_seed(std::uint64_t run_seed, std::size_t index) {
    return derive_seed(run_seed, "run", {static_cast<std::uint64_t>(index)});
}

Suite generate_suite(const ExperimentConfig& config) {
    const auto n = static_cast<std::size_t>(config.suite.episodes);
    const auto& cats = config.suite.categories;
    Suite suite;
    suite.episodes.resize(n);
    suite.seeds.resize(n);
    parallel_for(n, config.workers, [&](std::size_t i) {
        const QuestionCategory cat = cats[i % cats.size()];
        const int slot = static_cast<int>((i / cats.size()) % static_cast<std::size_t>(config.suite.episode.num_choices));
        for (std::uint64_t attempt = 0; attempt < 200; ++attempt) {
            try {
                const Scene scene =
                    generate_scene(config.suite.scene, derive_seed(config.run_seed, "scene", {i, attempt}));
                suite.episodes[i] = generate_episode(scene, cat, derive_seed(config.run_seed, "episode", {i, attempt}),
                                                     config.suite.sensor, config.suite.episode, slot);
                suite.seeds[i] = episode_run_seed(config.run_seed, i);
                return;
            } catch (const GenerationError&) {
            }
        }
        throw GenerationError("could not generate episode " + std::to_string(i) + " (" +
                              std::string(to_string(cat)) + ")");
    });
    return suite;
}

void write_suite(const std::string& path, const Suite& suite, const ExperimentConfig& config) {
    std::ostringstream out;
    Json header{{"type", "suite_header"},
                {"schema_version", kSchemaVersion},
                {"artifact_version", kArtifactVersion},
                {"config", config_to_json(config, false)}};
    out << dump_line(header) << '\n';
    for (std::size_t i = 0; i < suite.episodes.size(); ++i) {
        Json line{{"type", "episode"}, {"run_seed", suite.seeds[i]}, {"episode", to_json(suite.episodes[i])}};
        out << dump_line(line) << '\n';
    }
    write_text(path, out.str());
}

Suite load_suite(const std::string& path, std::uint64_t run_seed) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw SchemaError(path + ": empty suite file");
    const Json header = parse_line(lines[0], path, 1);
    if (header.value("type", "") != "suite_header") throw SchemaError(path + ": missing suite header");
    if (header.value("schema_version", -1) != kSchemaVersion) throw SchemaError(path + ": unsupported schema version");
    Suite suite;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const Json j = parse_line(lines[i], path, i + 1);
        if (j.value("type", "") != "episode") throw SchemaError(path + ":" + std::to_string(i + 1) + ": not an episode");
        suite.episodes.push_back(episode_from_json(j.at("episode")));
        suite.seeds.push_back(j.contains("run_seed") ? j["run_seed"].get<std::uint64_t>()
                                                     : episode_run_seed(run_seed, i - 1));
    }
    return suite;
}

BackendSet::BackendSet(const ExperimentConfig& config) : world_{config.noise} {
    RemoteConfig remote = config.backend.remote;
    bool use_remote = config.backend.kind == BackendConfig::Kind::remote;
    if (const char* env = std::getenv("AVIC_REMOTE_ENDPOINT"); env && *env) {
        remote.endpoint = env;
        use_remote = true;
    }
    if (use_remote) {
        auto session = std::make_shared<RemoteSession>(remote);
        policy_ = std::make_unique<RemotePolicy>(session, config.controller.limits);
        verifier_ = std::make_unique<RemoteVerifier>(session);
        answerer_ = std::make_unique<RemoteAnswerer>(session);
        log(LogLevel::info, "using remote backends at " + remote.endpoint);
    } else {
        SyntheticPolicyConfig p = config.backend.policy;
        p.limits = config.controller.limits;
        policy_ = std::make_unique<SyntheticPolicy>(p);
        verifier_ = std::make_unique<SyntheticVerifier>(config.backend.verifier);
        answerer_ = std::make_unique<SyntheticAnswerer>(config.backend.answerer);
    }
}

Backends BackendSet::backends() { return Backends{*policy_, *verifier_, *answerer_, world_}; }

std::vector<RunRecord> run_suite(StrategyKind strategy, const Suite& suite, const ExperimentConfig& config,
                                 Backends& backends, int workers) {
    std::vector<RunRecord> out(suite.episodes.size());
    parallel_for(out.size(), workers, [&](std::size_t i) {
        out[i] = run_strategy(strategy, suite.episodes[i], config.controller, backends, suite.seeds[i]);
        if (out[i].fallback) log(LogLevel::warn, out[i].episode_id + ": fallback (" + out[i].fallback_reason + ")");
    });
    return out;
}

Json log_header(const ExperimentConfig& config, StrategyKind strategy) {
    return Json{{"type", "header"},
                {"schema_version", kSchemaVersion},
                {"artifact_version", kArtifactVersion},
                {"strategy", std::string(to_string(strategy))},
                {"config", config_to_json(config, false)}};
}

void write_log(const std::string& path, const Json& header, const std::vector<RunRecord>& records) {
    const std::string digest = hex64(hash_tag(header.at("config").dump()));
    std::ostringstream body;
    std::ostringstream timing;
    body << dump_line(header) << '\n';
    for (const auto& r : records) {
        Json j = to_json(r);
        j["config_digest"] = digest;
        body << dump_line(j) << '\n';
        timing << dump_line(Json{{"episode_id", r.episode_id}, {"wall_time", r.budget.wall_time}}) << '\n';
    }
    write_text(path, body.str());
    fs::path side(path);
    side.replace_extension(".timing.jsonl");
    write_text(side, timing.str());
}

RunLog read_log(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw SchemaError(path + ": empty log");
    RunLog log;
    log.header = parse_line(lines[0], path, 1);
    if (!log.header.is_object() || log.header.value("type", "") != "header") {
        throw SchemaError(path + ": first line is not a header record");
    }
    if (log.header.value("schema_version", -1) != kSchemaVersion) {
        throw SchemaError(path + ": schema version " + log.header["schema_version"].dump() + " is not supported");
    }
    std::set<std::string> ids;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const Json j = parse_line(lines[i], path, i + 1);
        RunRecord r;
        try {
            r = record_from_json(j);
        } catch (const SchemaError& e) {
            throw SchemaError(path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
        if (!ids.insert(r.episode_id).second) throw SchemaError(path + ": duplicate episode id '" + r.episode_id + "'");
        log.records.push_back(std::move(r));
    }

    fs::path side(path);
    side.replace_extension(".timing.jsonl");
    if (fs::exists(side)) {
        std::map<std::string, double> wall;
        for (const auto& line : read_lines(side.string())) {
            const Json j = Json::parse(line, nullptr, false);
            if (j.is_object() && j.contains("episode_id")) wall[j["episode_id"].get<std::string>()] = j.value("wall_time", 0.0);
        }
        for (auto& r : log.records) {
            if (auto it = wall.find(r.episode_id); it != wall.end()) r.budget.wall_time = it->second;
        }
    }
    return log;
}

CategoryRow category_row(std::span<const RunRecord> records) {
    CategoryRow row;
    const StrategySummary s = summarize(records);
    row.strategy = s.strategy;
    row.tokens_k = s.mean_pseudo_tokens / 1000.0;
    row.avg_wm = s.mean_wm_calls;
    std::array<int, 5> n{}, right{};
    for (const auto& r : records) {
        const auto c = static_cast<std::size_t>(r.category);
        ++n[c];
        right[c] += r.correct ? 1 : 0;
    }
    double sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < 5; ++c) {
        if (n[c] == 0) continue;
        row.accuracy[c] = static_cast<double>(right[c]) / n[c];
        sum += *row.accuracy[c];
        ++present;
    }
    row.average = present > 0 ? sum / present : 0.0;
    return row;
}

std::string report_csv(std::span<const CategoryRow> rows) {
    std::ostringstream out;
    out << "strategy";
    for (auto c : kAllCategories) out << ',' << to_string(c);
    out << ",Avg.,# Token (K),Avg. WM\n";
    for (const auto& r : rows) {
        out << to_string(r.strategy);
        for (auto c : kAllCategories) {
            const auto& a = r.accuracy[static_cast<std::size_t>(c)];
            out << ',' << (a ? fmt(100.0 * *a) : "");
        }
        out << ',' << fmt(100.0 * r.average) << ',' << fmt(r.tokens_k) << ',' << fmt(r.avg_wm) << '\n';
    }
    return out.str();
}

namespace {

Json summary_json(const StrategySummary& s) {
    return Json{{"strategy", std::string(to_string(s.strategy))},
                {"episodes", s.episodes},
                {"accuracy", s.accuracy},
                {"mean_pseudo_tokens", s.mean_pseudo_tokens},
                {"mean_wm_calls", s.mean_wm_calls},
                {"mean_imagined_frames", s.mean_imagined_frames}};
}

Json per_category_json(std::span<const RunRecord> records) {
    const CategoryRow row = category_row(records);
    Json j = Json::object();
    for (auto c : kAllCategories) j[std::string(to_string(c))] = optional_json(row.accuracy[static_cast<std::size_t>(c)]);
    j["Avg."] = row.average;
    return j;
}

const std::vector<RunRecord>* find_strategy(const std::map<StrategyKind, std::vector<RunRecord>>& runs,
                                            StrategyKind s) {
    const auto it = runs.find(s);
    return it == runs.end() ? nullptr : &it->second;
}

// Analysis tables supported by the strategies present in `runs`.
Json write_analysis(const std::map<StrategyKind, std::vector<RunRecord>>& runs, const fs::path& out) {
    Json summary = Json::object();
    summary["case_pairing"] =
        "per episode: strategy none vs always_on (cases.csv) and none vs adaptive (cases_adaptive.csv); "
        "harmful = none correct, imagination invoked and wrong; skipped runs count as unnecessary when none is correct";

    std::vector<StrategySummary> sums;
    for (const auto& [kind, recs] : runs) sums.push_back(summarize(recs));
    const auto points = frontier(sums);
    write_text(out / "frontier.csv", frontier_csv(points));

    const auto* none = find_strategy(runs, StrategyKind::none);
    const auto* always = find_strategy(runs, StrategyKind::always_on);
    const auto* adaptive = find_strategy(runs, StrategyKind::adaptive);
    if (none && always) {
        const CaseStats cs = case_stats(*none, *always);
        write_text(out / "cases.csv", cases_csv(cs));
        summary["cases"] = Json{{"helpful", cs.fraction(CaseLabel::helpful)},
                                {"misleading", cs.fraction(CaseLabel::misleading)},
                                {"unnecessary", cs.fraction(CaseLabel::unnecessary)},
                                {"harmful", cs.fraction(CaseLabel::harmful)},
                                {"unnecessary_folded", cs.unnecessary_folded()}};
        const UpperBound ub = upper_bound(*none, *always);
        summary["upper_bound"] = Json{{"none", summarize(*none).accuracy},
                                      {"always_on", summarize(*always).accuracy},
                                      {"upper_bound", ub.accuracy}};
    }
    if (none && adaptive) {
        const CaseStats cs = case_stats(*none, *adaptive);
        write_text(out / "cases_adaptive.csv", cases_csv(cs));
        const auto rows = error_breakdown(*adaptive, *none);
        write_text(out / "error_breakdown.csv", breakdown_csv(rows));
    }
    if (adaptive) {
        const GatingQuality q = gating_quality(*adaptive);
        write_text(out / "gating.csv", gating_csv(q));
        summary["gating"] = Json{{"recall", optional_json(q.recall)}, {"precision", optional_json(q.precision)}};
    }
    return summary;
}

}  // namespace

ExecuteResult execute(const ExperimentConfig& config) {
    const fs::path out(config.output_dir);
    fs::create_directories(out);
    const Suite suite = config.suite.path.empty() ? generate_suite(config) : load_suite(config.suite.path, config.run_seed);
    log(LogLevel::info, "suite ready: " + std::to_string(suite.episodes.size()) + " episodes");
    BackendSet set(config);
    Backends backends = set.backends();

    ExecuteResult result;
    Json summary{{"schema_version", kSchemaVersion}, {"artifact_version", kArtifactVersion}, {"strategies", Json::array()}};
    for (auto strategy : config.strategies) {
        const auto records = run_suite(strategy, suite, config, backends, config.workers);
        const std::string path = (out / (std::string(to_string(strategy)) + ".jsonl")).string();
        write_log(path, log_header(config, strategy), records);
        result.log_paths.push_back(path);
        const StrategySummary s = summarize(records);
        result.summaries.push_back(s);
        Json sj = summary_json(s);
        sj["per_category"] = per_category_json(records);
        summary["strategies"].push_back(std::move(sj));
        log(LogLevel::info, std::string(to_string(strategy)) + ": accuracy " + fmt(s.accuracy));
    }
    write_text(out / "summary.json", summary.dump(2) + "\n");
    return result;
}

void report(const std::vector<std::string>& log_paths, const std::string& out_dir) {
    if (log_paths.empty()) throw ValidationError("report needs at least one run log");
    std::map<StrategyKind, std::vector<RunRecord>> runs;
    std::vector<CategoryRow> rows;
    std::optional<Json> version;
    for (const auto& path : log_paths) {
        RunLog log = read_log(path);
        const Json v = log.header.at("schema_version");
        if (version && *version != v) throw SchemaError("run logs mix schema versions");
        version = v;
        if (log.records.empty()) continue;
        rows.push_back(category_row(log.records));
        runs[log.records.front().strategy] = std::move(log.records);
    }
    const fs::path out(out_dir);
    write_text(out / "report.csv", report_csv(rows));
    const Json analysis = write_analysis(runs, out);
    write_text(out / "analysis_summary.json", analysis.dump(2) + "\n");
}

void analyze(const ExperimentConfig& config) {
    const fs::path out(config.output_dir);
    const Suite suite = config.suite.path.empty() ? generate_suite(config) : load_suite(config.suite.path, config.run_seed);
    BackendSet set(config);
    Backends backends = set.backends();
    std::map<StrategyKind, std::vector<RunRecord>> runs;
    std::vector<CategoryRow> rows;
    for (auto s : {StrategyKind::none, StrategyKind::always_on, StrategyKind::gating_only, StrategyKind::adaptive}) {
        runs[s] = run_suite(s, suite, config, backends, config.workers);
        write_log((out / (std::string(to_string(s)) + ".jsonl")).string(), log_header(config, s), runs[s]);
        rows.push_back(category_row(runs[s]));
    }
    write_text(out / "report.csv", report_csv(rows));
    Json summary = write_analysis(runs, out);

    std::vector<CurvePoint> curve(config.forced_views.size());
    {
        std::vector<int> counts = config.forced_views;
        std::sort(counts.begin(), counts.end());
        counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
        curve.resize(counts.size());
        parallel_for(counts.size(), config.workers, [&](std::size_t i) {
            curve[i] = view_curve(suite.episodes, suite.seeds, config.controller, backends, {counts[i]}).front();
        });
    }
    write_text(out / "view_curve.csv", curve_csv(curve));
    Json jc = Json::array();
    for (const auto& p : curve) jc.push_back(Json{{"views", p.views}, {"accuracy", p.accuracy}});
    summary["view_curve"] = jc;
    write_text(out / "analysis_summary.json", summary.dump(2) + "\n");
}

std::vector<NavEpisode> generate_nav_suite(const ExperimentConfig& config) {
    std::vector<NavEpisode> out(static_cast<std::size_t>(config.nav.episodes));
    parallel_for(out.size(), config.workers, [&](std::size_t i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            try {
                out[i] = generate_nav_episode(config.nav.graph, derive_seed(config.run_seed, "nav", {i, attempt}));
                return;
            } catch (const GenerationError&) {
                if (attempt >= 100) throw;
            }
        }
    });
    return out;
}

NavSuiteResult run_nav_suite(const ExperimentConfig& config) {
    NavSuiteResult result;
    result.episodes = generate_nav_suite(config);
    for (auto strategy : config.nav.strategies) {
        NavConfig nc;
        nc.strategy = strategy;
        nc.q_gate = config.nav.q_gate;
        nc.sensor = config.nav.sensor;
        nc.noise = config.nav.noise;
        NavStrategyResult sr;
        sr.strategy = strategy;
        sr.records.resize(result.episodes.size());
        parallel_for(result.episodes.size(), config.workers, [&](std::size_t i) {
            sr.records[i] = run_nav(result.episodes[i], nc, derive_seed(config.run_seed, "nav-run", {i}));
        });
        sr.metrics = nav_metrics(sr.records, result.episodes);
        double wm = 0.0;
        for (const auto& r : sr.records) {
            for (int c : r.step_wm_calls) wm += c;
        }
        sr.mean_wm_calls = sr.records.empty() ? 0.0 : wm / static_cast<double>(sr.records.size());
        result.strategies.push_back(std::move(sr));
    }
    return result;
}

std::string nav_metrics_csv(const NavSuiteResult& result) {
    std::ostringstream out;
    out << "strategy,NE,OSR,SR,SPL,episodes,excluded,avg_wm\n";
    for (const auto& s : result.strategies) {
        out << to_string(s.strategy) << ',' << fmt(s.metrics.ne) << ',' << fmt(100.0 * s.metrics.osr) << ','
            << fmt(100.0 * s.metrics.sr) << ',' << fmt(100.0 * s.metrics.spl) << ',' << s.metrics.episodes << ','
            << s.metrics.excluded << ',' << fmt(s.mean_wm_calls) << '\n';
    }
    return out.str();
}

Json to_json(const NavRecord& r) {
    return Json{{"type", "nav_record"},
                {"schema_version", kSchemaVersion},
                {"episode_id", r.episode_id},
                {"visited", r.visited},
                {"stopped", r.stopped},
                {"final_ne", r.final_ne},
                {"step_wm_calls", r.step_wm_calls}};
}

}  // namespace avic
