#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "avic/harness.hpp"
#include "doctest.h"

using namespace avic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("avic_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

ExperimentConfig small_config(int episodes) {
    ExperimentConfig cfg = parse_config(Json::parse(R"({"run_seed": 11})"));
    cfg.suite.episodes = episodes;
    cfg.noise.p_drop = 0.2;
    cfg.noise.p_label = 0.1;
    cfg.strategies = {StrategyKind::none, StrategyKind::always_on, StrategyKind::adaptive};
    return cfg;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("suites rotate categories and truth slots") {
    const ExperimentConfig cfg = small_config(100);
    const Suite s = generate_suite(cfg);
    REQUIRE(s.episodes.size() == 100);
    std::map<QuestionCategory, std::map<int, int>> slots;
    for (std::size_t i = 0; i < s.episodes.size(); ++i) {
        CHECK(s.episodes[i].category == kAllCategories[i % 5]);
        CHECK(s.seeds[i] == episode_run_seed(cfg.run_seed, i));
        ++slots[s.episodes[i].category][s.episodes[i].truth_index];
    }
    for (const auto& [cat, counts] : slots) {
        for (const auto& [slot, n] : counts) CHECK(n == 5);
    }
    const Suite again = generate_suite(cfg);
    for (std::size_t i = 0; i < s.episodes.size(); ++i) CHECK(again.episodes[i].id == s.episodes[i].id);
}

TEST_CASE("suite files round trip") {
    const ExperimentConfig cfg = small_config(20);
    const Suite s = generate_suite(cfg);
    const fs::path dir = scratch("suite");
    write_suite((dir / "episodes.jsonl").string(), s, cfg);
    const Suite back = load_suite((dir / "episodes.jsonl").string(), cfg.run_seed);
    REQUIRE(back.episodes.size() == s.episodes.size());
    for (std::size_t i = 0; i < s.episodes.size(); ++i) {
        CHECK(to_json(back.episodes[i]).dump() == to_json(s.episodes[i]).dump());
        CHECK(back.seeds[i] == s.seeds[i]);
    }
    spit(dir / "broken.jsonl", "{\"type\": \"suite_header\"}\n{oops\n");
    CHECK_THROWS(load_suite((dir / "broken.jsonl").string(), 1));
}

TEST_CASE("logs are byte-identical across worker counts") {
    ExperimentConfig cfg = small_config(60);
    cfg.workers = 1;
    cfg.output_dir = scratch("w1").string();
    execute(cfg);
    ExperimentConfig wide = cfg;
    wide.workers = 8;
    wide.output_dir = scratch("w8").string();
    execute(wide);
    for (const char* name : {"none.jsonl", "always_on.jsonl", "adaptive.jsonl", "summary.json"}) {
        CAPTURE(name);
        const std::string a = slurp(fs::path(cfg.output_dir) / name);
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(fs::path(wide.output_dir) / name));
    }
    CHECK(fs::exists(fs::path(cfg.output_dir) / "adaptive.timing.jsonl"));
}

TEST_CASE("logs read back and summaries match the records") {
    ExperimentConfig cfg = small_config(40);
    cfg.output_dir = scratch("readback").string();
    const ExecuteResult res = execute(cfg);
    REQUIRE(res.log_paths.size() == 3);
    const Json summary = Json::parse(slurp(fs::path(cfg.output_dir) / "summary.json"));
    for (std::size_t k = 0; k < res.log_paths.size(); ++k) {
        const RunLog log = read_log(res.log_paths[k]);
        CHECK(log.header["type"] == "header");
        CHECK(log.records.size() == 40);
        int right = 0;
        for (const auto& r : log.records) right += r.correct ? 1 : 0;
        const double acc = right / 40.0;
        CHECK(summary["strategies"][k]["accuracy"].get<double>() == acc);
        CHECK(res.summaries[k].accuracy == acc);
    }
    const auto lines = split_lines(slurp(res.log_paths[0]));
    CHECK(Json::parse(lines[1]).contains("config_digest"));
    CHECK_FALSE(Json::parse(lines[1]).contains("wall_time"));
}

TEST_CASE("read_log rejects damaged logs") {
    ExperimentConfig cfg = small_config(10);
    cfg.strategies = {StrategyKind::none};
    cfg.output_dir = scratch("damaged").string();
    const auto path = execute(cfg).log_paths.at(0);
    const auto lines = split_lines(slurp(path));
    const fs::path dir(cfg.output_dir);

    auto write_variant = [&](const std::string& name, std::vector<std::string> ls) {
        std::string text;
        for (const auto& l : ls) text += l + "\n";
        spit(dir / name, text);
        return (dir / name).string();
    };

    auto corrupt = lines;
    corrupt[3] = corrupt[3].substr(0, corrupt[3].size() / 2);
    try {
        read_log(write_variant("corrupt.jsonl", corrupt));
        FAIL("corrupt line accepted");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find(":4") != std::string::npos);
    }

    auto headless = lines;
    headless.erase(headless.begin());
    CHECK_THROWS_AS(read_log(write_variant("headless.jsonl", headless)), SchemaError);

    auto future = lines;
    Json h = Json::parse(future[0]);
    h["schema_version"] = kSchemaVersion + 1;
    future[0] = h.dump();
    CHECK_THROWS_AS(read_log(write_variant("future.jsonl", future)), SchemaError);
    CHECK_THROWS_AS(report({path, (dir / "future.jsonl").string()}, dir.string()), SchemaError);

    auto dup = lines;
    dup.push_back(lines[1]);
    CHECK_THROWS_AS(read_log(write_variant("dup.jsonl", dup)), SchemaError);

    auto inconsistent = lines;
    Json r = Json::parse(inconsistent[1]);
    r["correct"] = !r["correct"].get<bool>();
    inconsistent[1] = r.dump();
    CHECK_THROWS_AS(read_log(write_variant("inconsistent.jsonl", inconsistent)), SchemaError);
}

TEST_CASE("report averages categories with equal weight") {
    ExperimentConfig cfg = small_config(50);
    cfg.output_dir = scratch("report").string();
    const ExecuteResult res = execute(cfg);
    report(res.log_paths, cfg.output_dir);
    const auto lines = split_lines(slurp(fs::path(cfg.output_dir) / "report.csv"));
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "strategy,EgoM,ObjM,EgoAct,Goal,Pers,Avg.,# Token (K),Avg. WM");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> cells;
        std::stringstream row(lines[i]);
        for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 9);
        double sum = 0.0;
        for (int c = 1; c <= 5; ++c) sum += std::stod(cells[static_cast<std::size_t>(c)]);
        CHECK(std::stod(cells[6]) == doctest::Approx(sum / 5.0).epsilon(1e-4));
    }
    for (const char* f : {"frontier.csv", "cases.csv", "cases_adaptive.csv", "error_breakdown.csv", "gating.csv",
                          "analysis_summary.json"}) {
        CHECK(fs::exists(fs::path(cfg.output_dir) / f));
    }
    const Json a = Json::parse(slurp(fs::path(cfg.output_dir) / "analysis_summary.json"));
    const auto& ub = a["upper_bound"];
    CHECK(ub["upper_bound"].get<double>() >= ub["none"].get<double>());
    CHECK(ub["upper_bound"].get<double>() >= ub["always_on"].get<double>());
}

TEST_CASE("category row skips absent categories in the macro mean") {
    std::vector<RunRecord> rs(3);
    rs[0].episode_id = "a";
    rs[0].category = QuestionCategory::EgoM;
    rs[0].correct = true;
    rs[1].episode_id = "b";
    rs[1].category = QuestionCategory::Pers;
    rs[1].correct = false;
    rs[2].episode_id = "c";
    rs[2].category = QuestionCategory::Pers;
    rs[2].correct = true;
    const CategoryRow row = category_row(rs);
    CHECK(row.average == 0.75);
    CHECK_FALSE(row.accuracy[static_cast<std::size_t>(QuestionCategory::Goal)].has_value());
    CHECK(report_csv(std::vector{row}).find("none,100.0000,,,,50.0000,75.0000") != std::string::npos);
}

TEST_CASE("nav suites are deterministic") {
    ExperimentConfig cfg = small_config(1);
    cfg.nav.episodes = 8;
    cfg.workers = 1;
    const NavSuiteResult a = run_nav_suite(cfg);
    cfg.workers = 4;
    const NavSuiteResult b = run_nav_suite(cfg);
    CHECK(nav_metrics_csv(a) == nav_metrics_csv(b));
    CHECK(nav_metrics_csv(a).rfind("strategy,NE,OSR,SR,SPL", 0) == 0);
    REQUIRE(a.strategies.size() == 2);
    for (std::size_t i = 0; i < a.strategies[0].records.size(); ++i) {
        CHECK(to_json(a.strategies[0].records[i]).dump() == to_json(b.strategies[0].records[i]).dump());
    }
}
