#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "avic/analysis.hpp"
#include "avic/config.hpp"

namespace avic {

enum class LogLevel : std::uint8_t { error, warn, info, debug };
// Read from AVIC_LOG_LEVEL; defaults to warn.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

struct Suite {
    std::vector<Episode> episodes;
    std::vector<std::uint64_t> seeds;  // run seed per episode
};

std::uint64_t episode_run_seed(std::uint64_t run_seed, std::size_t index);

// Episode i uses category categories[i mod n] and truth slot (i / n) mod K,
// so every category sees every answer position equally often.
Suite generate_suite(const ExperimentConfig& config);
Suite load_suite(const std::string& path, std::uint64_t run_seed);
void write_suite(const std::string& path, const Suite& suite, const ExperimentConfig& config);

// Owns the backends selected by the config. AVIC_REMOTE_ENDPOINT forces the
// remote adapters.
class BackendSet {
public:
    explicit BackendSet(const ExperimentConfig& config);
    BackendSet(const BackendSet&) = delete;
    BackendSet& operator=(const BackendSet&) = delete;
    Backends backends();

private:
    std::unique_ptr<PolicyBackend> policy_;
    std::unique_ptr<VerifierBackend> verifier_;
    std::unique_ptr<AnswerBackend> answerer_;
    WorldModel world_;
};

// Runs one strategy over the suite with up to `workers` threads. Records come
// back in suite order whatever the scheduling.
std::vector<RunRecord> run_suite(StrategyKind strategy, const Suite& suite, const ExperimentConfig& config,
                                 Backends& backends, int workers);

Json log_header(const ExperimentConfig& config, StrategyKind strategy);

struct RunLog {
    Json header;
    std::vector<RunRecord> records;
};

// Writes the JSONL log and a `.timing.jsonl` sidecar with wall times.
void write_log(const std::string& path, const Json& header, const std::vector<RunRecord>& records);
// Throws SchemaError for a missing header, a corrupt line, a schema version
// mismatch or duplicate episode ids.
RunLog read_log(const std::string& path);

struct CategoryRow {
    StrategyKind strategy = StrategyKind::none;
    std::array<std::optional<double>, 5> accuracy{};  // EgoM, ObjM, EgoAct, Goal, Pers
    double average = 0.0;                              // macro mean over present categories
    double tokens_k = 0.0;
    double avg_wm = 0.0;
};

CategoryRow category_row(std::span<const RunRecord> records);
// Table with columns strategy, EgoM, ObjM, EgoAct, Goal, Pers, Avg., # Token (K), Avg. WM.
std::string report_csv(std::span<const CategoryRow> rows);

struct ExecuteResult {
    std::vector<std::string> log_paths;
    std::vector<StrategySummary> summaries;
};

// Generates (or loads) the suite, runs every configured strategy and writes
// <out>/<strategy>.jsonl, timing sidecars and <out>/summary.json.
ExecuteResult execute(const ExperimentConfig& config);

// Writes report.csv plus the analysis CSVs that the logs support.
void report(const std::vector<std::string>& log_paths, const std::string& out_dir);

// Runs none, always_on, gating_only and adaptive and writes every analysis table.
void analyze(const ExperimentConfig& config);

struct NavStrategyResult {
    NavStrategy strategy = NavStrategy::none;
    NavMetrics metrics;
    double mean_wm_calls = 0.0;
    std::vector<NavRecord> records;
};

struct NavSuiteResult {
    std::vector<NavEpisode> episodes;
    std::vector<NavStrategyResult> strategies;
};

std::vector<NavEpisode> generate_nav_suite(const ExperimentConfig& config);
NavSuiteResult run_nav_suite(const ExperimentConfig& config);
std::string nav_metrics_csv(const NavSuiteResult& result);
Json to_json(const NavRecord& record);

}  // namespace avic
