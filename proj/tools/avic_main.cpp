#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "avic/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out;
};

avic::ExperimentConfig resolve(const Globals& g) {
    avic::ExperimentConfig cfg;
    if (!g.config_path.empty()) {
        cfg = avic::load_config(g.config_path);
    } else if (g.seed) {
        cfg = avic::parse_config(avic::Json{{"run_seed", *g.seed}});
    } else {
        throw avic::ConfigSchemaError("run_seed", "pass --config or --seed");
    }
    if (g.seed) cfg.run_seed = *g.seed;
    if (g.workers) cfg.workers = *g.workers;
    if (!g.out.empty()) cfg.output_dir = g.out;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive visual imagination control: episode generation, runs, analysis and reports"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "experiment config (JSON)");
    app.add_option("--seed", g.seed, "override run_seed");
    app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output directory");

    auto* gen = app.add_subcommand("gen", "write the episode suite as JSONL");
    auto* run = app.add_subcommand("run", "run the configured strategies and write run logs");
    std::vector<std::string> strategies;
    run->add_option("--strategy", strategies, "strategies to run instead of the configured ones");
    auto* analyze = app.add_subcommand("analyze", "cases, view curve, frontier, error breakdown and gating quality");
    auto* nav = app.add_subcommand("nav", "run the navigation suite and write NE/OSR/SR/SPL");
    auto* rep = app.add_subcommand("report", "tables from existing run logs");
    std::vector<std::string> logs;
    rep->add_option("logs", logs, "run log files")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*rep) {
            avic::report(logs, g.out.empty() ? "." : g.out);
            return 0;
        }
        avic::ExperimentConfig cfg = resolve(g);
        const fs::path out(cfg.output_dir);
        if (*gen) {
            const auto suite = avic::generate_suite(cfg);
            avic::write_suite((out / "episodes.jsonl").string(), suite, cfg);
            std::cout << "wrote " << suite.episodes.size() << " episodes to " << (out / "episodes.jsonl").string() << '\n';
        } else if (*run) {
            if (!strategies.empty()) {
                cfg.strategies.clear();
                for (const auto& s : strategies) {
                    const auto k = avic::parse_strategy(s);
                    if (!k) throw avic::ConfigSchemaError("strategies", "unknown strategy '" + s + "'");
                    cfg.strategies.push_back(*k);
                }
                cfg.validate();
            }
            const auto result = avic::execute(cfg);
            for (const auto& s : result.summaries) {
                std::cout << avic::to_string(s.strategy) << ": accuracy " << s.accuracy << ", avg wm "
                          << s.mean_wm_calls << ", tokens " << s.mean_pseudo_tokens << '\n';
            }
        } else if (*analyze) {
            avic::analyze(cfg);
            std::cout << "analysis written to " << out.string() << '\n';
        } else if (*nav) {
            const auto result = avic::run_nav_suite(cfg);
            fs::create_directories(out);
            std::ofstream(out / "nav_metrics.csv") << avic::nav_metrics_csv(result);
            for (const auto& s : result.strategies) {
                std::ofstream f(out / ("nav_" + std::string(avic::to_string(s.strategy)) + ".jsonl"));
                for (const auto& r : s.records) f << avic::dump_line(avic::to_json(r)) << '\n';
            }
            std::cout << avic::nav_metrics_csv(result);
        }
    } catch (const avic::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const avic::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
