#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "avic/agents.hpp"
#include "avic/controller.hpp"
#include "avic/nav.hpp"
#include "avic/remote.hpp"
#include "avic/serialize.hpp"
#include "avic/tasks.hpp"
#include "avic/world.hpp"

namespace avic {

// Base of all configuration failures. `field` is the dotted path of the
// offending entry, empty for file-level problems.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class ConfigFileError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Wrong type, unknown field or missing mandatory field.
class ConfigSchemaError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ConfigRangeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct SuiteConfig {
    int episodes = 100;
    std::vector<QuestionCategory> categories{std::begin(kAllCategories), std::end(kAllCategories)};
    std::string path;  // load episodes from a JSONL file instead of generating
    SceneGenConfig scene;
    Sensor sensor;
    EpisodeGenConfig episode;
};

struct BackendConfig {
    enum class Kind : std::uint8_t { synthetic, remote };
    Kind kind = Kind::synthetic;
    SyntheticPolicyConfig policy;
    SyntheticAnswerConfig answerer;
    SyntheticVerifierConfig verifier;
    RemoteConfig remote;
};

struct NavSuiteConfig {
    int episodes = 50;
    NavGenConfig graph;
    double q_gate = 0.9;
    Sensor sensor{90.0, 3.0, true};
    NoiseModel noise;
    std::vector<NavStrategy> strategies{NavStrategy::none, NavStrategy::adaptive};
};

struct ExperimentConfig {
    std::uint64_t run_seed = 0;
    bool strict = true;
    SuiteConfig suite;
    NoiseModel noise;
    BackendConfig backend;
    std::vector<StrategyKind> strategies{StrategyKind::none, StrategyKind::adaptive};
    ControllerConfig controller;
    std::vector<int> forced_views{0, 1, 2, 4, 8};
    NavSuiteConfig nav;
    std::string output_dir = "runs";
    int workers = 1;

    // Throws ConfigRangeError naming the field.
    void validate() const;
};

ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

// Canonical form with every field present. `execution` adds output_dir and
// workers, which never influence results.
Json config_to_json(const ExperimentConfig& config, bool execution = true);

}  // namespace avic
