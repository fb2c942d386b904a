#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "avic/geometry.hpp"
#include "avic/tasks.hpp"
#include "avic/world.hpp"

namespace avic {

// Raised by a backend that could not produce a usable result.
class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Decision : std::uint8_t { skip, call_wm };
std::string_view to_string(Decision d);

struct PolicySample {
    Decision decision = Decision::skip;
    ActionPlan plan;  // empty iff skip
    std::string reason;
    bool fallback = false;  // set when a remote policy could not be parsed

    friend bool operator==(const PolicySample&, const PolicySample&) = default;
};

// Throws ValidationError if a skip sample carries actions.
void validate_sample(const PolicySample& sample);

struct AnswerDistribution {
    std::vector<double> scores;

    static AnswerDistribution uniform(int k);
    static AnswerDistribution one_hot(int k, int index);

    // Lowest index wins ties.
    int argmax() const;
    bool normalized(double tol = 1e-9) const;
};

struct SyntheticPolicyConfig {
    double q_gate = 0.9;
    double q_plan = 0.9;
    double sample_jitter = 0.25;  // chance a sample nudges one entry by one unit
    PlanLimits limits;
};

struct SyntheticAnswerConfig {
    double competence = 0.8;
};

struct SyntheticVerifierConfig {
    int noise_amplitude = 1;
};

class PolicyBackend {
public:
    virtual ~PolicyBackend() = default;
    virtual PolicySample sample(const Episode& episode, std::span<const Observation> start_frames,
                                std::uint64_t seed) = 0;
};

class VerifierBackend {
public:
    virtual ~VerifierBackend() = default;
    // Usefulness of the trajectory's imagined views, 0 (useless) to 9.
    virtual int score(const Episode& episode, std::span<const Observation> start_frames,
                      const ImaginedTrajectory& trajectory, std::uint64_t seed) = 0;
};

class AnswerBackend {
public:
    virtual ~AnswerBackend() = default;
    virtual AnswerDistribution answer(const Episode& episode, std::span<const Observation> frames,
                                      std::uint64_t seed) = 0;
};

class SyntheticPolicy final : public PolicyBackend {
public:
    explicit SyntheticPolicy(SyntheticPolicyConfig config = {});
    PolicySample sample(const Episode& episode, std::span<const Observation> start_frames,
                        std::uint64_t seed) override;
    const SyntheticPolicyConfig& config() const { return config_; }

private:
    SyntheticPolicyConfig config_;
};

class SyntheticVerifier final : public VerifierBackend {
public:
    explicit SyntheticVerifier(SyntheticVerifierConfig config = {});
    int score(const Episode& episode, std::span<const Observation> start_frames, const ImaginedTrajectory& trajectory,
              std::uint64_t seed) override;

private:
    SyntheticVerifierConfig config_;
};

class SyntheticAnswerer final : public AnswerBackend {
public:
    explicit SyntheticAnswerer(SyntheticAnswerConfig config = {});
    AnswerDistribution answer(const Episode& episode, std::span<const Observation> frames,
                              std::uint64_t seed) override;

private:
    SyntheticAnswerConfig config_;
};

// Fraction of the evidence missing from `start_frames` that the trajectory
// frames supply; 0 when nothing was missing.
double revealed_fraction(const Episode& episode, std::span<const Observation> start_frames,
                         std::span<const Observation> trajectory_frames);

// Verifier score before additive noise.
int verifier_base_score(const Episode& episode, std::span<const Observation> start_frames,
                        std::span<const Observation> trajectory_frames);

// The goal-directed plan a well-calibrated policy proposes, or an
// exploratory turn when every viewpoint requirement is already met.
ActionPlan intended_plan(const Episode& episode, std::span<const Observation> start_frames,
                         const PlanLimits& limits = {});

}  // namespace avic
