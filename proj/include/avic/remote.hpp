#pragma once

#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>

#include "avic/agents.hpp"
#include "avic/wire.hpp"

namespace avic {

struct RemoteConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080
    int timeout_ms = 30000;
    int max_in_flight = 4;
    int retries = 1;  // extra attempts after a failed call
    bool strict = true;

    void validate() const;
};

// Shared HTTP plumbing for the three remote roles. Each request opens its own
// connection; the semaphore caps concurrent in-flight calls.
class RemoteSession {
public:
    explicit RemoteSession(RemoteConfig config);
    ~RemoteSession();

    // POSTs `body` to `path`, returning the response body. Throws BackendError
    // on transport failures or non-2xx status.
    std::string post(const std::string& path, const std::string& body);
    const RemoteConfig& config() const { return config_; }

private:
    RemoteConfig config_;
    std::unique_ptr<std::counting_semaphore<>> slots_;
};

// Request body shared by all roles: question, choices and frames without
// internal fields.
std::string remote_request(const Episode& episode, std::span<const Observation> frames, std::uint64_t seed,
                           const ImaginedTrajectory* trajectory = nullptr);

class RemotePolicy final : public PolicyBackend {
public:
    explicit RemotePolicy(std::shared_ptr<RemoteSession> session, PlanLimits limits = {});
    // Unparseable output after the retries becomes a flagged skip sample.
    PolicySample sample(const Episode& episode, std::span<const Observation> start_frames,
                        std::uint64_t seed) override;

private:
    std::shared_ptr<RemoteSession> session_;
    PlanLimits limits_;
};

class RemoteVerifier final : public VerifierBackend {
public:
    explicit RemoteVerifier(std::shared_ptr<RemoteSession> session);
    // Throws BackendError when no valid score arrives.
    int score(const Episode& episode, std::span<const Observation> start_frames, const ImaginedTrajectory& trajectory,
              std::uint64_t seed) override;

private:
    std::shared_ptr<RemoteSession> session_;
};

class RemoteAnswerer final : public AnswerBackend {
public:
    explicit RemoteAnswerer(std::shared_ptr<RemoteSession> session);
    AnswerDistribution answer(const Episode& episode, std::span<const Observation> frames,
                              std::uint64_t seed) override;

private:
    std::shared_ptr<RemoteSession> session_;
};

}  // namespace avic
