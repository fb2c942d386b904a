#include "avic/remote.hpp"

#include "avic/serialize.hpp"
#include "httplib.h"

namespace avic {

void RemoteConfig::validate() const {
    if (endpoint.empty()) throw ValidationError("remote.endpoint: must be set");
    if (timeout_ms <= 0) throw ValidationError("remote.timeout_ms: must be positive");
    if (max_in_flight < 1) throw ValidationError("remote.max_in_flight: must be at least 1");
    if (retries < 0) throw ValidationError("remote.retries: must be non-negative");
}

RemoteSession::RemoteSession(RemoteConfig config)
    : config_(std::move(config)), slots_(std::make_unique<std::counting_semaphore<>>(config_.max_in_flight)) {
    config_.validate();
}

RemoteSession::~RemoteSession() = default;

std::string RemoteSession::post(const std::string& path, const std::string& body) {
    slots_->acquire();
    struct Release {
        std::counting_semaphore<>* s;
        ~Release() { s->release(); }
    } release{slots_.get()};

    httplib::Client client(config_.endpoint);
    const auto secs = config_.timeout_ms / 1000;
    const auto usecs = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(path, body, "application/json");
    if (!res) throw BackendError(path + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw BackendError(path + ": HTTP " + std::to_string(res->status));
    }
    return res->body;
}

std::string remote_request(const Episode& episode, std::span<const Observation> frames, std::uint64_t seed,
                           const ImaginedTrajectory* trajectory) {
    Json doc;
    doc["episode_id"] = episode.id;
    doc["question"] = episode.question_text;
    doc["choices"] = episode.choices;
    doc["seed"] = seed;
    Json fs = Json::array();
    for (const auto& f : frames) fs.push_back(to_json(f, false));
    doc["frames"] = std::move(fs);
    if (trajectory) {
        Json t;
        t["actions"] = to_json(trajectory->plan);
        Json tf = Json::array();
        for (const auto& f : trajectory->frames) tf.push_back(to_json(f, false));
        t["frames"] = std::move(tf);
        doc["trajectory"] = std::move(t);
    }
    return doc.dump();
}

RemotePolicy::RemotePolicy(std::shared_ptr<RemoteSession> session, PlanLimits limits)
    : session_(std::move(session)), limits_(limits) {}

PolicySample RemotePolicy::sample(const Episode& episode, std::span<const Observation> start_frames,
                                  std::uint64_t seed) {
    const auto body = remote_request(episode, start_frames, seed);
    std::string last_error;
    for (int attempt = 0; attempt <= session_->config().retries; ++attempt) {
        try {
            return parse_policy_output(session_->post("/policy", body), {session_->config().strict, limits_});
        } catch (const WireError& e) {
            last_error = e.what();
        } catch (const BackendError& e) {
            last_error = e.what();
        }
    }
    PolicySample fallback;
    fallback.decision = Decision::skip;
    fallback.reason = "fallback: " + last_error;
    fallback.fallback = true;
    return fallback;
}

RemoteVerifier::RemoteVerifier(std::shared_ptr<RemoteSession> session) : session_(std::move(session)) {}

int RemoteVerifier::score(const Episode& episode, std::span<const Observation> start_frames,
                          const ImaginedTrajectory& trajectory, std::uint64_t seed) {
    const auto body = remote_request(episode, start_frames, seed, &trajectory);
    std::string last_error;
    for (int attempt = 0; attempt <= session_->config().retries; ++attempt) {
        try {
            return parse_verifier_output(session_->post("/verify", body));
        } catch (const WireError& e) {
            last_error = e.what();
        } catch (const BackendError& e) {
            last_error = e.what();
        }
    }
    throw BackendError("verifier: " + last_error);
}

RemoteAnswerer::RemoteAnswerer(std::shared_ptr<RemoteSession> session) : session_(std::move(session)) {}

AnswerDistribution RemoteAnswerer::answer(const Episode& episode, std::span<const Observation> frames,
                                          std::uint64_t seed) {
    const auto body = remote_request(episode, frames, seed);
    std::string last_error;
    for (int attempt = 0; attempt <= session_->config().retries; ++attempt) {
        try {
            return parse_answer_output(session_->post("/answer", body), episode.num_choices());
        } catch (const WireError& e) {
            last_error = e.what();
        } catch (const BackendError& e) {
            last_error = e.what();
        }
    }
    throw BackendError("answerer: " + last_error);
}

}  // namespace avic
