#pragma once

#include <string>

#include "avic/controller.hpp"
#include "avic/tasks.hpp"
#include "avic/world.hpp"
#include "json.hpp"

namespace avic {

// Version of every JSON/JSONL document this library writes.
inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

using Json = nlohmann::ordered_json;

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Json to_json(const Pose& pose);
Pose pose_from_json(const Json& j);

Json to_json(const ActionPlan& plan);  // wire form: [{"type": ..., "value": ...}]
ActionPlan plan_from_json(const Json& j);

Json to_json(const Scene& scene);
Scene scene_from_json(const Json& j);

// Observation JSON. `internal` adds source ids and corruption flags, which
// never leave the process on the remote wire.
Json to_json(const Observation& obs, bool internal = true);
Observation observation_from_json(const Json& j);

Json to_json(const Episode& episode);
Episode episode_from_json(const Json& j);

Json to_json(const PolicySample& sample);
PolicySample sample_from_json(const Json& j);

Json to_json(const RunRecord& record);
RunRecord record_from_json(const Json& j);

// Compact single-line dump used for JSONL.
std::string dump_line(const Json& j);

}  // namespace avic
