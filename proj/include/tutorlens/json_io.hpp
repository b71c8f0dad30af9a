#pragma once

#include "tutorlens/engine.hpp"
#include "tutorlens/evaluation.hpp"
#include "tutorlens/model.hpp"
#include "tutorlens/strategy.hpp"

#include <nlohmann/json.hpp>

#include <string>

// JSON documents for every persisted or served type. Readers throw
// Error(BadRequest) on shape problems, except configuration readers which
// throw Error(InvalidConfig) for out-of-vocabulary values.
namespace tutorlens::json_io {

using nlohmann::json;

// Pretty-printed, invalid UTF-8 replaced, trailing newline.
std::string dump(const json& j);
json parse(std::string_view text);  // Error(BadRequest)

json to_json(const Transcript& t);
Transcript transcript_from_json(const json& j);

json to_json(const ProviderConfig& cfg);
// Missing keys keep the values from base.
ProviderConfig provider_config_from_json(const json& j, const ProviderConfig& base = {});

json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const json& j);
// Accepts an array of slugs or the string "all".
std::vector<StrategyId> strategy_ids_from_json(const json& j);

json to_json(const ClassificationRecord& r);
ClassificationRecord record_from_json(const json& j);

json to_json(const ClassificationRun& run);
ClassificationRun run_from_json(const json& j);

json to_json(const PatternsSummary& p);
json to_json(const StrategyMetrics& m);
json to_json(const MetricsReport& r);
json to_json(const Strategy& s);
json reference_metrics_json();

}  // namespace tutorlens::json_io
