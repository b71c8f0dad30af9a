#pragma once

#include "tutorlens/error.hpp"
#include "tutorlens/gateway.hpp"
#include "tutorlens/model.hpp"
#include "tutorlens/strategy.hpp"
#include "tutorlens/timestamp.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tutorlens {

struct RunConfig {
    std::vector<StrategyId> strategy_ids{kAllStrategies.begin(), kAllStrategies.end()};
    std::size_t context_k = kDefaultContextK;
    ProviderConfig provider;
    std::string run_id;
    Timestamp created_at{};

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Non-empty, duplicate-free strategy list, valid provider, safe run_id.
// Throws Error(InvalidConfig).
void validate(const RunConfig& cfg);

// "run-YYYYMMDDTHHMMSS-xxxxxxxx"
std::string generate_run_id();

struct RecordError {
    ErrorCode code = ErrorCode::UnparseableLabel;
    std::string message;

    friend bool operator==(const RecordError&, const RecordError&) = default;
};

// Exactly one of label / error is set.
struct ClassificationRecord {
    std::string transcript_id;
    std::size_t utterance_index = 0;
    StrategyId strategy_id = StrategyId::GivingEffectivePraise;
    std::optional<StrategyLabel> label;
    std::string rationale;
    std::string prompt_hash;
    int attempts = 1;
    std::optional<RecordError> error;

    friend bool operator==(const ClassificationRecord&, const ClassificationRecord&) = default;
};

struct ClassificationRun {
    RunConfig config;
    std::string transcript_id;
    std::vector<ClassificationRecord> records;  // by (utterance_index, catalog order)
    Timestamp completed_at{};

    friend bool operator==(const ClassificationRun&, const ClassificationRun&) = default;
};

// Persistence hook for finished runs; storage::Store implements it.
class RunSink {
public:
    virtual ~RunSink() = default;
    virtual void put_run(const ClassificationRun& run) = 0;
};

// Builds the prompt, calls the provider and parses the verdict. An
// unparseable or out-of-domain reply gets one corrective re-ask; provider
// and parse failures end up in record.error. Throws only for caller
// mistakes (IndexOutOfRange, TargetNotTutor).
ClassificationRecord classify_utterance(Provider& provider, const Strategy& s, const Transcript& t, std::size_t idx,
                                        const RunConfig& cfg);

// One record per (tutor turn x selected strategy), dispatched on up to
// provider.max_in_flight worker threads. When a sink is given the run is
// written exactly once before returning; failures raise StorageFailed.
ClassificationRun classify_transcript(Provider& provider, const Transcript& t, const RunConfig& cfg,
                                      RunSink* sink = nullptr);

struct StrategyPattern {
    StrategyId strategy_id = StrategyId::GivingEffectivePraise;
    std::array<std::size_t, 3> counts{};  // indexed by label_slot
    std::size_t labeled_total = 0;
    std::size_t error_total = 0;
    std::optional<std::array<double, 3>> proportions;  // absent when labeled_total == 0
};

struct PatternsSummary {
    std::size_t run_count = 0;
    std::vector<StrategyPattern> per_strategy;  // all five, catalog order
};

PatternsSummary patterns_summary(const std::vector<ClassificationRun>& runs);

}  // namespace tutorlens
