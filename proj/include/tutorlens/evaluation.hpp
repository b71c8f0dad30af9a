#pragma once

#include "tutorlens/engine.hpp"
#include "tutorlens/model.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tutorlens {

// counts[gold][predicted], both indexed by label_slot (-1, 0, 1).
struct ConfusionMatrix3 {
    std::array<std::array<std::size_t, 3>, 3> counts{};

    [[nodiscard]] std::size_t at(StrategyLabel gold, StrategyLabel predicted) const {
        return counts[label_slot(gold)][label_slot(predicted)];
    }
    [[nodiscard]] std::size_t total() const;
    [[nodiscard]] std::size_t support(StrategyLabel gold) const;

    friend bool operator==(const ConfusionMatrix3&, const ConfusionMatrix3&) = default;
};

using LabelPair = std::pair<StrategyLabel, StrategyLabel>;  // (gold, predicted)

ConfusionMatrix3 confusion_matrix(const std::vector<LabelPair>& pairs);

// One-vs-rest per class; absent when the denominator is zero.
std::optional<double> class_recall(const ConfusionMatrix3& m, StrategyLabel c);
std::optional<double> class_tnr(const ConfusionMatrix3& m, StrategyLabel c);

// The two classes the macro averages run over: strategy used (0 or 1).
inline constexpr std::array<StrategyLabel, 2> kMacroClasses{StrategyLabel::Undesired, StrategyLabel::Desired};

struct ClassMetrics {
    std::optional<double> tnr;
    std::optional<double> recall;
};

struct StrategyMetrics {
    StrategyId strategy_id = StrategyId::GivingEffectivePraise;
    std::optional<double> tnr;
    std::optional<double> recall;
    std::array<std::size_t, 3> support_per_class{};  // gold counts by label_slot
    std::array<ClassMetrics, 3> per_class{};          // every class, for transparency
    ConfusionMatrix3 matrix;
};

// tnr / recall: mean of the defined per-class values over classes {0, 1}.
StrategyMetrics strategy_metrics(const ConfusionMatrix3& m, StrategyId sid);

struct MetricsReport {
    std::string transcript_id;
    std::vector<StrategyMetrics> per_strategy;  // catalog order
    std::size_t matched_pairs = 0;
    std::size_t unmatched_gold = 0;
    std::size_t unmatched_predictions = 0;
};

// Matches on (utterance_index, strategy). Gold for other transcripts is
// ignored; TranscriptMismatch when gold is non-empty but none of it belongs
// to run.transcript_id. Annotators are combined by strict majority; ties
// drop the key into unmatched_gold. Error records never match.
MetricsReport evaluate_run(const std::vector<GoldAnnotation>& gold, const ClassificationRun& run);

// `strategy,tnr,recall,support_-1,support_0,support_1`; absent metrics are
// empty fields.
std::string metrics_report_csv(const MetricsReport& report);

struct ReferenceMetric {
    StrategyId strategy_id;
    double tnr;
    double recall;
};

// Published GPT-3.5 results, for display next to local numbers only.
inline constexpr std::array<ReferenceMetric, 5> kReferenceMetrics{{
    {StrategyId::GivingEffectivePraise, 0.655, 0.327},
    {StrategyId::ReactingToErrors, 0.683, 0.376},
    {StrategyId::DeterminingWhatStudentsKnow, 0.694, 0.413},
    {StrategyId::HelpingStudentsManageInequity, 0.738, 0.432},
    {StrategyId::RespondingToNegativeSelfTalk, 0.665, 0.331},
}};

}  // namespace tutorlens
