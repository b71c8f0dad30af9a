#include "tutorlens/evaluation.hpp"

#include "tutorlens/csv.hpp"
#include "tutorlens/error.hpp"

#include <charconv>
#include <map>
#include <set>

namespace tutorlens {

std::size_t ConfusionMatrix3::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
        for (std::size_t v : row) n += v;
    }
    return n;
}

std::size_t ConfusionMatrix3::support(StrategyLabel gold) const {
    const auto& row = counts[label_slot(gold)];
    return row[0] + row[1] + row[2];
}

ConfusionMatrix3 confusion_matrix(const std::vector<LabelPair>& pairs) {
    ConfusionMatrix3 m;
    for (const auto& [gold, predicted] : pairs) ++m.counts[label_slot(gold)][label_slot(predicted)];
    return m;
}

std::optional<double> class_recall(const ConfusionMatrix3& m, StrategyLabel c) {
    const std::size_t row = m.support(c);
    if (row == 0) return std::nullopt;
    return static_cast<double>(m.at(c, c)) / static_cast<double>(row);
}

std::optional<double> class_tnr(const ConfusionMatrix3& m, StrategyLabel c) {
    const std::size_t ci = label_slot(c);
    std::size_t negatives = 0;
    std::size_t true_negatives = 0;
    for (std::size_t g = 0; g < 3; ++g) {
        if (g == ci) continue;
        for (std::size_t p = 0; p < 3; ++p) {
            negatives += m.counts[g][p];
            if (p != ci) true_negatives += m.counts[g][p];
        }
    }
    if (negatives == 0) return std::nullopt;
    return static_cast<double>(true_negatives) / static_cast<double>(negatives);
}

namespace {

std::optional<double> mean_of_defined(const std::array<std::optional<double>, 2>& values) {
    double sum = 0.0;
    int n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

StrategyMetrics strategy_metrics(const ConfusionMatrix3& m, StrategyId sid) {
    StrategyMetrics out;
    out.strategy_id = sid;
    out.matrix = m;
    for (StrategyLabel c : kAllLabels) {
        out.support_per_class[label_slot(c)] = m.support(c);
        out.per_class[label_slot(c)] = ClassMetrics{class_tnr(m, c), class_recall(m, c)};
    }
    out.tnr = mean_of_defined({class_tnr(m, kMacroClasses[0]), class_tnr(m, kMacroClasses[1])});
    out.recall = mean_of_defined({class_recall(m, kMacroClasses[0]), class_recall(m, kMacroClasses[1])});
    return out;
}

MetricsReport evaluate_run(const std::vector<GoldAnnotation>& gold, const ClassificationRun& run) {
    using Key = std::pair<std::size_t, StrategyId>;

    bool any_for_run = false;
    std::map<Key, std::array<std::size_t, 3>> votes;
    for (const auto& g : gold) {
        if (g.transcript_id != run.transcript_id) continue;
        any_for_run = true;
        ++votes[{g.utterance_index, g.strategy_id}][label_slot(g.label)];
    }
    if (!gold.empty() && !any_for_run) {
        throw Error(ErrorCode::TranscriptMismatch,
                    "no gold annotations reference transcript '" + run.transcript_id + "'");
    }

    std::set<StrategyId> present;
    std::map<Key, StrategyLabel> predictions;
    for (const auto& r : run.records) {
        present.insert(r.strategy_id);
        if (r.label) predictions[{r.utterance_index, r.strategy_id}] = *r.label;
    }

    MetricsReport report;
    report.transcript_id = run.transcript_id;
    std::map<StrategyId, std::vector<LabelPair>> pairs;
    std::set<Key> consumed;
    for (const auto& [key, count] : votes) {
        present.insert(key.second);
        std::size_t best = 0;
        for (std::size_t i = 1; i < 3; ++i) {
            if (count[i] > count[best]) best = i;
        }
        bool tie = false;
        for (std::size_t i = 0; i < 3; ++i) {
            if (i != best && count[i] == count[best]) tie = true;
        }
        if (tie) {
            ++report.unmatched_gold;
            consumed.insert(key);
            continue;
        }
        const auto it = predictions.find(key);
        if (it == predictions.end()) {
            ++report.unmatched_gold;
            continue;
        }
        consumed.insert(key);
        pairs[key.second].emplace_back(kAllLabels[best], it->second);
        ++report.matched_pairs;
    }
    for (const auto& [key, label] : predictions) {
        if (!consumed.count(key)) ++report.unmatched_predictions;
    }
    for (StrategyId sid : kAllStrategies) {
        if (!present.count(sid)) continue;
        report.per_strategy.push_back(strategy_metrics(confusion_matrix(pairs[sid]), sid));
    }
    return report;
}

std::string metrics_report_csv(const MetricsReport& report) {
    std::string out = "strategy,tnr,recall,support_-1,support_0,support_1\n";
    for (const auto& m : report.per_strategy) {
        out += csv::format_record({std::string(slug(m.strategy_id)), m.tnr ? format_number(*m.tnr) : std::string(),
                                   m.recall ? format_number(*m.recall) : std::string(),
                                   std::to_string(m.support_per_class[0]), std::to_string(m.support_per_class[1]),
                                   std::to_string(m.support_per_class[2])});
    }
    return out;
}

}  // namespace tutorlens
