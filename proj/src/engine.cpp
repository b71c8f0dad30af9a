#include "tutorlens/engine.hpp"

#include "tutorlens/text.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <random>
#include <set>
#include <thread>

namespace tutorlens {

void validate(const RunConfig& cfg) {
    if (cfg.strategy_ids.empty()) throw Error(ErrorCode::InvalidConfig, "strategy_ids must be non-empty");
    std::set<StrategyId> unique(cfg.strategy_ids.begin(), cfg.strategy_ids.end());
    if (unique.size() != cfg.strategy_ids.size()) throw Error(ErrorCode::InvalidConfig, "strategy_ids must be unique");
    if (!text::is_safe_id(cfg.run_id)) throw Error(ErrorCode::InvalidConfig, "run_id '" + cfg.run_id + "' is not a safe id");
    validate(cfg.provider);
}

std::string generate_run_id() {
    const std::string ts = format_timestamp(now_timestamp());  // 2026-10-15T08:30:00.123Z
    std::string compact;
    for (char c : ts.substr(0, 19)) {
        if (c != '-' && c != ':') compact.push_back(c == 'T' ? 't' : c);
    }
    thread_local std::mt19937 rng{std::random_device{}()};
    char suffix[9];
    std::snprintf(suffix, sizeof suffix, "%08x", static_cast<unsigned>(rng()));
    return "run-" + compact + "-" + suffix;
}

namespace {

bool is_parse_failure(ErrorCode c) { return c == ErrorCode::UnparseableLabel || c == ErrorCode::InvalidLabel; }

}  // namespace

ClassificationRecord classify_utterance(Provider& provider, const Strategy& s, const Transcript& t, std::size_t idx,
                                        const RunConfig& cfg) {
    const Prompt prompt = build_prompt(s, t, idx, cfg.context_k, LabelFormat::XmlTag, cfg.provider.model_id);

    ClassificationRecord rec;
    rec.transcript_id = t.id;
    rec.utterance_index = idx;
    rec.strategy_id = s.id;
    rec.prompt_hash = prompt.content_hash;
    rec.attempts = 0;

    CompletionRequest req{prompt.system_text, prompt.user_text, cfg.provider.model_id, cfg.provider.temperature};
    for (int round = 0; round < 2; ++round) {
        if (round == 1) req.user_text = corrective_user_text(prompt.user_text);
        try {
            const CompletionResult result = provider.complete(req);
            rec.attempts += result.attempts;
            ParsedLabel parsed = parse_label(result.text);
            rec.label = parsed.label;
            rec.rationale = std::move(parsed.rationale);
            rec.error.reset();
            return rec;
        } catch (const Error& e) {
            if (!is_parse_failure(e.code())) {
                // provider failure: count the failed call and stop
                rec.attempts += 1;
                rec.error = RecordError{e.code(), e.what()};
                return rec;
            }
            rec.error = RecordError{e.code(), e.what()};
        } catch (const std::exception& e) {
            rec.attempts += 1;
            rec.error = RecordError{ErrorCode::ProviderUnavailable, e.what()};
            return rec;
        }
    }
    return rec;
}

ClassificationRun classify_transcript(Provider& provider, const Transcript& t, const RunConfig& cfg, RunSink* sink) {
    validate(cfg);
    validate(t);

    std::vector<StrategyId> strategies = cfg.strategy_ids;
    std::sort(strategies.begin(), strategies.end(),
              [](StrategyId a, StrategyId b) { return catalog_position(a) < catalog_position(b); });

    struct Job {
        std::size_t idx;
        StrategyId sid;
    };
    std::vector<Job> jobs;
    for (const auto& u : t.utterances) {
        if (u.speaker != Speaker::Tutor) continue;
        for (StrategyId sid : strategies) jobs.push_back(Job{u.index, sid});
    }

    std::vector<ClassificationRecord> records(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            records[i] = classify_utterance(provider, find_strategy(jobs[i].sid), t, jobs[i].idx, cfg);
        }
    };
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, cfg.provider.max_in_flight)), jobs.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    ClassificationRun run;
    run.config = cfg;
    run.transcript_id = t.id;
    run.records = std::move(records);
    run.completed_at = now_timestamp();
    if (sink != nullptr) {
        try {
            sink->put_run(run);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::StorageFailed) throw;
            throw Error(ErrorCode::StorageFailed, e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::StorageFailed, e.what());
        }
    }
    return run;
}

PatternsSummary patterns_summary(const std::vector<ClassificationRun>& runs) {
    PatternsSummary out;
    out.run_count = runs.size();
    for (StrategyId sid : kAllStrategies) out.per_strategy.push_back(StrategyPattern{sid, {}, 0, 0, std::nullopt});
    for (const auto& run : runs) {
        for (const auto& r : run.records) {
            auto& p = out.per_strategy[catalog_position(r.strategy_id)];
            if (r.label) {
                ++p.counts[label_slot(*r.label)];
                ++p.labeled_total;
            } else {
                ++p.error_total;
            }
        }
    }
    for (auto& p : out.per_strategy) {
        if (p.labeled_total == 0) continue;
        std::array<double, 3> prop{};
        for (std::size_t i = 0; i < 3; ++i) {
            prop[i] = static_cast<double>(p.counts[i]) / static_cast<double>(p.labeled_total);
        }
        p.proportions = prop;
    }
    return out;
}

}  // namespace tutorlens
