#include "support/test_support.hpp"

#include "tutorlens/engine.hpp"
#include "tutorlens/error.hpp"

#include <gtest/gtest.h>

#include <mutex>
#include <random>
#include <thread>

using namespace tutorlens;

namespace {

RunConfig mock_config(std::vector<StrategyId> ids = {kAllStrategies.begin(), kAllStrategies.end()}) {
    RunConfig cfg;
    cfg.strategy_ids = std::move(ids);
    cfg.run_id = "run-test";
    return cfg;
}

// Answers like the mock but finishes in a shuffled order.
class JitteryProvider final : public Provider {
public:
    CompletionResult complete(const CompletionRequest& req) override {
        int delay = 0;
        {
            std::lock_guard lock(mutex_);
            delay = std::uniform_int_distribution<int>(0, 4)(rng_);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        return MockProvider().complete(req);
    }
    [[nodiscard]] std::string_view kind() const override { return "jittery"; }

private:
    std::mutex mutex_;
    std::mt19937 rng_{42};
};

class ThrowingProvider final : public Provider {
public:
    CompletionResult complete(const CompletionRequest&) override {
        throw Error(ErrorCode::ProviderUnavailable, "backend down");
    }
    [[nodiscard]] std::string_view kind() const override { return "down"; }
};

class CountingSink final : public RunSink {
public:
    void put_run(const ClassificationRun& run) override {
        ++puts;
        last = run;
        if (fail) throw std::runtime_error("disk full");
    }
    int puts = 0;
    bool fail = false;
    ClassificationRun last;
};

ClassificationRecord rec(StrategyId sid, std::optional<StrategyLabel> label, bool error = false) {
    ClassificationRecord r;
    r.strategy_id = sid;
    r.label = label;
    if (error) r.error = RecordError{ErrorCode::UnparseableLabel, "x"};
    return r;
}

}  // namespace

TEST(ClassifyUtterance, ReplayedDesiredLabel) {
    const auto t = testkit::five_turn_transcript();
    const auto cfg = mock_config();
    const auto& s = find_strategy(StrategyId::GivingEffectivePraise);
    const auto p = build_prompt(s, t, 4, cfg.context_k, LabelFormat::XmlTag, cfg.provider.model_id);
    ReplayProvider replay(ReplayFixture({{p.content_hash, "Specific praise for the process.\n<label>1</label>"}}, ""));
    const auto r = classify_utterance(replay, s, t, 4, cfg);
    EXPECT_EQ(r.label, StrategyLabel::Desired);
    EXPECT_FALSE(r.error);
    EXPECT_EQ(r.rationale, "Specific praise for the process.");
    EXPECT_EQ(r.prompt_hash, p.content_hash);
    EXPECT_EQ(r.attempts, 1);
    EXPECT_EQ(r.transcript_id, t.id);
    EXPECT_EQ(r.utterance_index, 4u);
}

TEST(ClassifyUtterance, UnparseableTwiceBecomesErrorRecord) {
    const auto t = testkit::five_turn_transcript();
    const auto cfg = mock_config();
    const auto& s = find_strategy(StrategyId::ReactingToErrors);
    const auto p = build_prompt(s, t, 2, cfg.context_k, LabelFormat::XmlTag, cfg.provider.model_id);
    const auto retry_hash = prompt_hash(p.system_text, corrective_user_text(p.user_text), cfg.provider.model_id);
    ASSERT_NE(retry_hash, p.content_hash);
    ReplayProvider replay(ReplayFixture({{p.content_hash, "no token here"}, {retry_hash, "no token here"}}, ""));
    const auto r = classify_utterance(replay, s, t, 2, cfg);
    ASSERT_TRUE(r.error);
    EXPECT_EQ(r.error->code, ErrorCode::UnparseableLabel);
    EXPECT_FALSE(r.label);
    EXPECT_EQ(r.attempts, 2);
}

TEST(ClassifyUtterance, CorrectiveReaskCanRecover) {
    const auto t = testkit::five_turn_transcript();
    const auto cfg = mock_config();
    const auto& s = find_strategy(StrategyId::ReactingToErrors);
    const auto p = build_prompt(s, t, 2, cfg.context_k, LabelFormat::XmlTag, cfg.provider.model_id);
    const auto retry_hash = prompt_hash(p.system_text, corrective_user_text(p.user_text), cfg.provider.model_id);
    ReplayProvider replay(ReplayFixture({{p.content_hash, "<label>7</label>"}, {retry_hash, "ok <label>0</label>"}}, ""));
    const auto r = classify_utterance(replay, s, t, 2, cfg);
    EXPECT_EQ(r.label, StrategyLabel::Undesired);
    EXPECT_EQ(r.attempts, 2);
    EXPECT_EQ(r.prompt_hash, p.content_hash);
}

TEST(ClassifyUtterance, ProviderFailureIsCapturedInRecord) {
    const auto t = testkit::five_turn_transcript();
    ThrowingProvider down;
    const auto r = classify_utterance(down, find_strategy(StrategyId::ReactingToErrors), t, 0, mock_config());
    ASSERT_TRUE(r.error);
    EXPECT_EQ(r.error->code, ErrorCode::ProviderUnavailable);
    EXPECT_FALSE(r.label);
}

TEST(ClassifyUtterance, StudentTurnIsCallerError) {
    const auto t = testkit::five_turn_transcript();
    MockProvider mock;
    const auto& s = find_strategy(StrategyId::ReactingToErrors);
    try {
        (void)classify_utterance(mock, s, t, 1, mock_config());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TargetNotTutor);
    }
    EXPECT_THROW((void)classify_utterance(mock, s, t, 9, mock_config()), Error);
}

TEST(ClassifyTranscript, Cardinality) {
    const auto t = testkit::five_turn_transcript();
    MockProvider mock;
    EXPECT_EQ(classify_transcript(mock, t, mock_config()).records.size(), 15u);
    EXPECT_EQ(classify_transcript(mock, t, mock_config({StrategyId::GivingEffectivePraise})).records.size(), 3u);
}

TEST(ClassifyTranscript, CardinalityProperty) {
    std::mt19937 rng(1);
    MockProvider mock;
    for (int iter = 0; iter < 25; ++iter) {
        Transcript t;
        t.id = "p" + std::to_string(iter);
        t.title = t.id;
        const int n = std::uniform_int_distribution<int>(1, 9)(rng);
        std::size_t tutors = 0;
        for (int i = 0; i < n; ++i) {
            const bool tutor = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
            tutors += tutor;
            t.utterances.push_back({static_cast<std::size_t>(i), tutor ? Speaker::Tutor : Speaker::Student, "u"});
        }
        std::vector<StrategyId> ids;
        for (auto sid : kAllStrategies) {
            if (std::uniform_int_distribution<int>(0, 1)(rng)) ids.push_back(sid);
        }
        if (ids.empty()) ids.push_back(StrategyId::ReactingToErrors);
        const auto run = classify_transcript(mock, t, mock_config(ids));
        EXPECT_EQ(run.records.size(), tutors * ids.size());
    }
}

TEST(ClassifyTranscript, MockRunsAreDeterministic) {
    const auto t = testkit::five_turn_transcript();
    MockProvider mock;
    const auto a = classify_transcript(mock, t, mock_config());
    const auto b = classify_transcript(mock, t, mock_config());
    EXPECT_EQ(a.records, b.records);
}

TEST(ClassifyTranscript, OrderingIndependentOfCompletionOrder) {
    const auto t = testkit::five_turn_transcript();
    JitteryProvider jittery;
    MockProvider mock;
    auto cfg = mock_config({StrategyId::RespondingToNegativeSelfTalk, StrategyId::GivingEffectivePraise,
                            StrategyId::DeterminingWhatStudentsKnow});
    cfg.provider.max_in_flight = 8;
    const auto run = classify_transcript(jittery, t, cfg);
    ASSERT_EQ(run.records.size(), 9u);
    for (std::size_t i = 1; i < run.records.size(); ++i) {
        const auto& a = run.records[i - 1];
        const auto& b = run.records[i];
        EXPECT_LT(std::pair(a.utterance_index, catalog_position(a.strategy_id)),
                  std::pair(b.utterance_index, catalog_position(b.strategy_id)));
    }
    cfg.provider.max_in_flight = 1;
    EXPECT_EQ(run.records, classify_transcript(mock, t, cfg).records);
}

TEST(ClassifyTranscript, PersistsOnceThroughSink) {
    const auto t = testkit::five_turn_transcript();
    MockProvider mock;
    CountingSink sink;
    const auto run = classify_transcript(mock, t, mock_config(), &sink);
    EXPECT_EQ(sink.puts, 1);
    EXPECT_EQ(sink.last, run);
    EXPECT_EQ(run.config.run_id, "run-test");
    EXPECT_EQ(run.transcript_id, t.id);
}

TEST(ClassifyTranscript, SinkFailureIsStorageFailed) {
    const auto t = testkit::five_turn_transcript();
    MockProvider mock;
    CountingSink sink;
    sink.fail = true;
    try {
        (void)classify_transcript(mock, t, mock_config(), &sink);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StorageFailed);
    }
}

TEST(ClassifyTranscript, InvalidConfigRejected) {
    const auto t = testkit::five_turn_transcript();
    MockProvider mock;
    auto cfg = mock_config({});
    EXPECT_THROW((void)classify_transcript(mock, t, cfg), Error);
    cfg = mock_config({StrategyId::ReactingToErrors, StrategyId::ReactingToErrors});
    EXPECT_THROW((void)classify_transcript(mock, t, cfg), Error);
    cfg = mock_config();
    cfg.run_id = "../escape";
    EXPECT_THROW((void)classify_transcript(mock, t, cfg), Error);
}

TEST(RunId, GeneratedIdsAreSafeAndDistinct) {
    const auto a = generate_run_id();
    const auto b = generate_run_id();
    EXPECT_NE(a, b);
    EXPECT_EQ(a.rfind("run-", 0), 0u);
    RunConfig cfg;
    cfg.run_id = a;
    EXPECT_NO_THROW(validate(cfg));
}

TEST(Patterns, EmptyRunList) {
    const auto p = patterns_summary({});
    EXPECT_EQ(p.run_count, 0u);
    ASSERT_EQ(p.per_strategy.size(), 5u);
    for (const auto& s : p.per_strategy) {
        EXPECT_EQ(s.labeled_total, 0u);
        EXPECT_EQ(s.error_total, 0u);
        EXPECT_EQ(s.counts, (std::array<std::size_t, 3>{}));
        EXPECT_FALSE(s.proportions);
    }
}

TEST(Patterns, HandCountedExample) {
    ClassificationRun run;
    const auto sid = StrategyId::HelpingStudentsManageInequity;
    for (int l : {1, 1, 0, -1}) run.records.push_back(rec(sid, label_from_int(l)));
    const auto p = patterns_summary({run});
    const auto& s = p.per_strategy[catalog_position(sid)];
    EXPECT_EQ(s.counts[label_slot(StrategyLabel::Desired)], 2u);
    EXPECT_EQ(s.counts[label_slot(StrategyLabel::Undesired)], 1u);
    EXPECT_EQ(s.counts[label_slot(StrategyLabel::NotApplicable)], 1u);
    ASSERT_TRUE(s.proportions);
    EXPECT_DOUBLE_EQ((*s.proportions)[label_slot(StrategyLabel::Desired)], 0.5);
    EXPECT_DOUBLE_EQ((*s.proportions)[label_slot(StrategyLabel::Undesired)], 0.25);
    EXPECT_DOUBLE_EQ((*s.proportions)[label_slot(StrategyLabel::NotApplicable)], 0.25);
    EXPECT_FALSE(p.per_strategy[0].proportions);
}

TEST(Patterns, ErrorsCountedSeparately) {
    ClassificationRun run;
    const auto sid = StrategyId::ReactingToErrors;
    run.records = {rec(sid, StrategyLabel::Desired), rec(sid, StrategyLabel::Undesired), rec(sid, std::nullopt, true)};
    const auto& s = patterns_summary({run}).per_strategy[catalog_position(sid)];
    EXPECT_EQ(s.labeled_total, 2u);
    EXPECT_EQ(s.error_total, 1u);
}

TEST(Patterns, ProportionsSumToOne) {
    std::mt19937 rng(8);
    std::vector<ClassificationRun> runs(6);
    for (auto& run : runs) {
        const int n = std::uniform_int_distribution<int>(0, 40)(rng);
        for (int i = 0; i < n; ++i) {
            const auto sid = kAllStrategies[std::uniform_int_distribution<std::size_t>(0, 4)(rng)];
            const int l = std::uniform_int_distribution<int>(-1, 2)(rng);
            run.records.push_back(l == 2 ? rec(sid, std::nullopt, true) : rec(sid, label_from_int(l)));
        }
    }
    const auto p = patterns_summary(runs);
    EXPECT_EQ(p.run_count, 6u);
    for (const auto& s : p.per_strategy) {
        EXPECT_EQ(s.counts[0] + s.counts[1] + s.counts[2], s.labeled_total);
        if (!s.proportions) {
            EXPECT_EQ(s.labeled_total, 0u);
            continue;
        }
        EXPECT_NEAR((*s.proportions)[0] + (*s.proportions)[1] + (*s.proportions)[2], 1.0, 1e-12);
    }
}
