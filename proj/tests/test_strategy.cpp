#include "support/test_support.hpp"

#include "tutorlens/error.hpp"
#include "tutorlens/strategy.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace tutorlens;

namespace {

Transcript alternating(std::size_t n) {
    Transcript t;
    t.id = "alt";
    t.title = "alt";
    for (std::size_t i = 0; i < n; ++i) {
        t.utterances.push_back({i, i % 2 == 1 ? Speaker::Tutor : Speaker::Student, "utterance-" + std::to_string(i)});
    }
    return t;
}

// Count of "utterance-N" markers that appear in the dialogue section.
std::set<std::size_t> present_utterances(const Prompt& p, std::size_t n) {
    std::set<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string needle = "utterance-" + std::to_string(i) + "\n";
        if (p.user_text.find(needle) != std::string::npos) out.insert(i);
    }
    return out;
}

ErrorCode thrown_code(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::BadRequest;
}

}  // namespace

TEST(Catalog, HasFiveStrategiesInOrder) {
    const auto& cat = catalog();
    ASSERT_EQ(cat.size(), 5u);
    EXPECT_EQ(cat[0].display_name, "Giving Effective Praise");
    EXPECT_EQ(cat[1].display_name, "Reacting to Errors");
    EXPECT_EQ(cat[2].display_name, "Determining What Students Know");
    EXPECT_EQ(cat[3].display_name, "Helping Students Manage Inequity");
    EXPECT_EQ(cat[4].display_name, "Responding to Negative Self-Talk");
    for (std::size_t i = 0; i < cat.size(); ++i) EXPECT_EQ(catalog_position(cat[i].id), i);
}

TEST(Catalog, ExemplarsCoverAllLabels) {
    for (const auto& s : catalog()) {
        EXPECT_GE(s.exemplars.size(), 3u) << slug(s.id);
        EXPECT_FALSE(s.definition.empty());
        std::set<StrategyLabel> seen;
        for (const auto& ex : s.exemplars) seen.insert(ex.label);
        EXPECT_EQ(seen.size(), 3u) << slug(s.id);
    }
}

TEST(Catalog, LoadsFromRepositoryDirectory) {
    const auto loaded = load_catalog(TUTORLENS_STRATEGIES_DIR);
    EXPECT_EQ(loaded, catalog());
}

TEST(Catalog, RejectsInvalidDocuments) {
    const std::string ok_exemplars = R"([
      {"context":[{"speaker":"tutor","text":"a"}],"rationale":"r","label":-1},
      {"context":[{"speaker":"tutor","text":"b"}],"rationale":"r","label":0},
      {"context":[{"speaker":"tutor","text":"c"}],"rationale":"r","label":1}])";
    auto doc = [&](std::string slug_v, std::string def, std::string ex) {
        return R"({"slug":")" + slug_v + R"(","display_name":"X","definition":")" + def + R"(","exemplars":)" + ex + "}";
    };
    EXPECT_NO_THROW((void)parse_strategy_document(doc("reacting_to_errors", "d", ok_exemplars)));
    EXPECT_EQ(thrown_code([&] { (void)parse_strategy_document(doc("nope", "d", ok_exemplars)); }),
              ErrorCode::InvalidStrategyContent);
    EXPECT_EQ(thrown_code([&] { (void)parse_strategy_document(doc("reacting_to_errors", "", ok_exemplars)); }),
              ErrorCode::InvalidStrategyContent);
    const std::string missing_label = R"([
      {"context":[{"speaker":"tutor","text":"a"}],"rationale":"r","label":0},
      {"context":[{"speaker":"tutor","text":"b"}],"rationale":"r","label":0},
      {"context":[{"speaker":"tutor","text":"c"}],"rationale":"r","label":1}])";
    EXPECT_EQ(thrown_code([&] { (void)parse_strategy_document(doc("reacting_to_errors", "d", missing_label)); }),
              ErrorCode::InvalidStrategyContent);
    const std::string student_last = R"([
      {"context":[{"speaker":"student","text":"a"}],"rationale":"r","label":-1},
      {"context":[{"speaker":"tutor","text":"b"}],"rationale":"r","label":0},
      {"context":[{"speaker":"tutor","text":"c"}],"rationale":"r","label":1}])";
    EXPECT_EQ(thrown_code([&] { (void)parse_strategy_document(doc("reacting_to_errors", "d", student_last)); }),
              ErrorCode::InvalidStrategyContent);
    EXPECT_EQ(thrown_code([&] { (void)parse_strategy_document("{not json"); }), ErrorCode::InvalidStrategyContent);
}

TEST(BuildPrompt, WindowOfTwoBeforeIndexFive) {
    const auto t = alternating(8);
    const auto p = build_prompt(catalog()[0], t, 5, 2, LabelFormat::XmlTag, "m");
    EXPECT_EQ(present_utterances(p, 8), (std::set<std::size_t>{3, 4, 5}));
    EXPECT_NE(p.user_text.find("\nTUTOR: utterance-3\n"), std::string::npos);
    EXPECT_NE(p.user_text.find("\nSTUDENT: utterance-4\n"), std::string::npos);
    EXPECT_NE(p.user_text.find(">> TUTOR: utterance-5\n"), std::string::npos);
    EXPECT_LT(p.user_text.find("utterance-3"), p.user_text.find("utterance-4"));
    EXPECT_LT(p.user_text.find("utterance-4"), p.user_text.find("utterance-5"));
    const auto tail = p.user_text.substr(p.user_text.find(">> TUTOR: utterance-5"));
    for (const char* token : {"<label>1</label>", "<label>0</label>", "<label>-1</label>"}) {
        EXPECT_NE(tail.find(token), std::string::npos) << token;
    }
    EXPECT_LT(tail.find("Reason"), tail.find("<label>"));
    EXPECT_EQ(p.target.utterance_index, 5u);
    EXPECT_EQ(p.strategy_id, catalog()[0].id);
}

TEST(BuildPrompt, WindowClampsAtStart) {
    auto t = alternating(4);
    t.utterances[0].speaker = Speaker::Tutor;
    const auto p = build_prompt(catalog()[1], t, 0, 2, LabelFormat::XmlTag, "m");
    EXPECT_EQ(present_utterances(p, 4), (std::set<std::size_t>{0}));
}

TEST(BuildPrompt, CallerErrors) {
    const auto t = alternating(4);
    EXPECT_EQ(thrown_code([&] { (void)build_prompt(catalog()[0], t, 2, 2, LabelFormat::XmlTag, "m"); }),
              ErrorCode::TargetNotTutor);
    EXPECT_EQ(thrown_code([&] { (void)build_prompt(catalog()[0], t, 4, 2, LabelFormat::XmlTag, "m"); }),
              ErrorCode::IndexOutOfRange);
}

TEST(BuildPrompt, DeterministicAndIndexSensitive) {
    const auto t = alternating(10);
    const auto a = build_prompt(catalog()[2], t, 7, 3, LabelFormat::XmlTag, "m");
    const auto b = build_prompt(catalog()[2], t, 7, 3, LabelFormat::XmlTag, "m");
    const auto c = build_prompt(catalog()[2], t, 9, 3, LabelFormat::XmlTag, "m");
    EXPECT_EQ(a, b);
    EXPECT_NE(a.content_hash, c.content_hash);
    EXPECT_EQ(a.content_hash, prompt_hash(a.system_text, a.user_text, "m"));
    EXPECT_NE(a.content_hash, build_prompt(catalog()[2], t, 7, 3, LabelFormat::XmlTag, "other").content_hash);
    EXPECT_NE(a.content_hash, build_prompt(catalog()[3], t, 7, 3, LabelFormat::XmlTag, "m").content_hash);
}

TEST(BuildPrompt, WindowBoundProperty) {
    const std::size_t n = 15;
    const auto t = alternating(n);
    for (std::size_t idx = 1; idx < n; idx += 2) {
        for (std::size_t k = 0; k <= 16; ++k) {
            const auto p = build_prompt(catalog()[idx % 5], t, idx, k, LabelFormat::XmlTag, "m");
            const auto lines = present_utterances(p, n);
            const std::size_t expected = std::min(k, idx) + 1;
            ASSERT_EQ(lines.size(), expected) << "idx=" << idx << " k=" << k;
            EXPECT_EQ(*lines.rbegin(), idx);
            EXPECT_EQ(*lines.begin(), idx - std::min(k, idx));
        }
    }
}

TEST(BuildPrompt, NewlinesInTextStayOnOneLine) {
    Transcript t;
    t.id = "nl";
    t.title = "nl";
    t.utterances = {{0, Speaker::Student, "first\nsecond"}, {1, Speaker::Tutor, "ok\r\nthen"}};
    const auto p = build_prompt(catalog()[0], t, 1, 5, LabelFormat::XmlTag, "m");
    EXPECT_NE(p.user_text.find("STUDENT: first second\n"), std::string::npos);
    EXPECT_NE(p.user_text.find(">> TUTOR: ok then\n"), std::string::npos);
}

TEST(ParseLabel, Examples) {
    auto a = parse_label("The praise is specific… <label>1</label>");
    EXPECT_EQ(a.label, StrategyLabel::Desired);
    EXPECT_EQ(a.rationale, "The praise is specific…");

    auto b = parse_label("<label>-1</label>");
    EXPECT_EQ(b.label, StrategyLabel::NotApplicable);
    EXPECT_EQ(b.rationale, "");

    EXPECT_EQ(thrown_code([] { (void)parse_label("I believe the answer is 1"); }), ErrorCode::UnparseableLabel);
    EXPECT_EQ(thrown_code([] { (void)parse_label("<label>2</label>"); }), ErrorCode::InvalidLabel);
    EXPECT_EQ(thrown_code([] { (void)parse_label("<label>one</label>"); }), ErrorCode::InvalidLabel);
    EXPECT_EQ(thrown_code([] { (void)parse_label("<label>1"); }), ErrorCode::UnparseableLabel);
}

TEST(ParseLabel, LastTokenWins) {
    auto p = parse_label("Could be <label>0</label> but actually\n<label>1</label>\n");
    EXPECT_EQ(p.label, StrategyLabel::Desired);
    EXPECT_EQ(p.rationale, "Could be <label>0</label> but actually");
}

TEST(ParseLabel, RoundTripsEveryLabel) {
    for (auto l : kAllLabels) {
        const auto out = parse_label("reason here\n" + render_label_token(l));
        EXPECT_EQ(out.label, l);
        EXPECT_EQ(out.rationale, "reason here");
    }
}

TEST(ParseLabel, FuzzOnlyThrowsDocumentedCodes) {
    std::mt19937_64 rng(3);
    const std::string pieces[] = {"<label>", "</label>", "1", "-1", "0", "2", " ", "x", "\n", "<", ">"};
    std::uniform_int_distribution<int> pick(0, 10), len(0, 12);
    for (int i = 0; i < 10000; ++i) {
        std::string s = i % 2 ? testkit::random_bytes(rng, 32) : "";
        const int l = len(rng);
        for (int j = 0; j < l; ++j) s += pieces[pick(rng)];
        try {
            const auto p = parse_label(s);
            EXPECT_TRUE(label_from_int(to_int(p.label)).has_value());
        } catch (const Error& e) {
            EXPECT_TRUE(e.code() == ErrorCode::UnparseableLabel || e.code() == ErrorCode::InvalidLabel);
        }
    }
}

TEST(CorrectiveText, ExtendsOriginalAndMentionsFormat) {
    const auto c = corrective_user_text("original");
    EXPECT_EQ(c.rfind("original", 0), 0u);
    EXPECT_NE(c.find("<label>"), std::string::npos);
    EXPECT_NE(c, "original");
}
