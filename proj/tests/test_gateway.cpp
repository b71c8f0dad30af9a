#include "support/test_support.hpp"

#include "tutorlens/error.hpp"
#include "tutorlens/fsutil.hpp"
#include "tutorlens/gateway.hpp"
#include "tutorlens/hash.hpp"
#include "tutorlens/strategy.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

using namespace tutorlens;
using tutorlens::testkit::ScriptedTransport;
using tutorlens::testkit::VirtualClock;

namespace {

CompletionRequest request(std::string user, double temperature = 0.0) {
    return CompletionRequest{"system prompt", std::move(user), "gpt-3.5-turbo", temperature};
}

ProviderConfig http_config() {
    ProviderConfig cfg;
    cfg.kind = ProviderKind::Http;
    cfg.base_url = "http://llm.invalid/v1";
    return cfg;
}

class CountingProvider final : public Provider {
public:
    CompletionResult complete(const CompletionRequest& req) override {
        ++calls;
        return MockProvider().complete(req);
    }
    [[nodiscard]] std::string_view kind() const override { return "counting"; }
    std::atomic<int> calls{0};
};

class BrokenCache final : public CacheStore {
public:
    std::optional<std::string> get(const std::string&) override { throw std::runtime_error("disk gone"); }
    void put(const std::string&, const std::string&) override { throw std::runtime_error("disk gone"); }
    void clear() override {}
};

ErrorCode thrown_code(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::BadRequest;
}

// Independent restatement of the mock rule from the raw hash bytes.
StrategyLabel oracle_mock_label(const std::string& hex) {
    const unsigned long long v = std::stoull(hex.substr(0, 16), nullptr, 16);
    constexpr StrategyLabel order[] = {StrategyLabel::NotApplicable, StrategyLabel::Undesired, StrategyLabel::Desired};
    return order[v % 3];
}

}  // namespace

TEST(RequestHash, MatchesPromptHashAndFramesFields) {
    const auto r = request("u");
    EXPECT_EQ(request_hash(r), prompt_hash(r.system_text, r.user_text, r.model_id));
    EXPECT_EQ(request_hash(r).size(), 64u);
    // Field framing keeps concatenation ambiguity from colliding.
    EXPECT_NE(prompt_hash("ab", "c", "m"), prompt_hash("a", "bc", "m"));
    EXPECT_EQ(request_hash(r), request_hash(request("u", 0.7)));
    EXPECT_NE(cache_key(r), cache_key(request("u", 0.7)));
}

TEST(Sha256, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(MockProvider, DeterministicAndFollowsHashRule) {
    MockProvider mock;
    for (int i = 0; i < 200; ++i) {
        const auto req = request("user text " + std::to_string(i));
        const auto a = mock.complete(req);
        const auto b = mock.complete(req);
        EXPECT_EQ(a.text, b.text);
        EXPECT_EQ(a.provider_kind, "mock");
        const auto expected = oracle_mock_label(request_hash(req));
        EXPECT_EQ(mock_label(request_hash(req)), expected);
        EXPECT_EQ(parse_label(a.text).label, expected);
    }
}

TEST(MockProvider, LabelsSpreadOverAllValues) {
    std::set<StrategyLabel> seen;
    for (int i = 0; i < 60; ++i) seen.insert(mock_label(request_hash(request(std::to_string(i)))));
    EXPECT_EQ(seen.size(), 3u);
}

TEST(ReplayProvider, ExactMatchOnly) {
    const auto req = request("known");
    ReplayProvider replay(ReplayFixture({{request_hash(req), "because <label>0</label>"}}, ""));
    EXPECT_EQ(replay.complete(req).text, "because <label>0</label>");
    EXPECT_EQ(thrown_code([&] { (void)replay.complete(request("unknown")); }), ErrorCode::MissingFixtureEntry);
}

TEST(ReplayFixture, RejectsMalformedDocuments) {
    EXPECT_EQ(thrown_code([] { (void)ReplayFixture::parse("[1,2]"); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(thrown_code([] { (void)ReplayFixture::parse("{\"a\": 3}"); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(thrown_code([] { (void)ReplayFixture::parse("{"); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(thrown_code([] { (void)ReplayFixture::load("/nonexistent/fixture.json"); }), ErrorCode::InvalidConfig);
    const auto f = ReplayFixture::parse(R"({"h1":"x","h2":"y"})");
    EXPECT_EQ(ReplayFixture::parse(f.dump()).entries(), f.entries());
}

TEST(HttpProvider, FailsTwiceThenSucceeds) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->push_status(503);
    transport->push_timeout();
    transport->push_status(200, testkit::completion_body("fine <label>1</label>"));
    auto cfg = http_config();
    cfg.max_retries = 3;
    HttpProvider provider(cfg, testkit::fake_http_options(transport, clock));
    const auto result = provider.complete(request("x"));
    EXPECT_EQ(result.attempts, 3);
    EXPECT_EQ(result.text, "fine <label>1</label>");
    EXPECT_EQ(transport->calls().size(), 3u);
}

TEST(HttpProvider, GivesUpAfterMaxRetriesWithCappedBackoff) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->set_default([] { return HttpResponse{429, "slow down"}; });
    auto cfg = http_config();
    cfg.max_retries = 3;
    auto opts = testkit::fake_http_options(transport, clock);
    opts.jitter = [] { return 0.5; };
    HttpProvider provider(cfg, opts);
    EXPECT_EQ(thrown_code([&] { (void)provider.complete(request("x")); }), ErrorCode::ProviderUnavailable);
    EXPECT_EQ(transport->calls().size(), 4u);
    using std::chrono::milliseconds;
    const auto sleeps = clock->sleeps();
    ASSERT_EQ(sleeps.size(), 3u);
    EXPECT_EQ(sleeps[0], milliseconds(250));
    EXPECT_EQ(sleeps[1], milliseconds(500));
    EXPECT_EQ(sleeps[2], milliseconds(1000));
}

TEST(HttpProvider, BackoffNeverExceedsCap) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->set_default([] { return HttpResponse{500, ""}; });
    auto cfg = http_config();
    cfg.max_retries = 5;
    auto opts = testkit::fake_http_options(transport, clock);
    opts.jitter = [] { return 0.999999; };
    HttpProvider provider(cfg, opts);
    EXPECT_THROW((void)provider.complete(request("x")), Error);
    const auto sleeps = clock->sleeps();
    ASSERT_EQ(sleeps.size(), 5u);
    for (std::size_t i = 0; i < sleeps.size(); ++i) {
        EXPECT_LT(sleeps[i], std::chrono::milliseconds(500) * (1 << i));
    }
}

TEST(HttpProvider, ClientErrorsAreNotRetried) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->push_status(400, "{\"error\":\"bad\"}");
    HttpProvider provider(http_config(), testkit::fake_http_options(transport, clock));
    EXPECT_EQ(thrown_code([&] { (void)provider.complete(request("x")); }), ErrorCode::ProviderUnavailable);
    EXPECT_EQ(transport->calls().size(), 1u);
}

TEST(HttpProvider, MalformedBodyIsProviderUnavailable) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->push_status(200, "<html>gateway</html>");
    HttpProvider provider(http_config(), testkit::fake_http_options(transport, clock));
    EXPECT_EQ(thrown_code([&] { (void)provider.complete(request("x")); }), ErrorCode::ProviderUnavailable);
    EXPECT_EQ(transport->calls().size(), 1u);
}

TEST(HttpProvider, MissingKeyIsAuthMissing) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    auto opts = testkit::fake_http_options(transport, clock);
    opts.getenv = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
    HttpProvider provider(http_config(), opts);
    EXPECT_EQ(thrown_code([&] { (void)provider.complete(request("x")); }), ErrorCode::AuthMissing);
    EXPECT_TRUE(transport->calls().empty());
}

TEST(HttpProvider, WireFormat) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->push_status(200, testkit::completion_body("ok <label>0</label>"));
    auto cfg = http_config();
    cfg.api_key_ref = "MY_KEY";
    auto opts = testkit::fake_http_options(transport, clock);
    std::string asked;
    opts.getenv = [&](const std::string& name) -> std::optional<std::string> {
        asked = name;
        return std::string("sk-secret");
    };
    HttpProvider provider(cfg, opts);
    (void)provider.complete(CompletionRequest{"sys", "usr", "model-x", 0.25});
    EXPECT_EQ(asked, "MY_KEY");
    const auto calls = transport->calls();
    ASSERT_EQ(calls.size(), 1u);
    EXPECT_EQ(calls[0].url, "http://llm.invalid/v1/chat/completions");
    const auto body = nlohmann::json::parse(calls[0].body);
    EXPECT_EQ(body["model"], "model-x");
    EXPECT_EQ(body["temperature"], 0.25);
    ASSERT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][0]["content"], "sys");
    EXPECT_EQ(body["messages"][1]["role"], "user");
    EXPECT_EQ(body["messages"][1]["content"], "usr");
    bool auth = false;
    for (const auto& [k, v] : calls[0].headers) auth |= (k == "Authorization" && v == "Bearer sk-secret");
    EXPECT_TRUE(auth);
}

TEST(HttpProvider, DispatchesRespectMinimumInterval) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->set_default([] { return HttpResponse{200, testkit::completion_body("<label>1</label>")}; });
    auto cfg = http_config();
    cfg.min_request_interval_ms = 250;
    HttpProvider provider(cfg, testkit::fake_http_options(transport, clock));
    for (int i = 0; i < 6; ++i) (void)provider.complete(request(std::to_string(i)));
    const auto calls = transport->calls();
    ASSERT_EQ(calls.size(), 6u);
    for (std::size_t i = 1; i < calls.size(); ++i) {
        EXPECT_GE(calls[i].at - calls[i - 1].at, std::chrono::milliseconds(250));
    }
}

TEST(HttpProvider, RetriesAlsoRespectMinimumInterval) {
    auto clock = std::make_shared<VirtualClock>();
    auto transport = std::make_shared<ScriptedTransport>(clock);
    transport->push_status(503);
    transport->push_status(200, testkit::completion_body("<label>1</label>"));
    auto cfg = http_config();
    cfg.min_request_interval_ms = 2000;
    auto opts = testkit::fake_http_options(transport, clock);
    opts.jitter = [] { return 0.0; };
    HttpProvider provider(cfg, opts);
    (void)provider.complete(request("x"));
    const auto calls = transport->calls();
    ASSERT_EQ(calls.size(), 2u);
    EXPECT_GE(calls[1].at - calls[0].at, std::chrono::milliseconds(2000));
}

TEST(HttpProvider, InFlightNeverExceedsBound) {
    std::atomic<int> current{0}, peak{0};
    auto transport = std::make_shared<ScriptedTransport>();
    transport->set_default([&] {
        const int now = ++current;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(3));
        --current;
        return HttpResponse{200, testkit::completion_body("<label>0</label>")};
    });
    auto cfg = http_config();
    cfg.max_in_flight = 3;
    auto opts = testkit::fake_http_options(transport, system_clock());
    HttpProvider provider(cfg, opts);
    std::vector<std::jthread> threads;
    for (int t = 0; t < 12; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 5; ++i) (void)provider.complete(request(std::to_string(t * 100 + i)));
        });
    }
    threads.clear();
    EXPECT_EQ(transport->calls().size(), 60u);
    EXPECT_LE(peak.load(), 3);
    EXPECT_GE(peak.load(), 2);
}

TEST(Cache, IdenticalRequestsHitInnerOnce) {
    auto inner = std::make_shared<CountingProvider>();
    auto cached = with_cache(inner, std::make_shared<MemoryCacheStore>());
    const auto a = cached->complete(request("same"));
    const auto b = cached->complete(request("same"));
    EXPECT_EQ(inner->calls.load(), 1);
    EXPECT_FALSE(a.cached);
    EXPECT_TRUE(b.cached);
    EXPECT_EQ(a.text, b.text);
}

TEST(Cache, TemperatureIsPartOfKey) {
    auto inner = std::make_shared<CountingProvider>();
    auto cached = with_cache(inner, std::make_shared<MemoryCacheStore>());
    (void)cached->complete(request("same", 0.0));
    (void)cached->complete(request("same", 0.5));
    EXPECT_EQ(inner->calls.load(), 2);
}

TEST(Cache, ClearedCacheCallsInnerAgain) {
    auto inner = std::make_shared<CountingProvider>();
    auto store = std::make_shared<MemoryCacheStore>();
    auto cached = with_cache(inner, store);
    (void)cached->complete(request("same"));
    store->clear();
    (void)cached->complete(request("same"));
    EXPECT_EQ(inner->calls.load(), 2);
}

TEST(Cache, StoreFailuresDegradeToPassThrough) {
    auto inner = std::make_shared<CountingProvider>();
    auto cached = with_cache(inner, std::make_shared<BrokenCache>());
    EXPECT_NO_THROW((void)cached->complete(request("a")));
    EXPECT_NO_THROW((void)cached->complete(request("a")));
    EXPECT_EQ(inner->calls.load(), 2);
}

TEST(Cache, PropagatesInnerErrors) {
    auto inner = std::make_shared<ReplayProvider>(ReplayFixture{});
    auto cached = with_cache(inner, std::make_shared<MemoryCacheStore>());
    EXPECT_EQ(thrown_code([&] { (void)cached->complete(request("a")); }), ErrorCode::MissingFixtureEntry);
}

TEST(RecordFixture, RecordThenReplay) {
    testkit::TempDir dir;
    const auto path = dir / "session.json";
    auto recorder = record_fixture(std::make_shared<MockProvider>(), path);
    std::vector<std::string> recorded;
    for (int i = 0; i < 3; ++i) recorded.push_back(recorder->complete(request("q" + std::to_string(i))).text);

    ReplayProvider replay(ReplayFixture::load(path));
    for (int i = 0; i < 3; ++i) EXPECT_EQ(replay.complete(request("q" + std::to_string(i))).text, recorded[i]);
    EXPECT_EQ(thrown_code([&] { (void)replay.complete(request("q3")); }), ErrorCode::MissingFixtureEntry);
}

TEST(RecordFixture, ReRecordingIsIdempotentAndKeepsEntries) {
    testkit::TempDir dir;
    const auto path = dir / "session.json";
    {
        auto recorder = record_fixture(std::make_shared<MockProvider>(), path);
        (void)recorder->complete(request("a"));
        (void)recorder->complete(request("b"));
    }
    const auto first = read_file(path);
    {
        auto recorder = record_fixture(std::make_shared<MockProvider>(), path);
        (void)recorder->complete(request("a"));
    }
    EXPECT_EQ(read_file(path), first);
    EXPECT_EQ(ReplayFixture::load(path).entries().size(), 2u);
}

TEST(RecordFixture, UnwritablePathFails) {
    testkit::TempDir dir;
    std::filesystem::create_directories(dir / "blocker");
    EXPECT_EQ(thrown_code([&] {
                  auto recorder = record_fixture(std::make_shared<MockProvider>(), dir / "blocker");
                  (void)recorder->complete(request("a"));
              }),
              ErrorCode::FixtureWriteFailed);
}

TEST(ProviderConfig, Validation) {
    ProviderConfig cfg;
    EXPECT_NO_THROW(validate(cfg));
    cfg.max_in_flight = 0;
    EXPECT_EQ(thrown_code([&] { validate(cfg); }), ErrorCode::InvalidConfig);
    cfg = {};
    cfg.max_retries = -1;
    EXPECT_EQ(thrown_code([&] { validate(cfg); }), ErrorCode::InvalidConfig);
    cfg = {};
    cfg.kind = ProviderKind::Http;
    EXPECT_EQ(thrown_code([&] { validate(cfg); }), ErrorCode::InvalidConfig);
    cfg = {};
    cfg.kind = ProviderKind::Replay;
    EXPECT_EQ(thrown_code([&] { (void)make_provider(cfg); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(make_provider(ProviderConfig{})->kind(), "mock");
}
