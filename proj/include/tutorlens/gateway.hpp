#pragma once

#include "tutorlens/model.hpp"

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tutorlens {

enum class ProviderKind { Http, Mock, Replay };

std::string_view to_string(ProviderKind k);
std::optional<ProviderKind> provider_kind_from_string(std::string_view s);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Mock;
    std::string model_id = "gpt-3.5-turbo";
    std::string base_url;                         // http only
    std::string api_key_ref = "TUTORLENS_API_KEY";  // name of the env var, never the secret
    double temperature = 0.0;
    int max_retries = 3;
    int max_in_flight = 4;
    int min_request_interval_ms = 0;
    std::string fixture_path;                     // replay only

    friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

// Throws Error(InvalidConfig).
void validate(const ProviderConfig& cfg);

struct CompletionRequest {
    std::string system_text;
    std::string user_text;
    std::string model_id;
    double temperature = 0.0;
};

struct CompletionResult {
    std::string text;
    std::string provider_kind;
    int attempts = 1;
    bool cached = false;
};

// Identity used by replay fixtures and the mock; equals prompt_hash().
std::string request_hash(const CompletionRequest& req);
// Memoization key; also covers temperature.
std::string cache_key(const CompletionRequest& req);

class Provider {
public:
    virtual ~Provider() = default;
    virtual CompletionResult complete(const CompletionRequest& req) = 0;
    [[nodiscard]] virtual std::string_view kind() const = 0;
};

using ProviderPtr = std::shared_ptr<Provider>;

// ---------------------------------------------------------------------------
// HTTP backend seams

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Timeouts and connection failures.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HttpTransport {
public:
    using Headers = std::vector<std::pair<std::string, std::string>>;
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& body, const Headers& headers) = 0;
};

std::shared_ptr<HttpTransport> make_default_transport(std::chrono::milliseconds timeout = std::chrono::seconds(120));

class Clock {
public:
    using time_point = std::chrono::steady_clock::time_point;
    using duration = std::chrono::steady_clock::duration;
    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_until(time_point t) = 0;
    void sleep_for(duration d) { sleep_until(now() + d); }
};

std::shared_ptr<Clock> system_clock();

struct HttpProviderOptions {
    std::shared_ptr<HttpTransport> transport;   // default: cpp-httplib
    std::shared_ptr<Clock> clock;               // default: steady clock
    std::function<double()> jitter;             // uniform [0,1); default: mt19937
    std::function<std::optional<std::string>(const std::string&)> getenv;  // default: std::getenv
};

inline constexpr std::chrono::milliseconds kBackoffBase{500};

// Chat-completions client. Retries 408/429/5xx/transport failures with full
// jitter exponential backoff; serializes dispatch start times at least
// min_request_interval_ms apart and caps concurrent requests at max_in_flight.
class HttpProvider final : public Provider {
public:
    HttpProvider(ProviderConfig cfg, HttpProviderOptions opts = {});

    CompletionResult complete(const CompletionRequest& req) override;
    [[nodiscard]] std::string_view kind() const override { return "http"; }

private:
    void acquire_slot();
    void release_slot();
    void wait_for_dispatch_turn();

    ProviderConfig cfg_;
    HttpProviderOptions opts_;
    std::mutex mutex_;
    std::condition_variable slot_freed_;
    int in_flight_ = 0;
    std::optional<Clock::time_point> last_dispatch_;
    std::mutex jitter_mutex_;
};

// Deterministic offline backend: a fixed template whose label is
// mock_label(request_hash(req)).
class MockProvider final : public Provider {
public:
    CompletionResult complete(const CompletionRequest& req) override;
    [[nodiscard]] std::string_view kind() const override { return "mock"; }
};

// First 8 digest bytes as a big-endian integer, mod 3, mapped onto (-1, 0, 1).
StrategyLabel mock_label(std::string_view hex_hash);
std::string mock_response(const CompletionRequest& req);

// hash -> response text; immutable once loaded.
class ReplayFixture {
public:
    ReplayFixture() = default;
    ReplayFixture(std::map<std::string, std::string> entries, std::string source_path);

    // Throws Error(InvalidConfig) when the file is missing or malformed.
    static ReplayFixture load(const std::filesystem::path& path);
    static ReplayFixture parse(std::string_view json_text, std::string source_path = {});
    [[nodiscard]] std::string dump() const;

    [[nodiscard]] const std::string* find(const std::string& hash) const;
    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return entries_; }
    [[nodiscard]] const std::string& source_path() const { return source_path_; }

private:
    std::map<std::string, std::string> entries_;
    std::string source_path_;
};

class ReplayProvider final : public Provider {
public:
    explicit ReplayProvider(ReplayFixture fixture);
    CompletionResult complete(const CompletionRequest& req) override;
    [[nodiscard]] std::string_view kind() const override { return "replay"; }

private:
    ReplayFixture fixture_;
};

class CacheStore {
public:
    virtual ~CacheStore() = default;
    virtual std::optional<std::string> get(const std::string& key) = 0;
    virtual void put(const std::string& key, const std::string& text) = 0;
    virtual void clear() = 0;
};

class MemoryCacheStore final : public CacheStore {
public:
    std::optional<std::string> get(const std::string& key) override;
    void put(const std::string& key, const std::string& text) override;
    void clear() override;

private:
    std::shared_mutex mutex_;
    std::map<std::string, std::string> entries_;
};

// Memoizes by cache_key(req). Store failures are logged and bypassed.
ProviderPtr with_cache(ProviderPtr inner, std::shared_ptr<CacheStore> store);

// Upserts every successful response into the fixture file at path (existing
// entries are kept). Throws Error(FixtureWriteFailed).
ProviderPtr record_fixture(ProviderPtr inner, const std::filesystem::path& path);

// Builds the backend named by cfg.kind; replay loads cfg.fixture_path.
ProviderPtr make_provider(const ProviderConfig& cfg, HttpProviderOptions opts = {});

}  // namespace tutorlens
