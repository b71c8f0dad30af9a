#include "tutorlens/gateway.hpp"

#include "tutorlens/error.hpp"
#include "tutorlens/fsutil.hpp"
#include "tutorlens/hash.hpp"
#include "tutorlens/strategy.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <thread>

namespace tutorlens {

using nlohmann::json;

std::string_view to_string(ProviderKind k) {
    switch (k) {
        case ProviderKind::Http: return "http";
        case ProviderKind::Mock: return "mock";
        case ProviderKind::Replay: return "replay";
    }
    return "mock";
}

std::optional<ProviderKind> provider_kind_from_string(std::string_view s) {
    if (s == "http") return ProviderKind::Http;
    if (s == "mock") return ProviderKind::Mock;
    if (s == "replay") return ProviderKind::Replay;
    return std::nullopt;
}

void validate(const ProviderConfig& cfg) {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (cfg.model_id.empty()) fail("model_id must be non-empty");
    if (!(cfg.temperature >= 0.0 && cfg.temperature <= 2.0)) fail("temperature must be within [0, 2]");
    if (cfg.max_retries < 0) fail("max_retries must be >= 0");
    if (cfg.max_in_flight < 1) fail("max_in_flight must be >= 1");
    if (cfg.min_request_interval_ms < 0) fail("min_request_interval_ms must be >= 0");
    if (cfg.kind == ProviderKind::Http) {
        if (cfg.base_url.empty()) fail("http provider requires base_url");
        if (cfg.api_key_ref.empty()) fail("http provider requires api_key_ref");
    }
    if (cfg.kind == ProviderKind::Replay && cfg.fixture_path.empty()) fail("replay provider requires a fixture path");
}

std::string request_hash(const CompletionRequest& req) {
    return prompt_hash(req.system_text, req.user_text, req.model_id);
}

std::string cache_key(const CompletionRequest& req) {
    char temp[40];
    std::snprintf(temp, sizeof temp, "%.17g", req.temperature);
    return FieldHasher{}.add(req.system_text).add(req.user_text).add(req.model_id).add(temp).hex();
}

// ---------------------------------------------------------------------------
// Clock

namespace {

class SteadyClock final : public Clock {
public:
    time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_until(time_point t) override { std::this_thread::sleep_until(t); }
};

bool retryable_status(int status) { return status == 408 || status == 429 || (status >= 500 && status <= 599); }

std::string chat_completions_url(std::string base) {
    while (!base.empty() && base.back() == '/') base.pop_back();
    return base + "/chat/completions";
}

}  // namespace

std::shared_ptr<Clock> system_clock() {
    static auto clock = std::make_shared<SteadyClock>();
    return clock;
}

// ---------------------------------------------------------------------------
// HttpProvider

HttpProvider::HttpProvider(ProviderConfig cfg, HttpProviderOptions opts) : cfg_(std::move(cfg)), opts_(std::move(opts)) {
    validate(cfg_);
    if (!opts_.transport) opts_.transport = make_default_transport();
    if (!opts_.clock) opts_.clock = system_clock();
    if (!opts_.jitter) {
        auto rng = std::make_shared<std::mt19937_64>(std::random_device{}());
        opts_.jitter = [rng] { return std::uniform_real_distribution<double>(0.0, 1.0)(*rng); };
    }
    if (!opts_.getenv) {
        opts_.getenv = [](const std::string& name) -> std::optional<std::string> {
            const char* v = std::getenv(name.c_str());
            if (v == nullptr || *v == '\0') return std::nullopt;
            return std::string(v);
        };
    }
}

void HttpProvider::acquire_slot() {
    std::unique_lock lock(mutex_);
    slot_freed_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
    ++in_flight_;
}

void HttpProvider::release_slot() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    slot_freed_.notify_one();
}

void HttpProvider::wait_for_dispatch_turn() {
    Clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        slot = opts_.clock->now();
        if (last_dispatch_ && cfg_.min_request_interval_ms > 0) {
            const auto earliest = *last_dispatch_ + std::chrono::milliseconds(cfg_.min_request_interval_ms);
            if (earliest > slot) slot = earliest;
        }
        last_dispatch_ = slot;
    }
    opts_.clock->sleep_until(slot);
}

CompletionResult HttpProvider::complete(const CompletionRequest& req) {
    const auto key = opts_.getenv(cfg_.api_key_ref);
    if (!key) throw Error(ErrorCode::AuthMissing, "environment variable " + cfg_.api_key_ref + " is not set");

    const json body = {
        {"model", req.model_id},
        {"messages", json::array({{{"role", "system"}, {"content", req.system_text}},
                                  {{"role", "user"}, {"content", req.user_text}}})},
        {"temperature", req.temperature},
    };
    const std::string payload = body.dump(-1, ' ', false, json::error_handler_t::replace);
    const std::string url = chat_completions_url(cfg_.base_url);
    const HttpTransport::Headers headers{{"Authorization", "Bearer " + *key}};

    std::string last_failure;
    const int max_attempts = cfg_.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (attempt > 1) {
            double u = 0.0;
            {
                std::lock_guard lock(jitter_mutex_);
                u = opts_.jitter();
            }
            const double cap_ms = static_cast<double>(kBackoffBase.count()) * std::ldexp(1.0, attempt - 2);
            opts_.clock->sleep_for(std::chrono::microseconds(static_cast<long long>(u * cap_ms * 1000.0)));
        }

        HttpResponse resp;
        acquire_slot();
        try {
            wait_for_dispatch_turn();
            resp = opts_.transport->post(url, payload, headers);
        } catch (const TransportError& e) {
            release_slot();
            last_failure = std::string("transport failure: ") + e.what();
            continue;
        } catch (...) {
            release_slot();
            throw;
        }
        release_slot();

        if (retryable_status(resp.status)) {
            last_failure = "HTTP " + std::to_string(resp.status);
            continue;
        }
        if (resp.status < 200 || resp.status > 299) {
            throw Error(ErrorCode::ProviderUnavailable,
                        "HTTP " + std::to_string(resp.status) + " (not retryable): " + resp.body.substr(0, 200));
        }
        try {
            const json j = json::parse(resp.body);
            return CompletionResult{j.at("choices").at(0).at("message").at("content").get<std::string>(), "http",
                                    attempt, false};
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ProviderUnavailable, std::string("malformed completion response: ") + e.what());
        }
    }
    throw Error(ErrorCode::ProviderUnavailable,
                "gave up after " + std::to_string(max_attempts) + " attempts; last: " + last_failure);
}

// ---------------------------------------------------------------------------
// Mock

StrategyLabel mock_label(std::string_view hex_hash) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 16 && i < hex_hash.size(); ++i) {
        const char c = hex_hash[i];
        const int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : 0;
        v = (v << 4) | static_cast<std::uint64_t>(d);
    }
    return kAllLabels[v % 3];
}

std::string mock_response(const CompletionRequest& req) {
    const std::string hash = request_hash(req);
    return "Mock assessment for request " + hash.substr(0, 12) +
           ". This deterministic reply stands in for a model completion.\n" +
           render_label_token(mock_label(hash));
}

CompletionResult MockProvider::complete(const CompletionRequest& req) {
    return CompletionResult{mock_response(req), "mock", 1, false};
}

// ---------------------------------------------------------------------------
// Replay

ReplayFixture::ReplayFixture(std::map<std::string, std::string> entries, std::string source_path)
    : entries_(std::move(entries)), source_path_(std::move(source_path)) {}

ReplayFixture ReplayFixture::parse(std::string_view json_text, std::string source_path) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, "fixture " + source_path + " is not JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "fixture " + source_path + " must be a JSON object");
    std::map<std::string, std::string> entries;
    for (const auto& [hash, text] : j.items()) {
        if (!text.is_string()) throw Error(ErrorCode::InvalidConfig, "fixture entry " + hash + " is not a string");
        entries.emplace(hash, text.get<std::string>());
    }
    return ReplayFixture(std::move(entries), std::move(source_path));
}

ReplayFixture ReplayFixture::load(const std::filesystem::path& path) {
    const auto text = read_file(path);
    if (!text) throw Error(ErrorCode::InvalidConfig, "cannot read fixture " + path.string());
    return parse(*text, path.string());
}

std::string ReplayFixture::dump() const {
    json j = json::object();
    for (const auto& [hash, text] : entries_) j[hash] = text;
    return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

const std::string* ReplayFixture::find(const std::string& hash) const {
    const auto it = entries_.find(hash);
    return it == entries_.end() ? nullptr : &it->second;
}

ReplayProvider::ReplayProvider(ReplayFixture fixture) : fixture_(std::move(fixture)) {}

CompletionResult ReplayProvider::complete(const CompletionRequest& req) {
    const std::string hash = request_hash(req);
    if (const auto* text = fixture_.find(hash)) return CompletionResult{*text, "replay", 1, false};
    throw Error(ErrorCode::MissingFixtureEntry, hash);
}

// ---------------------------------------------------------------------------
// Cache

std::optional<std::string> MemoryCacheStore::get(const std::string& key) {
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void MemoryCacheStore::put(const std::string& key, const std::string& text) {
    std::unique_lock lock(mutex_);
    entries_[key] = text;
}

void MemoryCacheStore::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

namespace {

class CachingProvider final : public Provider {
public:
    CachingProvider(ProviderPtr inner, std::shared_ptr<CacheStore> store)
        : inner_(std::move(inner)), store_(std::move(store)) {}

    CompletionResult complete(const CompletionRequest& req) override {
        const std::string key = cache_key(req);
        try {
            if (auto hit = store_->get(key)) return CompletionResult{std::move(*hit), std::string(inner_->kind()), 1, true};
        } catch (const std::exception& e) {
            std::cerr << "tutorlens: cache read failed, bypassing: " << e.what() << '\n';
        }
        CompletionResult result = inner_->complete(req);
        try {
            store_->put(key, result.text);
        } catch (const std::exception& e) {
            std::cerr << "tutorlens: cache write failed, bypassing: " << e.what() << '\n';
        }
        return result;
    }

    [[nodiscard]] std::string_view kind() const override { return inner_->kind(); }

private:
    ProviderPtr inner_;
    std::shared_ptr<CacheStore> store_;
};

class RecordingProvider final : public Provider {
public:
    RecordingProvider(ProviderPtr inner, std::filesystem::path path) : inner_(std::move(inner)), path_(std::move(path)) {
        std::error_code ec;
        if (std::filesystem::exists(path_, ec)) {
            try {
                entries_ = ReplayFixture::load(path_).entries();
            } catch (const Error& e) {
                throw Error(ErrorCode::FixtureWriteFailed, std::string("existing fixture unusable: ") + e.what());
            }
        }
        flush();
    }

    CompletionResult complete(const CompletionRequest& req) override {
        CompletionResult result = inner_->complete(req);
        std::lock_guard lock(mutex_);
        entries_[request_hash(req)] = result.text;
        flush();
        return result;
    }

    [[nodiscard]] std::string_view kind() const override { return inner_->kind(); }

private:
    void flush() {
        try {
            write_file_atomic(path_, ReplayFixture(entries_, path_.string()).dump());
        } catch (const Error& e) {
            throw Error(ErrorCode::FixtureWriteFailed, e.what());
        }
    }

    ProviderPtr inner_;
    std::filesystem::path path_;
    std::mutex mutex_;
    std::map<std::string, std::string> entries_;
};

}  // namespace

ProviderPtr with_cache(ProviderPtr inner, std::shared_ptr<CacheStore> store) {
    return std::make_shared<CachingProvider>(std::move(inner), std::move(store));
}

ProviderPtr record_fixture(ProviderPtr inner, const std::filesystem::path& path) {
    return std::make_shared<RecordingProvider>(std::move(inner), path);
}

ProviderPtr make_provider(const ProviderConfig& cfg, HttpProviderOptions opts) {
    validate(cfg);
    switch (cfg.kind) {
        case ProviderKind::Http: return std::make_shared<HttpProvider>(cfg, std::move(opts));
        case ProviderKind::Mock: return std::make_shared<MockProvider>();
        case ProviderKind::Replay: return std::make_shared<ReplayProvider>(ReplayFixture::load(cfg.fixture_path));
    }
    throw Error(ErrorCode::InvalidConfig, "unknown provider kind");
}

}  // namespace tutorlens
