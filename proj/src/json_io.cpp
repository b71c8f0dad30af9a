#include "tutorlens/json_io.hpp"

#include "tutorlens/error.hpp"

namespace tutorlens::json_io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::BadRequest, what); }

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
    return j.at(key);
}

std::string str(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::size_t uint_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number_unsigned()) bad(std::string("field '") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Timestamp timestamp_field(const json& j, const char* key) {
    const auto ts = parse_timestamp(str(j, key));
    if (!ts) bad(std::string("field '") + key + "' is not an ISO-8601 UTC timestamp");
    return *ts;
}

json label_counts(const std::array<std::size_t, 3>& c) { return json{{"-1", c[0]}, {"0", c[1]}, {"1", c[2]}}; }

}  // namespace

std::string dump(const json& j) { return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n"; }

json parse(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
}

json to_json(const Transcript& t) {
    json utterances = json::array();
    for (const auto& u : t.utterances) {
        utterances.push_back({{"index", u.index}, {"speaker", to_string(u.speaker)}, {"text", u.text}});
    }
    return {{"id", t.id}, {"title", t.title}, {"utterances", std::move(utterances)}};
}

Transcript transcript_from_json(const json& j) {
    Transcript t;
    t.id = str(j, "id");
    t.title = j.contains("title") && j.at("title").is_string() ? j.at("title").get<std::string>() : t.id;
    const json& us = field(j, "utterances");
    if (!us.is_array()) bad("'utterances' must be an array");
    for (std::size_t i = 0; i < us.size(); ++i) {
        const json& u = us[i];
        const auto speaker = speaker_from_string(str(u, "speaker"));
        if (!speaker) throw Error(ErrorCode::UnknownSpeaker, "unknown speaker", i + 1);
        const std::size_t index = u.contains("index") ? uint_field(u, "index") : i;
        t.utterances.push_back(Utterance{index, *speaker, str(u, "text")});
    }
    validate(t);
    return t;
}

json to_json(const ProviderConfig& cfg) {
    return {{"kind", to_string(cfg.kind)},
            {"model_id", cfg.model_id},
            {"base_url", cfg.base_url},
            {"api_key_ref", cfg.api_key_ref},
            {"temperature", cfg.temperature},
            {"max_retries", cfg.max_retries},
            {"max_in_flight", cfg.max_in_flight},
            {"min_request_interval_ms", cfg.min_request_interval_ms},
            {"fixture_path", cfg.fixture_path}};
}

ProviderConfig provider_config_from_json(const json& j, const ProviderConfig& base) {
    auto invalid = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (!j.is_object()) invalid("provider must be an object");
    ProviderConfig cfg = base;
    auto get_str = [&](const char* key, std::string& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_string()) invalid(std::string("provider.") + key + " must be a string");
        out = j.at(key).get<std::string>();
    };
    auto get_int = [&](const char* key, int& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number_integer()) invalid(std::string("provider.") + key + " must be an integer");
        const auto v = j.at(key).get<long long>();
        if (v < -1'000'000'000LL || v > 1'000'000'000LL) invalid(std::string("provider.") + key + " out of range");
        out = static_cast<int>(v);
    };
    if (j.contains("kind")) {
        if (!j.at("kind").is_string()) invalid("provider.kind must be a string");
        const auto kind = provider_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) invalid("unknown provider kind '" + j.at("kind").get<std::string>() + "'");
        cfg.kind = *kind;
    }
    get_str("model_id", cfg.model_id);
    get_str("base_url", cfg.base_url);
    get_str("api_key_ref", cfg.api_key_ref);
    get_str("fixture_path", cfg.fixture_path);
    if (j.contains("temperature")) {
        if (!j.at("temperature").is_number()) invalid("provider.temperature must be a number");
        cfg.temperature = j.at("temperature").get<double>();
    }
    get_int("max_retries", cfg.max_retries);
    get_int("max_in_flight", cfg.max_in_flight);
    get_int("min_request_interval_ms", cfg.min_request_interval_ms);
    return cfg;
}

std::vector<StrategyId> strategy_ids_from_json(const json& j) {
    if (j.is_string() && j.get<std::string>() == "all") return {kAllStrategies.begin(), kAllStrategies.end()};
    if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "strategy_ids must be an array of slugs or \"all\"");
    std::vector<StrategyId> out;
    for (const auto& s : j) {
        const auto sid = s.is_string() ? strategy_from_slug(s.get<std::string>()) : std::nullopt;
        if (!sid) throw Error(ErrorCode::InvalidConfig, "unknown strategy '" + s.dump() + "'");
        out.push_back(*sid);
    }
    return out;
}

json to_json(const RunConfig& cfg) {
    json ids = json::array();
    for (StrategyId s : cfg.strategy_ids) ids.push_back(slug(s));
    return {{"run_id", cfg.run_id},
            {"created_at", format_timestamp(cfg.created_at)},
            {"strategy_ids", std::move(ids)},
            {"context_k", cfg.context_k},
            {"provider", to_json(cfg.provider)}};
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.run_id = str(j, "run_id");
    cfg.created_at = timestamp_field(j, "created_at");
    cfg.strategy_ids = strategy_ids_from_json(field(j, "strategy_ids"));
    cfg.context_k = uint_field(j, "context_k");
    cfg.provider = provider_config_from_json(field(j, "provider"));
    return cfg;
}

json to_json(const ClassificationRecord& r) {
    json error = nullptr;
    if (r.error) error = {{"code", to_string(r.error->code)}, {"message", r.error->message}};
    return {{"transcript_id", r.transcript_id},
            {"utterance_index", r.utterance_index},
            {"strategy_id", slug(r.strategy_id)},
            {"label", r.label ? json(to_int(*r.label)) : json(nullptr)},
            {"rationale", r.rationale},
            {"prompt_hash", r.prompt_hash},
            {"attempts", r.attempts},
            {"error", std::move(error)}};
}

ClassificationRecord record_from_json(const json& j) {
    ClassificationRecord r;
    r.transcript_id = str(j, "transcript_id");
    r.utterance_index = uint_field(j, "utterance_index");
    const auto sid = strategy_from_slug(str(j, "strategy_id"));
    if (!sid) bad("unknown strategy_id");
    r.strategy_id = *sid;
    const json& label = field(j, "label");
    if (!label.is_null()) {
        const auto l = label.is_number_integer() ? label_from_int(label.get<long long>()) : std::nullopt;
        if (!l) bad("label must be -1, 0, 1 or null");
        r.label = *l;
    }
    r.rationale = str(j, "rationale");
    r.prompt_hash = str(j, "prompt_hash");
    const json& attempts = field(j, "attempts");
    if (!attempts.is_number_integer()) bad("attempts must be an integer");
    r.attempts = attempts.get<int>();
    const json& err = field(j, "error");
    if (!err.is_null()) {
        const auto code = error_code_from_string(str(err, "code"));
        if (!code) bad("unknown error code");
        r.error = RecordError{*code, str(err, "message")};
    }
    if (r.label.has_value() == r.error.has_value()) bad("record must carry exactly one of label or error");
    return r;
}

json to_json(const ClassificationRun& run) {
    json records = json::array();
    for (const auto& r : run.records) records.push_back(to_json(r));
    return {{"config", to_json(run.config)},
            {"transcript_id", run.transcript_id},
            {"records", std::move(records)},
            {"completed_at", format_timestamp(run.completed_at)}};
}

ClassificationRun run_from_json(const json& j) {
    ClassificationRun run;
    run.config = run_config_from_json(field(j, "config"));
    run.transcript_id = str(j, "transcript_id");
    const json& records = field(j, "records");
    if (!records.is_array()) bad("'records' must be an array");
    for (const auto& r : records) run.records.push_back(record_from_json(r));
    run.completed_at = timestamp_field(j, "completed_at");
    return run;
}

json to_json(const PatternsSummary& p) {
    json per = json::array();
    for (const auto& s : p.per_strategy) {
        json proportions = nullptr;
        if (s.proportions) {
            const auto& pr = *s.proportions;
            proportions = {{"-1", pr[0]}, {"0", pr[1]}, {"1", pr[2]}};
        }
        per.push_back({{"strategy", slug(s.strategy_id)},
                       {"display_name", find_strategy(s.strategy_id).display_name},
                       {"counts", label_counts(s.counts)},
                       {"labeled_total", s.labeled_total},
                       {"error_total", s.error_total},
                       {"proportions", std::move(proportions)}});
    }
    return {{"run_count", p.run_count}, {"per_strategy", std::move(per)}};
}

json to_json(const StrategyMetrics& m) {
    json matrix = json::array();
    for (const auto& row : m.matrix.counts) matrix.push_back(row);
    json per_class = json::object();
    for (StrategyLabel c : kAllLabels) {
        const auto& pc = m.per_class[label_slot(c)];
        per_class[std::to_string(to_int(c))] = {{"tnr", optional_number(pc.tnr)},
                                                {"recall", optional_number(pc.recall)}};
    }
    return {{"strategy", slug(m.strategy_id)},
            {"tnr", optional_number(m.tnr)},
            {"recall", optional_number(m.recall)},
            {"support", label_counts(m.support_per_class)},
            {"matrix", std::move(matrix)},
            {"per_class", std::move(per_class)}};
}

json to_json(const MetricsReport& r) {
    json per = json::array();
    for (const auto& m : r.per_strategy) per.push_back(to_json(m));
    return {{"transcript_id", r.transcript_id},
            {"matched_pairs", r.matched_pairs},
            {"unmatched_gold", r.unmatched_gold},
            {"unmatched_predictions", r.unmatched_predictions},
            {"label_order", json::array({-1, 0, 1})},
            {"per_strategy", std::move(per)}};
}

json to_json(const Strategy& s) {
    json exemplars = json::array();
    for (const auto& e : s.exemplars) {
        json context = json::array();
        for (const auto& line : e.context) context.push_back({{"speaker", to_string(line.speaker)}, {"text", line.text}});
        exemplars.push_back({{"context", std::move(context)}, {"rationale", e.rationale}, {"label", to_int(e.label)}});
    }
    return {{"slug", slug(s.id)},
            {"display_name", s.display_name},
            {"definition", s.definition},
            {"exemplars", std::move(exemplars)}};
}

json reference_metrics_json() {
    json out = json::array();
    for (const auto& r : kReferenceMetrics) {
        out.push_back({{"strategy", slug(r.strategy_id)},
                       {"display_name", find_strategy(r.strategy_id).display_name},
                       {"tnr", r.tnr},
                       {"recall", r.recall}});
    }
    return {{"source", "published GPT-3.5 few-shot results; display only"}, {"per_strategy", std::move(out)}};
}

}  // namespace tutorlens::json_io
