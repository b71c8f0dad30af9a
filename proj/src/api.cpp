#include "tutorlens/api.hpp"

#include "tutorlens/evaluation.hpp"
#include "tutorlens/hash.hpp"
#include "tutorlens/json_io.hpp"
#include "tutorlens/results.hpp"
#include "tutorlens/text.hpp"

#include <iostream>

namespace tutorlens {

using nlohmann::json;

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyTranscript:
        case ErrorCode::BadHeader:
        case ErrorCode::UnknownSpeaker:
        case ErrorCode::NonContiguousTurns:
        case ErrorCode::MalformedRow:
        case ErrorCode::UnknownStrategy:
        case ErrorCode::InvalidLabel:
        case ErrorCode::DuplicateAnnotation:
        case ErrorCode::TargetNotTutor:
        case ErrorCode::IndexOutOfRange:
        case ErrorCode::UnparseableLabel:
        case ErrorCode::InvalidId:
        case ErrorCode::BadRequest: return 400;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::IdConflict:
        case ErrorCode::TranscriptMismatch:
        case ErrorCode::RunInProgress: return 409;
        case ErrorCode::InvalidConfig: return 422;
        case ErrorCode::ProviderUnavailable:
        case ErrorCode::MissingFixtureEntry:
        case ErrorCode::AuthMissing: return 502;
        case ErrorCode::InvalidStrategyContent:
        case ErrorCode::FixtureWriteFailed:
        case ErrorCode::StoreCorrupt:
        case ErrorCode::StorageFailed: return 500;
    }
    return 500;
}

ApiError to_api_error(const Error& e) { return ApiError{http_status(e.code()), std::string(to_string(e.code())), e.what()}; }

namespace {

ApiResponse json_response(int status, const json& body) { return ApiResponse{status, "application/json", json_io::dump(body), {}}; }

ApiResponse error_response(const ApiError& e) {
    return json_response(e.status, json{{"status", e.status}, {"code", e.code}, {"message", e.message}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

std::optional<std::string> param(const ApiRequest& req, const std::string& key) {
    const auto it = req.params.find(key);
    if (it == req.params.end()) return std::nullopt;
    return it->second;
}

bool looks_like_json(const ApiRequest& req) {
    if (req.content_type.find("json") != std::string::npos) return true;
    if (!req.content_type.empty()) return false;
    const auto body = text::trim(req.body);
    return !body.empty() && body.front() == '{';
}

bool truthy(const std::optional<std::string>& v) { return v && (*v == "1" || *v == "true" || *v == "yes"); }

bool all_provider_failures(const ClassificationRun& run) {
    if (run.records.empty()) return false;
    for (const auto& r : run.records) {
        if (!r.error) return false;
        const auto c = r.error->code;
        if (c != ErrorCode::ProviderUnavailable && c != ErrorCode::AuthMissing && c != ErrorCode::MissingFixtureEntry) {
            return false;
        }
    }
    return true;
}

json run_summary(const ClassificationRun& run) {
    std::size_t errors = 0;
    for (const auto& r : run.records) errors += r.error ? 1 : 0;
    return {{"run_id", run.config.run_id},
            {"transcript_id", run.transcript_id},
            {"status", "completed"},
            {"created_at", format_timestamp(run.config.created_at)},
            {"completed_at", format_timestamp(run.completed_at)},
            {"record_count", run.records.size()},
            {"error_count", errors}};
}

ApiResponse not_found(const std::string& what) { return error_response(to_api_error(Error(ErrorCode::NotFound, what))); }

}  // namespace

Service::Service(std::shared_ptr<Store> store, ServiceOptions options)
    : store_(std::move(store)), options_(std::move(options)) {}

Service::~Service() {
    for (auto& t : workers_) {
        if (t.joinable()) t.join();
    }
}

void Service::wait_for_jobs() {
    std::unique_lock lock(jobs_mutex_);
    jobs_changed_.wait(lock, [&] { return active_transcripts_.empty(); });
}

ApiResponse Service::handle(const ApiRequest& req) {
    ApiResponse resp;
    try {
        resp = route(req);
    } catch (const Error& e) {
        resp = error_response(to_api_error(e));
    } catch (const json::exception& e) {
        resp = error_response(ApiError{400, "BadRequest", e.what()});
    } catch (const std::exception& e) {
        std::cerr << "tutorlens: internal error on " << req.method << ' ' << req.path << ": " << e.what() << '\n';
        resp = error_response(ApiError{500, "Internal", e.what()});
    }
    resp.headers.emplace_back("Access-Control-Allow-Origin", "*");
    resp.headers.emplace_back("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    resp.headers.emplace_back("Access-Control-Allow-Headers", "Content-Type");
    return resp;
}

ApiResponse Service::route(const ApiRequest& req) {
    if (req.method == "OPTIONS") return ApiResponse{204, "text/plain", "", {}};
    const auto seg = split_path(req.path);
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";

    if (seg.size() == 1) {
        const auto& s0 = seg[0];
        if (get && s0 == "health") return json_response(200, {{"status", "ok"}});
        if (get && s0 == "strategies") {
            json list = json::array();
            for (const auto& s : catalog()) list.push_back(json_io::to_json(s));
            return json_response(200, {{"strategies", std::move(list)}});
        }
        if (get && s0 == "reference-metrics") return json_response(200, json_io::reference_metrics_json());
        if (get && s0 == "patterns") return json_response(200, json_io::to_json(patterns_summary(store_->list_runs())));
        if (get && s0 == "transcripts") {
            json list = json::array();
            for (const auto& t : store_->list_transcripts()) {
                list.push_back({{"id", t.id}, {"title", t.title}, {"utterance_count", t.utterance_count}});
            }
            return json_response(200, {{"transcripts", std::move(list)}});
        }
        if (post && s0 == "transcripts") return post_transcript(req);
        if (get && s0 == "runs") return list_runs(req);
        if (post && s0 == "gold") return post_gold(req);
        if (get && s0 == "gold") return json_response(200, {{"gold_sets", store_->list_gold()}});
        if (post && s0 == "evaluations") return post_evaluation(req);
    }
    if (seg.size() == 2) {
        if (get && seg[0] == "transcripts") return json_response(200, json_io::to_json(store_->get_transcript(seg[1])));
        if (get && seg[0] == "runs") return get_run(seg[1]);
        if (get && seg[0] == "results" && seg[1] == "table") return all_results_table(req);
    }
    if (seg.size() == 3) {
        if (post && seg[0] == "transcripts" && seg[2] == "classify") return start_classification(seg[1], req);
        if (get && seg[0] == "transcripts" && seg[2] == "runs") {
            ApiRequest scoped = req;
            scoped.params = {{"transcript_id", seg[1]}};
            if (!store_->has_transcript(seg[1])) return not_found("transcript '" + seg[1] + "'");
            return list_runs(scoped);
        }
        if (get && seg[0] == "runs" && seg[2] == "table") return run_table(seg[1], req);
        if (get && seg[0] == "runs" && seg[2] == "export") return export_run(seg[1], req);
    }
    return not_found("no route for " + req.method + " " + req.path);
}

ApiResponse Service::post_transcript(const ApiRequest& req) {
    std::optional<std::string> id = param(req, "id");
    std::optional<std::string> title = param(req, "title");
    Transcript t;
    if (looks_like_json(req)) {
        const json body = json_io::parse(req.body);
        if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
        if (!id && body.contains("id") && body.at("id").is_string()) id = body.at("id").get<std::string>();
        if (!title && body.contains("title") && body.at("title").is_string()) title = body.at("title").get<std::string>();
        if (body.contains("csv")) {
            if (!body.at("csv").is_string()) throw Error(ErrorCode::BadRequest, "'csv' must be a string");
            t = parse_transcript_csv(body.at("csv").get<std::string>(), "pending", title.value_or(""));
        } else {
            json doc = body;
            doc["id"] = "pending";
            t = json_io::transcript_from_json(doc);
            if (title) t.title = *title;
        }
    } else {
        t = parse_transcript_csv(req.body, "pending", title.value_or(""));
    }
    if (!id) id = "t-" + sha256_hex(serialize_transcript_csv(t)).substr(0, 12);
    if (!text::is_safe_id(*id)) throw Error(ErrorCode::InvalidId, "id '" + *id + "' must be 1-128 chars of [a-z0-9_-]");
    if (!title) t.title = *id;
    t.id = *id;
    store_->put_transcript(t, truthy(param(req, "overwrite")));
    return json_response(201, {{"id", t.id}, {"utterance_count", t.utterances.size()}});
}

ApiResponse Service::start_classification(const std::string& transcript_id, const ApiRequest& req) {
    Transcript t = store_->get_transcript(transcript_id);

    RunConfig cfg;
    json body = json::object();
    if (!text::trim(req.body).empty()) body = json_io::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
    if (body.contains("strategy_ids")) cfg.strategy_ids = json_io::strategy_ids_from_json(body.at("strategy_ids"));
    if (body.contains("context_k")) {
        if (!body.at("context_k").is_number_unsigned()) {
            throw Error(ErrorCode::InvalidConfig, "context_k must be a non-negative integer");
        }
        cfg.context_k = body.at("context_k").get<std::size_t>();
    }
    if (body.contains("provider")) cfg.provider = json_io::provider_config_from_json(body.at("provider"));
    cfg.run_id = generate_run_id();
    cfg.created_at = now_timestamp();
    validate(cfg);
    // fail fast on unusable provider settings (e.g. missing fixture file)
    (void)make_provider(cfg.provider, options_.provider_options);

    std::lock_guard lock(jobs_mutex_);
    if (active_transcripts_.count(transcript_id)) {
        throw Error(ErrorCode::RunInProgress, "a classification run is already active for '" + transcript_id + "'");
    }
    active_transcripts_.insert(transcript_id);
    jobs_[cfg.run_id] = Job{transcript_id, JobState::Running, std::nullopt};
    const std::string run_id = cfg.run_id;
    workers_.emplace_back(&Service::run_job, this, run_id, std::move(t), std::move(cfg));
    return json_response(202, {{"run_id", run_id}, {"status", "running"}});
}

void Service::run_job(std::string run_id, Transcript transcript, RunConfig cfg) {
    std::optional<ApiError> failure;
    try {
        ProviderPtr provider = make_provider(cfg.provider, options_.provider_options);
        if (cfg.provider.kind == ProviderKind::Http) provider = with_cache(provider, store_->cache());
        classify_transcript(*provider, transcript, cfg, store_.get());
    } catch (const Error& e) {
        failure = to_api_error(e);
    } catch (const std::exception& e) {
        failure = ApiError{500, "Internal", e.what()};
    }
    {
        std::lock_guard lock(jobs_mutex_);
        auto& job = jobs_[run_id];
        job.state = failure ? JobState::Failed : JobState::Completed;
        job.failure = failure;
        active_transcripts_.erase(transcript.id);
    }
    jobs_changed_.notify_all();
}

ApiResponse Service::get_run(const std::string& run_id) {
    {
        std::lock_guard lock(jobs_mutex_);
        const auto it = jobs_.find(run_id);
        if (it != jobs_.end()) {
            if (it->second.state == JobState::Running) {
                return json_response(202, {{"run_id", run_id}, {"transcript_id", it->second.transcript_id},
                                           {"status", "running"}});
            }
            if (it->second.state == JobState::Failed) {
                const ApiError& f = *it->second.failure;
                return json_response(f.status, {{"run_id", run_id}, {"status", "failed"}, {"code", f.code},
                                                {"message", f.message}});
            }
        }
    }
    const ClassificationRun run = store_->get_run(run_id);
    json body = json_io::to_json(run);
    if (all_provider_failures(run)) {
        const auto& e = *run.records.front().error;
        body["status"] = "failed";
        body["code"] = to_string(e.code);
        body["message"] = e.message;
        return json_response(502, body);
    }
    body["status"] = "completed";
    return json_response(200, body);
}

ApiResponse Service::list_runs(const ApiRequest& req) {
    const auto transcript = param(req, "transcript_id");
    json list = json::array();
    std::set<std::string> listed;
    for (const auto& run : store_->list_runs(transcript)) {
        listed.insert(run.config.run_id);
        list.push_back(run_summary(run));
    }
    std::lock_guard lock(jobs_mutex_);
    for (const auto& [id, job] : jobs_) {
        if (listed.count(id) || job.state == JobState::Completed) continue;
        if (transcript && job.transcript_id != *transcript) continue;
        list.push_back({{"run_id", id}, {"transcript_id", job.transcript_id},
                        {"status", job.state == JobState::Running ? "running" : "failed"}});
    }
    return json_response(200, {{"runs", std::move(list)}});
}

ApiResponse Service::run_table(const std::string& run_id, const ApiRequest& req) {
    const ClassificationRun run = store_->get_run(run_id);
    const TableFilter filter = table_filter_from_params(req.params);
    const auto rows = filter_rows(table_rows(run, store_->get_transcript(run.transcript_id)), filter);
    json list = json::array();
    for (const auto& r : rows) list.push_back(to_json(r));
    return json_response(200, {{"run_id", run_id}, {"row_count", rows.size()}, {"rows", std::move(list)}});
}

ApiResponse Service::all_results_table(const ApiRequest& req) {
    const TableFilter filter = table_filter_from_params(req.params);
    json list = json::array();
    std::size_t count = 0;
    std::map<std::string, Transcript> transcripts;
    for (const auto& run : store_->list_runs()) {
        auto it = transcripts.find(run.transcript_id);
        if (it == transcripts.end()) {
            it = transcripts.emplace(run.transcript_id, store_->get_transcript(run.transcript_id)).first;
        }
        for (const auto& r : filter_rows(table_rows(run, it->second), filter)) {
            list.push_back(to_json(r));
            ++count;
        }
    }
    return json_response(200, {{"row_count", count}, {"rows", std::move(list)}});
}

ApiResponse Service::export_run(const std::string& run_id, const ApiRequest& req) {
    const ClassificationRun run = store_->get_run(run_id);
    const auto format = param(req, "format").value_or("csv");
    if (format != "csv") throw Error(ErrorCode::BadRequest, "unsupported export format '" + format + "'");
    const auto rows = table_rows(run, store_->get_transcript(run.transcript_id));
    ApiResponse resp{200, "text/csv; charset=utf-8", export_csv(rows), {}};
    resp.headers.emplace_back("Content-Disposition", "attachment; filename=\"" + run_id + ".csv\"");
    return resp;
}

ApiResponse Service::post_gold(const ApiRequest& req) {
    const auto id = param(req, "id");
    if (!id) throw Error(ErrorCode::BadRequest, "missing ?id= for the gold set");
    const auto gold = parse_gold_csv(req.body);
    store_->put_gold(*id, gold, truthy(param(req, "overwrite")));
    return json_response(201, {{"id", *id}, {"annotation_count", gold.size()}});
}

ApiResponse Service::post_evaluation(const ApiRequest& req) {
    std::optional<std::string> run_id = param(req, "run_id");
    std::vector<GoldAnnotation> gold;
    if (looks_like_json(req)) {
        const json body = json_io::parse(req.body);
        if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
        if (!run_id && body.contains("run_id") && body.at("run_id").is_string()) run_id = body.at("run_id").get<std::string>();
        if (!run_id) throw Error(ErrorCode::BadRequest, "missing run_id");
        if (body.contains("gold_csv") && body.at("gold_csv").is_string()) {
            gold = parse_gold_csv(body.at("gold_csv").get<std::string>());
        } else if (body.contains("gold_id") && body.at("gold_id").is_string()) {
            gold = store_->get_gold(body.at("gold_id").get<std::string>());
        } else {
            throw Error(ErrorCode::BadRequest, "provide gold_csv or gold_id");
        }
    } else {
        if (!run_id) throw Error(ErrorCode::BadRequest, "missing ?run_id=");
        gold = parse_gold_csv(req.body);
    }
    const ClassificationRun run = store_->get_run(*run_id);
    const MetricsReport report = evaluate_run(gold, run);
    if (param(req, "format").value_or("json") == "csv") {
        return ApiResponse{200, "text/csv; charset=utf-8", metrics_report_csv(report), {}};
    }
    return json_response(200, json_io::to_json(report));
}

}  // namespace tutorlens
