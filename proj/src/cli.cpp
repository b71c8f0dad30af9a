#include "tutorlens/cli.hpp"

#include "tutorlens/api.hpp"
#include "tutorlens/engine.hpp"
#include "tutorlens/evaluation.hpp"
#include "tutorlens/fsutil.hpp"
#include "tutorlens/json_io.hpp"
#include "tutorlens/results.hpp"
#include "tutorlens/storage.hpp"
#include "tutorlens/text.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>

namespace tutorlens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_required(const std::string& path) {
    auto contents = read_file(path);
    if (!contents) throw Error(ErrorCode::NotFound, "cannot read " + path);
    return *contents;
}

void write_output(const std::string& path, const std::string& contents, std::ostream& out) {
    if (path == "-") {
        out << contents;
        return;
    }
    write_file_atomic(path, contents);
}

std::vector<StrategyId> parse_strategy_list(const std::string& list) {
    if (list == "all") return {kAllStrategies.begin(), kAllStrategies.end()};
    std::vector<StrategyId> out;
    std::string item;
    auto flush = [&] {
        const auto trimmed = text::trim(item);
        if (trimmed.empty()) return;
        const auto sid = strategy_from_slug(trimmed);
        if (!sid) throw Error(ErrorCode::InvalidConfig, "unknown strategy '" + std::string(trimmed) + "'");
        out.push_back(*sid);
        item.clear();
    };
    for (char c : list) {
        if (c == ',') {
            flush();
            item.clear();
        } else {
            item.push_back(c);
        }
    }
    flush();
    return out;
}

struct ClassifyArgs {
    std::string input;
    std::string id;
    std::string strategies = "all";
    std::string provider = "mock";
    std::string fixture;
    std::string record;
    std::size_t context_k = kDefaultContextK;
    std::string out = "-";
    std::string run_id;
    std::string data_dir;
    ProviderConfig pc;
};

Transcript load_input_transcript(const std::string& input, const std::string& id_flag) {
    const std::string id = id_flag.empty() ? text::slugify(fs::path(input).stem().string()) : id_flag;
    if (!text::is_safe_id(id)) throw Error(ErrorCode::InvalidId, "transcript id '" + id + "'");
    return parse_transcript_csv(read_required(input), id);
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
    const Transcript t = load_input_transcript(a.input, a.id);

    RunConfig cfg;
    cfg.strategy_ids = parse_strategy_list(a.strategies);
    cfg.context_k = a.context_k;
    cfg.provider = a.pc;
    const auto kind = provider_kind_from_string(a.provider);
    if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown provider '" + a.provider + "'");
    cfg.provider.kind = *kind;
    cfg.provider.fixture_path = a.fixture;
    cfg.run_id = a.run_id.empty() ? generate_run_id() : a.run_id;
    cfg.created_at = now_timestamp();
    validate(cfg);

    std::unique_ptr<Store> store;
    if (!a.data_dir.empty()) {
        store = std::make_unique<Store>(a.data_dir);
        if (!store->has_transcript(t.id)) store->put_transcript(t);
    }
    ProviderPtr provider = make_provider(cfg.provider);
    if (store && cfg.provider.kind == ProviderKind::Http) provider = with_cache(provider, store->cache());
    if (!a.record.empty()) provider = record_fixture(provider, a.record);

    const ClassificationRun run = classify_transcript(*provider, t, cfg, store.get());
    json doc = json_io::to_json(run);
    doc["transcript"] = json_io::to_json(t);
    write_output(a.out, json_io::dump(doc), out);

    std::size_t errors = 0;
    for (const auto& r : run.records) errors += r.error ? 1 : 0;
    if (a.out != "-") {
        out << "run " << run.config.run_id << ": " << run.records.size() << " records (" << errors << " errors) -> "
            << a.out << '\n';
    }
    return 0;
}

struct RunFile {
    ClassificationRun run;
    std::optional<Transcript> transcript;
};

RunFile load_run_file(const std::string& path) {
    const json doc = json_io::parse(read_required(path));
    RunFile rf{json_io::run_from_json(doc), std::nullopt};
    if (doc.contains("transcript")) rf.transcript = json_io::transcript_from_json(doc.at("transcript"));
    return rf;
}

int cmd_evaluate(const std::string& run_path, const std::string& gold_path, const std::string& report_path,
                 std::string format, std::ostream& out) {
    const RunFile rf = load_run_file(run_path);
    const auto gold = parse_gold_csv(read_required(gold_path));
    const MetricsReport report = evaluate_run(gold, rf.run);
    if (format.empty()) format = fs::path(report_path).extension() == ".csv" ? "csv" : "json";
    if (format != "json" && format != "csv") throw Error(ErrorCode::BadRequest, "format must be json or csv");
    write_output(report_path, format == "csv" ? metrics_report_csv(report) : json_io::dump(json_io::to_json(report)), out);
    if (report_path != "-") {
        out << "matched " << report.matched_pairs << " pairs, " << report.unmatched_gold << " unmatched gold, "
            << report.unmatched_predictions << " unmatched predictions -> " << report_path << '\n';
    }
    return 0;
}

int cmd_export(const std::string& run_path, const std::string& format, const std::string& transcript_path,
               const std::string& out_path, std::ostream& out) {
    if (format != "csv") throw Error(ErrorCode::BadRequest, "unsupported export format '" + format + "'");
    RunFile rf = load_run_file(run_path);
    if (!transcript_path.empty()) {
        rf.transcript = parse_transcript_csv(read_required(transcript_path), rf.run.transcript_id);
    }
    if (!rf.transcript) {
        throw Error(ErrorCode::BadRequest, "run file carries no transcript; pass --transcript FILE");
    }
    write_output(out_path, export_csv(table_rows(rf.run, *rf.transcript)), out);
    return 0;
}

int cmd_prompts(const std::string& input, const std::string& id, const std::string& strategies, std::size_t context_k,
                const std::string& model, bool show, std::ostream& out) {
    const Transcript t = load_input_transcript(input, id);
    json list = json::array();
    for (StrategyId sid : parse_strategy_list(strategies)) {
        for (const auto& u : t.utterances) {
            if (u.speaker != Speaker::Tutor) continue;
            const Prompt p = build_prompt(find_strategy(sid), t, u.index, context_k, LabelFormat::XmlTag, model);
            json item = {{"turn", u.index},
                         {"strategy", slug(sid)},
                         {"prompt_hash", p.content_hash},
                         {"corrective_hash", prompt_hash(p.system_text, corrective_user_text(p.user_text), model)}};
            if (show) {
                item["system_text"] = p.system_text;
                item["user_text"] = p.user_text;
            }
            list.push_back(std::move(item));
        }
    }
    out << json_io::dump(list);
    return 0;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& data_dir, std::ostream& out) {
    auto store = std::make_shared<Store>(Store::resolve_data_dir(data_dir.empty() ? std::nullopt
                                                                                   : std::optional<std::string>(data_dir)));
    Service service(store);
    HttpServer server(service);
    out << "tutorlens serving " << store->root().string() << " on http://" << host << ':' << port << std::endl;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const bool ok = server.listen(host, port);
    g_server = nullptr;
    if (!ok) throw Error(ErrorCode::StorageFailed, "cannot listen on " + host + ":" + std::to_string(port));
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"tutorlens: classify tutor turns against tutoring-strategy rubrics with a chat model"};
    app.require_subcommand(1);

    ClassifyArgs ca;
    auto* classify = app.add_subcommand("classify", "Classify every tutor turn of a transcript CSV");
    classify->add_option("--input", ca.input, "Transcript CSV (turn,speaker,text)")->required();
    classify->add_option("--id", ca.id, "Transcript id (default: slug of the file name)");
    classify->add_option("--strategies", ca.strategies, "Comma-separated strategy slugs or 'all'");
    classify->add_option("--provider", ca.provider, "http | mock | replay");
    classify->add_option("--fixture", ca.fixture, "Replay fixture (replay provider)");
    classify->add_option("--record", ca.record, "Record every completion into this fixture file");
    classify->add_option("--context-k", ca.context_k, "Preceding utterances shown to the model");
    classify->add_option("--out", ca.out, "Run document to write ('-' for stdout)");
    classify->add_option("--run-id", ca.run_id, "Run id (default: generated)");
    classify->add_option("--data-dir", ca.data_dir, "Also persist the transcript and run into this store");
    classify->add_option("--model", ca.pc.model_id, "Model id");
    classify->add_option("--base-url", ca.pc.base_url, "Chat-completions base URL (http provider)");
    classify->add_option("--api-key-env", ca.pc.api_key_ref, "Env var holding the API key");
    classify->add_option("--temperature", ca.pc.temperature, "Sampling temperature");
    classify->add_option("--max-retries", ca.pc.max_retries, "Retries on transient failures");
    classify->add_option("--max-in-flight", ca.pc.max_in_flight, "Concurrent requests");
    classify->add_option("--min-interval-ms", ca.pc.min_request_interval_ms, "Minimum gap between requests");

    std::string run_path, gold_path, report_path = "-", eval_format;
    auto* evaluate = app.add_subcommand("evaluate", "Score a run against gold annotations");
    evaluate->add_option("--run", run_path, "Run document")->required();
    evaluate->add_option("--gold", gold_path, "Gold CSV (transcript_id,turn,strategy,label,annotator)")->required();
    evaluate->add_option("--report", report_path, "Report file ('-' for stdout); .csv writes the CSV table");
    evaluate->add_option("--format", eval_format, "json | csv (default from --report extension)");

    std::string host = "127.0.0.1", data_dir;
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--port", port, "Port");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--data-dir", data_dir, "Data directory (default $TUTORLENS_DATA_DIR)");

    std::string export_run_path, export_format = "csv", export_out = "-", export_transcript;
    auto* exp = app.add_subcommand("export", "Export a run as a CSV table");
    exp->add_option("--run", export_run_path, "Run document")->required();
    exp->add_option("--format", export_format, "csv");
    exp->add_option("--out", export_out, "Output file ('-' for stdout)");
    exp->add_option("--transcript", export_transcript, "Transcript CSV, if the run file does not embed it");

    std::string p_input, p_id, p_strategies = "all", p_model = ProviderConfig{}.model_id;
    std::size_t p_k = kDefaultContextK;
    bool p_show = false;
    auto* prompts = app.add_subcommand("prompts", "List prompt hashes (and optionally texts) for a transcript");
    prompts->add_option("--input", p_input, "Transcript CSV")->required();
    prompts->add_option("--id", p_id, "Transcript id");
    prompts->add_option("--strategies", p_strategies, "Comma-separated strategy slugs or 'all'");
    prompts->add_option("--context-k", p_k, "Preceding utterances shown to the model");
    prompts->add_option("--model", p_model, "Model id");
    prompts->add_flag("--show", p_show, "Include full prompt texts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*classify) return cmd_classify(ca, out);
        if (*evaluate) return cmd_evaluate(run_path, gold_path, report_path, eval_format, out);
        if (*serve) return cmd_serve(host, port, data_dir, out);
        if (*exp) return cmd_export(export_run_path, export_format, export_transcript, export_out, out);
        if (*prompts) return cmd_prompts(p_input, p_id, p_strategies, p_k, p_model, p_show, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: Internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tutorlens
