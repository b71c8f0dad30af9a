#include "tutorlens/storage.hpp"

#include "tutorlens/error.hpp"
#include "tutorlens/fsutil.hpp"
#include "tutorlens/json_io.hpp"
#include "tutorlens/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>

namespace tutorlens {

namespace fs = std::filesystem;

namespace {

constexpr const char* kTranscripts = "transcripts";
constexpr const char* kRuns = "runs";
constexpr const char* kGold = "gold";
constexpr const char* kCache = "cache";

void require_safe_id(const std::string& id) {
    if (!text::is_safe_id(id)) {
        throw Error(ErrorCode::InvalidId, "id '" + id + "' must be 1-128 chars of [a-z0-9_-]");
    }
}

template <typename F>
auto parse_doc(const fs::path& path, const std::string& contents, F&& parse) {
    try {
        return parse(contents);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::StoreCorrupt, path.string() + ": " + e.what());
    }
}

class DirectoryCacheStore final : public CacheStore {
public:
    explicit DirectoryCacheStore(fs::path dir) : dir_(std::move(dir)) {}

    std::optional<std::string> get(const std::string& key) override {
        if (!text::is_safe_id(key)) return std::nullopt;
        return read_file(dir_ / (key + ".txt"));
    }

    void put(const std::string& key, const std::string& text) override {
        if (!text::is_safe_id(key)) return;
        write_file_atomic(dir_ / (key + ".txt"), text);
    }

    void clear() override {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(dir_, ec)) fs::remove(entry.path(), ec);
    }

private:
    fs::path dir_;
};

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
    for (const char* sub : {kTranscripts, kRuns, kGold, kCache}) {
        std::error_code ec;
        fs::create_directories(root_ / sub, ec);
        if (ec) throw Error(ErrorCode::StorageFailed, "cannot create " + (root_ / sub).string() + ": " + ec.message());
    }
}

fs::path Store::resolve_data_dir(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("TUTORLENS_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return "tutorlens-data";
}

void Store::set_before_rename_hook(std::function<void(const fs::path&)> hook) { before_rename_ = std::move(hook); }

fs::path Store::doc_path(const char* dir, const std::string& id, const char* ext) const {
    return root_ / dir / (id + ext);
}

void Store::write_doc(const fs::path& path, const std::string& id, const std::string& contents, bool overwrite) {
    std::lock_guard lock(write_mutex_);
    std::error_code ec;
    if (!overwrite && fs::exists(path, ec)) throw Error(ErrorCode::IdConflict, "'" + id + "' already exists");
    write_file_atomic(path, contents, before_rename_);
}

std::vector<std::string> Store::list_ids(const char* dir, const char* ext) const {
    std::vector<std::string> ids;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root_ / dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const auto& p = entry.path();
        if (p.extension() != ext) continue;
        const std::string stem = p.stem().string();
        if (text::is_safe_id(stem)) ids.push_back(stem);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::string Store::put_transcript(const Transcript& t, bool overwrite) {
    require_safe_id(t.id);
    validate(t);
    write_doc(doc_path(kTranscripts, t.id, ".json"), t.id, json_io::dump(json_io::to_json(t)), overwrite);
    return t.id;
}

bool Store::has_transcript(const std::string& id) const {
    std::error_code ec;
    return text::is_safe_id(id) && fs::exists(doc_path(kTranscripts, id, ".json"), ec);
}

Transcript Store::get_transcript(const std::string& id) const {
    if (!text::is_safe_id(id)) throw Error(ErrorCode::NotFound, "transcript '" + id + "'");
    const auto path = doc_path(kTranscripts, id, ".json");
    const auto contents = read_file(path);
    if (!contents) throw Error(ErrorCode::NotFound, "transcript '" + id + "'");
    return parse_doc(path, *contents,
                     [](const std::string& s) { return json_io::transcript_from_json(json_io::parse(s)); });
}

std::vector<Store::TranscriptSummary> Store::list_transcripts() const {
    std::vector<TranscriptSummary> out;
    for (const auto& id : list_ids(kTranscripts, ".json")) {
        const Transcript t = get_transcript(id);
        out.push_back(TranscriptSummary{t.id, t.title, t.utterances.size()});
    }
    return out;
}

void Store::put_run(const ClassificationRun& run) { put_run(run, false); }

void Store::put_run(const ClassificationRun& run, bool overwrite) {
    require_safe_id(run.config.run_id);
    write_doc(doc_path(kRuns, run.config.run_id, ".json"), run.config.run_id, json_io::dump(json_io::to_json(run)),
              overwrite);
}

ClassificationRun Store::get_run(const std::string& run_id) const {
    if (!text::is_safe_id(run_id)) throw Error(ErrorCode::NotFound, "run '" + run_id + "'");
    const auto path = doc_path(kRuns, run_id, ".json");
    const auto contents = read_file(path);
    if (!contents) throw Error(ErrorCode::NotFound, "run '" + run_id + "'");
    return parse_doc(path, *contents, [](const std::string& s) { return json_io::run_from_json(json_io::parse(s)); });
}

std::vector<ClassificationRun> Store::list_runs(const std::optional<std::string>& transcript_id) const {
    std::vector<ClassificationRun> out;
    for (const auto& id : list_ids(kRuns, ".json")) {
        ClassificationRun run = get_run(id);
        if (transcript_id && run.transcript_id != *transcript_id) continue;
        out.push_back(std::move(run));
    }
    return out;
}

void Store::put_gold(const std::string& id, const std::vector<GoldAnnotation>& gold, bool overwrite) {
    require_safe_id(id);
    write_doc(doc_path(kGold, id, ".csv"), id, serialize_gold_csv(gold), overwrite);
}

std::vector<GoldAnnotation> Store::get_gold(const std::string& id) const {
    if (!text::is_safe_id(id)) throw Error(ErrorCode::NotFound, "gold set '" + id + "'");
    const auto path = doc_path(kGold, id, ".csv");
    const auto contents = read_file(path);
    if (!contents) throw Error(ErrorCode::NotFound, "gold set '" + id + "'");
    return parse_doc(path, *contents, [](const std::string& s) { return parse_gold_csv(s); });
}

std::vector<std::string> Store::list_gold() const { return list_ids(kGold, ".csv"); }

std::shared_ptr<CacheStore> Store::cache() const { return std::make_shared<DirectoryCacheStore>(root_ / kCache); }

}  // namespace tutorlens
