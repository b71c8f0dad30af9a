#pragma once

#include "tutorlens/engine.hpp"
#include "tutorlens/gateway.hpp"
#include "tutorlens/model.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace tutorlens {

// File-backed store rooted at one data directory:
//   transcripts/{id}.json  runs/{run_id}.json  gold/{id}.csv  cache/{key}.txt
// Every write goes through write-temp-then-rename. Single writer process.
class Store final : public RunSink {
public:
    struct TranscriptSummary {
        std::string id;
        std::string title;
        std::size_t utterance_count = 0;

        friend bool operator==(const TranscriptSummary&, const TranscriptSummary&) = default;
    };

    explicit Store(std::filesystem::path root);

    // --data-dir flag, else $TUTORLENS_DATA_DIR, else ./tutorlens-data.
    static std::filesystem::path resolve_data_dir(const std::optional<std::string>& flag);

    [[nodiscard]] const std::filesystem::path& root() const { return root_; }

    std::string put_transcript(const Transcript& t, bool overwrite = false);
    [[nodiscard]] Transcript get_transcript(const std::string& id) const;
    [[nodiscard]] bool has_transcript(const std::string& id) const;
    [[nodiscard]] std::vector<TranscriptSummary> list_transcripts() const;

    void put_run(const ClassificationRun& run) override;
    void put_run(const ClassificationRun& run, bool overwrite);
    [[nodiscard]] ClassificationRun get_run(const std::string& run_id) const;
    // Sorted by run_id; optionally only runs over one transcript.
    [[nodiscard]] std::vector<ClassificationRun> list_runs(const std::optional<std::string>& transcript_id = {}) const;

    void put_gold(const std::string& id, const std::vector<GoldAnnotation>& gold, bool overwrite = false);
    [[nodiscard]] std::vector<GoldAnnotation> get_gold(const std::string& id) const;
    [[nodiscard]] std::vector<std::string> list_gold() const;

    // Response cache persisted under cache/.
    [[nodiscard]] std::shared_ptr<CacheStore> cache() const;

    // Runs between temp-file completion and rename; throwing from it
    // simulates a crash mid-write.
    void set_before_rename_hook(std::function<void(const std::filesystem::path&)> hook);

private:
    [[nodiscard]] std::filesystem::path doc_path(const char* dir, const std::string& id, const char* ext) const;
    void write_doc(const std::filesystem::path& path, const std::string& id, const std::string& contents,
                   bool overwrite);
    [[nodiscard]] std::vector<std::string> list_ids(const char* dir, const char* ext) const;

    std::filesystem::path root_;
    std::function<void(const std::filesystem::path&)> before_rename_;
    mutable std::mutex write_mutex_;
};

}  // namespace tutorlens
