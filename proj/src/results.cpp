#include "tutorlens/results.hpp"

#include "tutorlens/csv.hpp"
#include "tutorlens/error.hpp"
#include "tutorlens/text.hpp"

#include <charconv>

namespace tutorlens {

namespace {

std::optional<std::string> single_param(const std::multimap<std::string, std::string>& params, const std::string& key) {
    const auto [lo, hi] = params.equal_range(key);
    if (lo == hi) return std::nullopt;
    if (std::next(lo) != hi) throw Error(ErrorCode::BadRequest, "filter '" + key + "' given more than once");
    if (lo->second.empty()) return std::nullopt;
    return lo->second;
}

}  // namespace

TableFilter table_filter_from_params(const std::multimap<std::string, std::string>& params) {
    TableFilter f;
    if (const auto v = single_param(params, "strategy")) {
        f.strategy = strategy_from_slug(*v);
        if (!f.strategy) throw Error(ErrorCode::BadRequest, "unknown strategy filter '" + *v + "'");
    }
    if (const auto v = single_param(params, "label")) {
        f.label = label_from_string(*v);
        if (!f.label || text::trim(*v).size() != v->size()) {
            throw Error(ErrorCode::BadRequest, "label filter must be -1, 0 or 1, got '" + *v + "'");
        }
    }
    if (const auto v = single_param(params, "speaker")) {
        const std::string lower = text::to_lower_ascii(*v);
        if (lower == "tutor") f.speaker = Speaker::Tutor;
        else if (lower == "student") f.speaker = Speaker::Student;
        else throw Error(ErrorCode::BadRequest, "speaker filter must be tutor or student, got '" + *v + "'");
    }
    return f;
}

std::vector<TableRow> table_rows(const ClassificationRun& run, const Transcript& t) {
    std::vector<TableRow> rows;
    rows.reserve(run.records.size());
    for (const auto& r : run.records) {
        if (r.utterance_index >= t.utterances.size()) {
            throw Error(ErrorCode::StoreCorrupt, "run " + run.config.run_id + " references missing turn " +
                                                     std::to_string(r.utterance_index));
        }
        const Utterance& u = t.utterances[r.utterance_index];
        rows.push_back(TableRow{run.config.run_id, run.transcript_id, r.utterance_index, u.speaker, u.text,
                                r.strategy_id, r.label, r.error ? r.error->message : r.rationale});
    }
    return rows;
}

std::vector<TableRow> filter_rows(const std::vector<TableRow>& rows, const TableFilter& f) {
    std::vector<TableRow> out;
    for (const auto& row : rows) {
        if (f.strategy && row.strategy_id != *f.strategy) continue;
        if (f.label && row.label != f.label) continue;
        if (f.speaker && row.speaker != *f.speaker) continue;
        out.push_back(row);
    }
    return out;
}

std::string export_csv(const std::vector<TableRow>& rows) {
    std::string out = "transcript_id,turn,speaker,text,strategy,label,rationale\n";
    for (const auto& r : rows) {
        out += csv::format_record({r.transcript_id, std::to_string(r.utterance_index), std::string(to_string(r.speaker)),
                                   r.text, std::string(slug(r.strategy_id)),
                                   r.label ? std::to_string(to_int(*r.label)) : std::string(), r.rationale});
    }
    return out;
}

std::vector<TableRow> parse_export_csv(std::string_view bytes) {
    const auto records = csv::parse(bytes);
    static const csv::Record kHeader{"transcript_id", "turn", "speaker", "text", "strategy", "label", "rationale"};
    if (records.empty() || records.front() != kHeader) throw Error(ErrorCode::BadHeader, "not a results export");
    std::vector<TableRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.size() != kHeader.size()) throw Error(ErrorCode::MalformedRow, "expected 7 fields", i);
        TableRow row;
        row.transcript_id = r[0];
        auto [ptr, ec] = std::from_chars(r[1].data(), r[1].data() + r[1].size(), row.utterance_index);
        if (ec != std::errc{} || ptr != r[1].data() + r[1].size()) throw Error(ErrorCode::MalformedRow, "bad turn", i);
        const auto speaker = speaker_from_string(r[2]);
        if (!speaker) throw Error(ErrorCode::UnknownSpeaker, "unknown speaker", i);
        row.speaker = *speaker;
        row.text = r[3];
        const auto sid = strategy_from_slug(r[4]);
        if (!sid) throw Error(ErrorCode::UnknownStrategy, "unknown strategy", i);
        row.strategy_id = *sid;
        if (!r[5].empty()) {
            row.label = label_from_string(r[5]);
            if (!row.label) throw Error(ErrorCode::InvalidLabel, "bad label", i);
        }
        row.rationale = r[6];
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json to_json(const TableRow& row) {
    return {{"run_id", row.run_id},
            {"transcript_id", row.transcript_id},
            {"utterance_index", row.utterance_index},
            {"speaker", to_string(row.speaker)},
            {"text", row.text},
            {"strategy", slug(row.strategy_id)},
            {"label", row.label ? nlohmann::json(to_int(*row.label)) : nlohmann::json(nullptr)},
            {"rationale", row.rationale}};
}

}  // namespace tutorlens
