#include "tutorlens/model.hpp"

#include "tutorlens/csv.hpp"
#include "tutorlens/error.hpp"
#include "tutorlens/text.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <tuple>

namespace tutorlens {

std::string_view to_string(Speaker s) { return s == Speaker::Tutor ? "tutor" : "student"; }

std::string_view speaker_tag(Speaker s) { return s == Speaker::Tutor ? "TUTOR" : "STUDENT"; }

std::optional<Speaker> speaker_from_string(std::string_view s) {
    const std::string lower = text::to_lower_ascii(text::trim(s));
    if (lower == "tutor" || lower == "teacher") return Speaker::Tutor;
    if (lower == "student") return Speaker::Student;
    return std::nullopt;
}

std::optional<StrategyLabel> label_from_int(long long v) noexcept {
    switch (v) {
        case -1: return StrategyLabel::NotApplicable;
        case 0: return StrategyLabel::Undesired;
        case 1: return StrategyLabel::Desired;
        default: return std::nullopt;
    }
}

std::optional<StrategyLabel> label_from_string(std::string_view s) noexcept {
    s = text::trim(s);
    if (s == "-1") return StrategyLabel::NotApplicable;
    if (s == "0") return StrategyLabel::Undesired;
    if (s == "1") return StrategyLabel::Desired;
    return std::nullopt;
}

std::string_view label_name(StrategyLabel l) {
    switch (l) {
        case StrategyLabel::NotApplicable: return "not_applicable";
        case StrategyLabel::Undesired: return "undesired";
        case StrategyLabel::Desired: return "desired";
    }
    return "not_applicable";
}

namespace {

constexpr std::array<std::string_view, 5> kSlugs{
    "giving_effective_praise",
    "reacting_to_errors",
    "determining_what_students_know",
    "helping_students_manage_inequity",
    "responding_to_negative_self_talk",
};

std::optional<std::size_t> parse_index(std::string_view s) {
    s = text::trim(s);
    if (s.empty()) return std::nullopt;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string> normalized_header(const csv::Record& r) {
    std::vector<std::string> out;
    out.reserve(r.size());
    for (const auto& f : r) out.push_back(text::to_lower_ascii(text::trim(f)));
    return out;
}

std::vector<csv::Record> read_records(std::string_view bytes) {
    if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
    return csv::parse(bytes);
}

void require_utf8(const csv::Record& r, std::size_t row) {
    for (const auto& f : r) {
        if (!text::is_valid_utf8(f)) throw Error(ErrorCode::MalformedRow, "field is not valid UTF-8", row);
    }
}

}  // namespace

std::string_view slug(StrategyId id) { return kSlugs[catalog_position(id)]; }

std::optional<StrategyId> strategy_from_slug(std::string_view s) {
    for (std::size_t i = 0; i < kSlugs.size(); ++i) {
        if (kSlugs[i] == s) return kAllStrategies[i];
    }
    return std::nullopt;
}

std::size_t Transcript::tutor_turn_count() const {
    return static_cast<std::size_t>(std::count_if(utterances.begin(), utterances.end(),
                                                  [](const Utterance& u) { return u.speaker == Speaker::Tutor; }));
}

void validate(const Transcript& t) {
    if (t.utterances.empty()) throw Error(ErrorCode::EmptyTranscript, "transcript has no utterances");
    for (std::size_t i = 0; i < t.utterances.size(); ++i) {
        const auto& u = t.utterances[i];
        if (u.index != i) throw Error(ErrorCode::NonContiguousTurns, "utterance index does not match position", i + 1);
        if (u.text.empty() || text::trim(u.text).size() != u.text.size()) {
            throw Error(ErrorCode::MalformedRow, "utterance text must be non-empty and trimmed", i + 1);
        }
    }
}

Transcript parse_transcript_csv(std::string_view bytes, std::string id, std::string title) {
    const auto records = read_records(bytes);
    if (records.empty()) throw Error(ErrorCode::BadHeader, "missing header `turn,speaker,text`");
    if (normalized_header(records.front()) != std::vector<std::string>{"turn", "speaker", "text"}) {
        throw Error(ErrorCode::BadHeader, "expected header `turn,speaker,text`");
    }
    if (records.size() == 1) throw Error(ErrorCode::EmptyTranscript, "no data rows");

    Transcript t;
    t.title = title.empty() ? id : std::move(title);
    t.id = std::move(id);
    t.utterances.reserve(records.size() - 1);
    for (std::size_t row = 1; row < records.size(); ++row) {
        const auto& r = records[row];
        if (r.size() != 3) throw Error(ErrorCode::MalformedRow, "expected 3 fields", row);
        require_utf8(r, row);
        const std::size_t expected = row - 1;
        const auto turn = parse_index(r[0]);
        if (!turn) throw Error(ErrorCode::MalformedRow, "turn is not a non-negative integer", row);
        if (*turn != expected) {
            throw Error(ErrorCode::NonContiguousTurns,
                        "expected turn " + std::to_string(expected) + ", found " + std::to_string(*turn), row);
        }
        const auto speaker = speaker_from_string(r[1]);
        if (!speaker) throw Error(ErrorCode::UnknownSpeaker, "unknown speaker '" + r[1] + "'", row);
        const std::string_view body = text::trim(r[2]);
        if (body.empty()) throw Error(ErrorCode::MalformedRow, "empty utterance text", row);
        t.utterances.push_back(Utterance{expected, *speaker, std::string(body)});
    }
    return t;
}

std::string serialize_transcript_csv(const Transcript& t) {
    std::string out = "turn,speaker,text\n";
    for (const auto& u : t.utterances) {
        out += csv::format_record({std::to_string(u.index), std::string(to_string(u.speaker)), u.text});
    }
    return out;
}

std::vector<GoldAnnotation> parse_gold_csv(std::string_view bytes) {
    const auto records = read_records(bytes);
    if (records.empty() || normalized_header(records.front()) !=
                               std::vector<std::string>{"transcript_id", "turn", "strategy", "label", "annotator"}) {
        throw Error(ErrorCode::BadHeader, "expected header `transcript_id,turn,strategy,label,annotator`");
    }
    std::vector<GoldAnnotation> out;
    out.reserve(records.size() - 1);
    std::set<std::tuple<std::string, std::size_t, StrategyId, std::string>> seen;
    for (std::size_t row = 1; row < records.size(); ++row) {
        const auto& r = records[row];
        if (r.size() != 5) throw Error(ErrorCode::MalformedRow, "expected 5 fields", row);
        require_utf8(r, row);
        GoldAnnotation g;
        g.transcript_id = std::string(text::trim(r[0]));
        if (g.transcript_id.empty()) throw Error(ErrorCode::MalformedRow, "empty transcript_id", row);
        const auto turn = parse_index(r[1]);
        if (!turn) throw Error(ErrorCode::MalformedRow, "turn is not a non-negative integer", row);
        g.utterance_index = *turn;
        const auto sid = strategy_from_slug(text::trim(r[2]));
        if (!sid) throw Error(ErrorCode::UnknownStrategy, "unknown strategy '" + r[2] + "'", row);
        g.strategy_id = *sid;
        const auto label = label_from_string(r[3]);
        if (!label) throw Error(ErrorCode::InvalidLabel, "label must be -1, 0 or 1, got '" + r[3] + "'", row);
        g.label = *label;
        g.annotator_id = std::string(text::trim(r[4]));
        if (!seen.emplace(g.transcript_id, g.utterance_index, g.strategy_id, g.annotator_id).second) {
            throw Error(ErrorCode::DuplicateAnnotation, "duplicate (transcript, turn, strategy, annotator)", row);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::string serialize_gold_csv(const std::vector<GoldAnnotation>& gold) {
    std::string out = "transcript_id,turn,strategy,label,annotator\n";
    for (const auto& g : gold) {
        out += csv::format_record({g.transcript_id, std::to_string(g.utterance_index), std::string(slug(g.strategy_id)),
                                   std::to_string(to_int(g.label)), g.annotator_id});
    }
    return out;
}

}  // namespace tutorlens
