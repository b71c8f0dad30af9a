#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tutorlens {

enum class Speaker { Tutor, Student };

std::string_view to_string(Speaker s);
// Case-insensitive; accepts the aliases tutor/teacher and student.
std::optional<Speaker> speaker_from_string(std::string_view s);
// Uppercase prompt prefix: "TUTOR" / "STUDENT".
std::string_view speaker_tag(Speaker s);

// Three-valued outcome of applying one strategy rubric to one turn.
enum class StrategyLabel : std::int8_t {
    NotApplicable = -1,
    Undesired = 0,
    Desired = 1,
};

inline constexpr std::array<StrategyLabel, 3> kAllLabels{
    StrategyLabel::NotApplicable, StrategyLabel::Undesired, StrategyLabel::Desired};

constexpr int to_int(StrategyLabel l) noexcept { return static_cast<int>(l); }
// Position in the canonical (-1, 0, 1) ordering used by matrices and counts.
constexpr std::size_t label_slot(StrategyLabel l) noexcept { return static_cast<std::size_t>(to_int(l) + 1); }
std::optional<StrategyLabel> label_from_int(long long v) noexcept;
// Accepts exactly "-1", "0" or "1" (surrounding ASCII whitespace ignored).
std::optional<StrategyLabel> label_from_string(std::string_view s) noexcept;
std::string_view label_name(StrategyLabel l);

enum class StrategyId {
    GivingEffectivePraise,
    ReactingToErrors,
    DeterminingWhatStudentsKnow,
    HelpingStudentsManageInequity,
    RespondingToNegativeSelfTalk,
};

// Catalog order.
inline constexpr std::array<StrategyId, 5> kAllStrategies{
    StrategyId::GivingEffectivePraise,
    StrategyId::ReactingToErrors,
    StrategyId::DeterminingWhatStudentsKnow,
    StrategyId::HelpingStudentsManageInequity,
    StrategyId::RespondingToNegativeSelfTalk,
};

std::string_view slug(StrategyId id);
std::optional<StrategyId> strategy_from_slug(std::string_view s);
constexpr std::size_t catalog_position(StrategyId id) noexcept { return static_cast<std::size_t>(id); }

struct Utterance {
    std::size_t index = 0;
    Speaker speaker = Speaker::Tutor;
    std::string text;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Transcript {
    std::string id;
    std::string title;
    std::vector<Utterance> utterances;

    [[nodiscard]] std::size_t tutor_turn_count() const;

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct GoldAnnotation {
    std::string transcript_id;
    std::size_t utterance_index = 0;
    StrategyId strategy_id = StrategyId::GivingEffectivePraise;
    StrategyLabel label = StrategyLabel::NotApplicable;
    std::string annotator_id;

    friend bool operator==(const GoldAnnotation&, const GoldAnnotation&) = default;
};

// Checks the Transcript invariants (non-empty, contiguous indices, trimmed
// non-empty text). Throws Error(MalformedRow) describing the first violation.
void validate(const Transcript& t);

// Header `turn,speaker,text`. The turn column must read 0,1,2,...; indices
// are re-derived from row order. An empty title defaults to the id.
Transcript parse_transcript_csv(std::string_view bytes, std::string id, std::string title = {});
std::string serialize_transcript_csv(const Transcript& t);

// Header `transcript_id,turn,strategy,label,annotator`. Rows keep file order.
std::vector<GoldAnnotation> parse_gold_csv(std::string_view bytes);
std::string serialize_gold_csv(const std::vector<GoldAnnotation>& gold);

}  // namespace tutorlens
