#pragma once

#include "tutorlens/model.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tutorlens {

struct DialogueLine {
    Speaker speaker = Speaker::Tutor;
    std::string text;

    friend bool operator==(const DialogueLine&, const DialogueLine&) = default;
};

// A worked few-shot example. The last context line is the tutor turn the
// rationale and label refer to.
struct Exemplar {
    std::vector<DialogueLine> context;
    std::string rationale;
    StrategyLabel label = StrategyLabel::NotApplicable;

    friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

struct Strategy {
    StrategyId id = StrategyId::GivingEffectivePraise;
    std::string display_name;
    std::string definition;
    std::vector<Exemplar> exemplars;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

// Only one wire format exists; the parameter keeps the prompt contract explicit.
enum class LabelFormat { XmlTag };

struct PromptTarget {
    std::string transcript_id;
    std::size_t utterance_index = 0;

    friend bool operator==(const PromptTarget&, const PromptTarget&) = default;
};

struct Prompt {
    std::string system_text;
    std::string user_text;
    StrategyId strategy_id = StrategyId::GivingEffectivePraise;
    PromptTarget target;
    std::string content_hash;

    friend bool operator==(const Prompt&, const Prompt&) = default;
};

struct ParsedLabel {
    StrategyLabel label = StrategyLabel::NotApplicable;
    std::string rationale;
};

inline constexpr std::size_t kDefaultContextK = 5;

// Built-in catalog (compiled from strategies/*.json), catalog order.
const std::vector<Strategy>& catalog();
const Strategy& find_strategy(StrategyId id);

// Throws Error(InvalidStrategyContent) when a document violates the
// Strategy invariants: >= 3 exemplars covering all three labels, non-empty
// definition, rationales and contexts, exemplar ending on a tutor line.
Strategy parse_strategy_document(std::string_view json_text);
void validate(const Strategy& s);
// Loads every *.json file in dir; all five strategies must be present once.
std::vector<Strategy> load_catalog(const std::filesystem::path& dir);

std::string render_label_token(StrategyLabel label, LabelFormat format = LabelFormat::XmlTag);

// Hash identifying a completion request for replay/mock purposes.
std::string prompt_hash(std::string_view system_text, std::string_view user_text, std::string_view model_id);

// Windowed context of min(context_k, target_index) preceding utterances plus
// the marked target line. Throws IndexOutOfRange / TargetNotTutor.
Prompt build_prompt(const Strategy& s, const Transcript& t, std::size_t target_index, std::size_t context_k,
                    LabelFormat format, std::string_view model_id);

// user_text for the single corrective re-ask after an unparseable reply.
std::string corrective_user_text(std::string_view user_text, LabelFormat format = LabelFormat::XmlTag);

// Label from the last <label>...</label> token; rationale is the output with
// that token removed, trimmed. Throws UnparseableLabel / InvalidLabel only.
ParsedLabel parse_label(std::string_view model_output);

}  // namespace tutorlens
