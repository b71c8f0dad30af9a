#include "tutorlens/strategy.hpp"

#include "tutorlens/error.hpp"
#include "tutorlens/hash.hpp"
#include "tutorlens/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace tutorlens {

namespace {

#include "tutorlens/builtin_strategies.inc"

using nlohmann::json;

constexpr std::string_view kSystemText =
    "You are an experienced tutor trainer reviewing transcripts of one-on-one online English lessons "
    "between a tutor and a student. You judge one tutoring strategy at a time for a single tutor turn. "
    "Think through the evidence step by step before giving your verdict.";

constexpr std::string_view kTargetMarker = ">> ";

[[noreturn]] void bad_content(const std::string& what) { throw Error(ErrorCode::InvalidStrategyContent, what); }

// One physical line per utterance inside a prompt.
std::string single_line(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_break = false;
    for (char c : s) {
        if (c == '\n' || c == '\r') {
            if (!in_break) out.push_back(' ');
            in_break = true;
            continue;
        }
        in_break = false;
        out.push_back(c);
    }
    return out;
}

void append_line(std::string& out, Speaker speaker, std::string_view body, bool target) {
    if (target) out += kTargetMarker;
    out += speaker_tag(speaker);
    out += ": ";
    out += single_line(body);
    out += '\n';
}

std::string labels_legend(LabelFormat format) {
    std::string out = "Labels:\n";
    out += render_label_token(StrategyLabel::Desired, format) + " = the tutor used this strategy in a desired way\n";
    out += render_label_token(StrategyLabel::Undesired, format) +
           " = the tutor used this strategy in an undesired way\n";
    out += render_label_token(StrategyLabel::NotApplicable, format) + " = this strategy does not apply to the turn\n";
    return out;
}

std::string token_choices(LabelFormat format) {
    return render_label_token(StrategyLabel::Desired, format) + ", " +
           render_label_token(StrategyLabel::Undesired, format) + ", or " +
           render_label_token(StrategyLabel::NotApplicable, format);
}

std::string get_string(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) bad_content(where + ": missing string '" + key + "'");
    return j.at(key).get<std::string>();
}

std::vector<Strategy> parse_builtin() {
    std::vector<Strategy> out;
    for (std::string_view doc : kBuiltinStrategyDocs) out.push_back(parse_strategy_document(doc));
    return out;
}

std::vector<Strategy> ordered_complete(std::vector<Strategy> strategies) {
    std::array<int, kAllStrategies.size()> seen{};
    for (const auto& s : strategies) ++seen[catalog_position(s.id)];
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i] != 1) {
            bad_content("strategy '" + std::string(slug(kAllStrategies[i])) + "' defined " + std::to_string(seen[i]) +
                        " times");
        }
    }
    std::sort(strategies.begin(), strategies.end(),
              [](const Strategy& a, const Strategy& b) { return catalog_position(a.id) < catalog_position(b.id); });
    return strategies;
}

}  // namespace

void validate(const Strategy& s) {
    const std::string where(slug(s.id));
    if (text::trim(s.display_name).empty()) bad_content(where + ": empty display_name");
    if (text::trim(s.definition).empty()) bad_content(where + ": empty definition");
    if (s.exemplars.size() < 3) bad_content(where + ": needs at least 3 exemplars");
    std::array<bool, 3> covered{};
    for (std::size_t i = 0; i < s.exemplars.size(); ++i) {
        const auto& e = s.exemplars[i];
        const std::string ew = where + " exemplar " + std::to_string(i);
        if (e.context.empty()) bad_content(ew + ": empty context");
        if (text::trim(e.rationale).empty()) bad_content(ew + ": empty rationale");
        for (const auto& line : e.context) {
            if (text::trim(line.text).empty()) bad_content(ew + ": empty context line");
        }
        if (e.context.back().speaker != Speaker::Tutor) bad_content(ew + ": last context line must be a tutor turn");
        covered[label_slot(e.label)] = true;
    }
    if (!std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
        bad_content(where + ": exemplars must cover labels -1, 0 and 1");
    }
}

Strategy parse_strategy_document(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        bad_content(std::string("not a JSON document: ") + e.what());
    }
    Strategy s;
    const std::string slug_text = get_string(j, "slug", "strategy");
    const auto id = strategy_from_slug(slug_text);
    if (!id) bad_content("unknown strategy slug '" + slug_text + "'");
    s.id = *id;
    s.display_name = get_string(j, "display_name", slug_text);
    s.definition = get_string(j, "definition", slug_text);
    if (!j.contains("exemplars") || !j.at("exemplars").is_array()) bad_content(slug_text + ": missing exemplars");
    for (const auto& je : j.at("exemplars")) {
        Exemplar e;
        e.rationale = get_string(je, "rationale", slug_text);
        if (!je.contains("label") || !je.at("label").is_number_integer()) bad_content(slug_text + ": exemplar label");
        const auto label = label_from_int(je.at("label").get<long long>());
        if (!label) bad_content(slug_text + ": exemplar label outside {-1,0,1}");
        e.label = *label;
        if (!je.contains("context") || !je.at("context").is_array()) bad_content(slug_text + ": exemplar context");
        for (const auto& jl : je.at("context")) {
            const auto speaker = speaker_from_string(get_string(jl, "speaker", slug_text));
            if (!speaker) bad_content(slug_text + ": unknown speaker in exemplar");
            e.context.push_back(DialogueLine{*speaker, get_string(jl, "text", slug_text)});
        }
        s.exemplars.push_back(std::move(e));
    }
    validate(s);
    return s;
}

std::vector<Strategy> load_catalog(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (ec) bad_content("cannot read strategy directory " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    std::vector<Strategy> out;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        out.push_back(parse_strategy_document(buf.str()));
    }
    return ordered_complete(std::move(out));
}

const std::vector<Strategy>& catalog() {
    static const std::vector<Strategy> strategies = ordered_complete(parse_builtin());
    return strategies;
}

const Strategy& find_strategy(StrategyId id) { return catalog()[catalog_position(id)]; }

std::string render_label_token(StrategyLabel label, LabelFormat /*format*/) {
    return "<label>" + std::to_string(to_int(label)) + "</label>";
}

std::string prompt_hash(std::string_view system_text, std::string_view user_text, std::string_view model_id) {
    return FieldHasher{}.add(system_text).add(user_text).add(model_id).hex();
}

Prompt build_prompt(const Strategy& s, const Transcript& t, std::size_t target_index, std::size_t context_k,
                    LabelFormat format, std::string_view model_id) {
    if (target_index >= t.utterances.size()) {
        throw Error(ErrorCode::IndexOutOfRange, "target index " + std::to_string(target_index) +
                                                    " outside transcript of " + std::to_string(t.utterances.size()));
    }
    const Utterance& target = t.utterances[target_index];
    if (target.speaker != Speaker::Tutor) {
        throw Error(ErrorCode::TargetNotTutor, "utterance " + std::to_string(target_index) + " is a student turn");
    }

    std::string user;
    user += "Tutoring strategy: " + s.display_name + "\n\n";
    user += "Rubric:\n" + s.definition + "\n\n";
    user += labels_legend(format);
    user += "\nWorked examples:\n";
    for (std::size_t i = 0; i < s.exemplars.size(); ++i) {
        const auto& e = s.exemplars[i];
        user += "\nExample " + std::to_string(i + 1) + "\nDialogue:\n";
        for (std::size_t k = 0; k < e.context.size(); ++k) {
            append_line(user, e.context[k].speaker, e.context[k].text, k + 1 == e.context.size());
        }
        user += "Reasoning: " + single_line(e.rationale) + "\n";
        user += "Answer: " + render_label_token(e.label, format) + "\n";
    }

    user += "\nNow classify the tutor turn marked with \">>\" (turn " + std::to_string(target_index) +
            "). Earlier lines are context only.\nDialogue:\n";
    const std::size_t first = target_index - std::min(context_k, target_index);
    for (std::size_t i = first; i < target_index; ++i) {
        append_line(user, t.utterances[i].speaker, t.utterances[i].text, false);
    }
    append_line(user, target.speaker, target.text, true);
    user += "\nReason step by step about whether and how the marked tutor turn uses \"" + s.display_name +
            "\". Then finish with exactly one label token on its own line: " + token_choices(format) + ".\n";

    Prompt p;
    p.system_text = std::string(kSystemText);
    p.user_text = std::move(user);
    p.strategy_id = s.id;
    p.target = PromptTarget{t.id, target_index};
    p.content_hash = prompt_hash(p.system_text, p.user_text, model_id);
    return p;
}

std::string corrective_user_text(std::string_view user_text, LabelFormat format) {
    std::string out(user_text);
    out += "\nYour previous reply did not end with a valid label token. Reply again: give your reasoning, then "
           "exactly one of " +
           token_choices(format) + " on the final line.\n";
    return out;
}

ParsedLabel parse_label(std::string_view model_output) {
    static constexpr std::string_view kOpen = "<label>";
    static constexpr std::string_view kClose = "</label>";
    const std::size_t close = model_output.rfind(kClose);
    if (close == std::string_view::npos) throw Error(ErrorCode::UnparseableLabel, "no <label>...</label> token");
    const std::size_t open = model_output.substr(0, close).rfind(kOpen);
    if (open == std::string_view::npos) throw Error(ErrorCode::UnparseableLabel, "no <label>...</label> token");

    const std::string_view value = model_output.substr(open + kOpen.size(), close - open - kOpen.size());
    const auto label = label_from_string(value);
    if (!label) {
        std::string shown(value.substr(0, 32));
        throw Error(ErrorCode::InvalidLabel, "label token value '" + shown + "' outside {-1,0,1}");
    }
    std::string rest(model_output.substr(0, open));
    rest.append(model_output.substr(close + kClose.size()));
    return ParsedLabel{*label, std::string(text::trim(rest))};
}

}  // namespace tutorlens
