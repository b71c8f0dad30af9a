#pragma once

#include "tutorlens/engine.hpp"
#include "tutorlens/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tutorlens {

// One classification verdict joined with its utterance. For error records
// label is empty and rationale carries the error message.
struct TableRow {
    std::string run_id;
    std::string transcript_id;
    std::size_t utterance_index = 0;
    Speaker speaker = Speaker::Tutor;
    std::string text;
    StrategyId strategy_id = StrategyId::GivingEffectivePraise;
    std::optional<StrategyLabel> label;
    std::string rationale;

    friend bool operator==(const TableRow&, const TableRow&) = default;
};

// Conjunctive; unset members match everything.
struct TableFilter {
    std::optional<StrategyId> strategy;
    std::optional<StrategyLabel> label;
    std::optional<Speaker> speaker;
};

// Reads `strategy`, `label`, `speaker`; empty values mean "no filter",
// anything outside the vocabulary throws Error(BadRequest).
TableFilter table_filter_from_params(const std::multimap<std::string, std::string>& params);

std::vector<TableRow> table_rows(const ClassificationRun& run, const Transcript& t);
std::vector<TableRow> filter_rows(const std::vector<TableRow>& rows, const TableFilter& f);

// Columns `transcript_id,turn,speaker,text,strategy,label,rationale`.
std::string export_csv(const std::vector<TableRow>& rows);
// Inverse of export_csv (run_id is not part of the export and stays empty).
std::vector<TableRow> parse_export_csv(std::string_view bytes);

nlohmann::json to_json(const TableRow& row);

}  // namespace tutorlens
